#pragma once

#include "kgdenoise/blocking.hpp"
#include "kgdenoise/embedding.hpp"
#include "kgdenoise/graph_io.hpp"
#include "kgdenoise/kg.hpp"
#include "kgdenoise/llm_client.hpp"
#include "kgdenoise/matching.hpp"
#include "kgdenoise/merging.hpp"
#include "kgdenoise/reflection.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace kgd {

enum class EmbeddingSource { transe, distmult, complex_bilinear, external_file, service, mock };

std::string to_string(EmbeddingSource source);
EmbeddingSource embedding_source_from(const std::string& name);

std::string to_string(CanonicalPolicy policy);
CanonicalPolicy canonical_policy_from(const std::string& name);
BlockProvenance blocking_strategy_from(const std::string& name);

struct PipelineConfig {
    std::string input_path;
    std::string output_path;
    std::string report_path;
    std::string reflection_log_path;
    std::string blocks_path; // optional stage dumps
    std::string pairs_path;
    std::string groups_path;

    std::uint64_t seed = 0;

    BlockProvenance blocking = BlockProvenance::semantic;
    std::size_t max_block_size = 200;

    EmbeddingSource embedding_source = EmbeddingSource::service;
    std::string external_embeddings_path; // embedding_source == external_file
    TrainConfig train; // trained sources; dimension also sizes the mock

    SimilarityMode similarity_mode = SimilarityMode::ego;
    TypeAveraging type_averaging = TypeAveraging::shared_types;

    // Exactly one grouping criterion; target_ratio 0.4 when neither is set.
    std::optional<double> threshold;
    std::optional<double> target_ratio;

    CanonicalPolicy canonical_policy = CanonicalPolicy::seeded_random;

    MergeStrategy merge_strategy = MergeStrategy::direct_merge;
    std::string synonym_label = "synonym_of";
    long token_budget = 4000;

    bool reflection_enabled = true;
    JudgeConfig judge;

    ServiceConfig service;
};

// Parses the JSON config schema (see README), applies defaults, and
// validates cross-field constraints. Throws std::invalid_argument on
// unknown keys, mistyped values, or conflicting grouping criteria.
PipelineConfig load_pipeline_config(std::istream& in);

// Applies defaults and validates an in-memory config (exactly one grouping
// criterion, valid ranges). Returns the normalized copy.
PipelineConfig normalize_config(PipelineConfig config);

struct PipelineError : std::runtime_error {
    std::string stage;
    PipelineError(const std::string& stage_, const std::string& cause)
        : std::runtime_error("stage " + stage_ + " failed: " + cause), stage(stage_) {}
};

struct PipelineResult {
    KnowledgeGraph graph;
    ReductionReport report;
    std::vector<ReflectionVerdict> verdicts;
    double achieved_ratio = 0.0;
    AggregationStats aggregation;
};

// Builds the entity embedding table the configured way; `client` is required
// for the service source only.
EmbeddingTable build_embeddings(const KnowledgeGraph& g, const PipelineConfig& config,
                                LlmClient* client);

std::vector<Block> build_blocks(const KnowledgeGraph& g, const EmbeddingTable& table,
                                const PipelineConfig& config);

// Full denoise pass: embeddings, blocking, candidate pairs, similarity
// scoring, grouping, merging, then reflection when enabled. Per-stage counts
// land in the report; failures raise PipelineError naming the stage. The
// run is deterministic for fixed seeds with mock backends.
PipelineResult run_pipeline(const KnowledgeGraph& g, const PipelineConfig& config,
                            LlmClient* client = nullptr);

} // namespace kgd
