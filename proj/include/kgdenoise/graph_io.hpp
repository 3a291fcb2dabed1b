#pragma once

#include "kgdenoise/kg.hpp"

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace kgd {

enum class GraphFormat { json, tsv_triples };

// Thrown on malformed input or referential violations at load time.
struct LoadError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ReflectionVerdict {
    EntityId source;
    std::string relation;
    EntityId target;
    double score = 0.0; // in [0, 1]
    std::string analysis;
    bool clamped = false; // raw judge score fell outside [0, 1]
};

// Per-stage counters keyed by name (entities_before, triples_after,
// summarizer_invocations, ...). A stage entry is whatever counts that stage
// produced.
using StageCounts = std::map<std::string, long>;

struct ReductionReport {
    long entities_before = 0;
    long entities_after = 0;
    double entity_reduction_pct = 0.0;
    long triples_before = 0;
    long triples_after = 0;
    double triple_reduction_pct = 0.0;
    std::vector<std::pair<std::string, StageCounts>> per_stage;
};

// (before - after) / before * 100, rounded to two decimals; 0 when before
// is 0.
double reduction_pct(long before, long after);

// Parses the canonical JSON schema or a "source<TAB>relation<TAB>target"
// triple-per-line format. TSV synthesizes entities (id = name = surface
// form) with empty descriptions. The loaded graph always passes validate;
// violations surface as LoadError.
KnowledgeGraph load_graph(std::istream& in, GraphFormat format);

// Deterministic canonical form: entities sorted by id, triples by
// (source, relation, target, description, source_chunk). Saving the same
// graph twice yields byte-identical output. Throws std::invalid_argument
// when the graph fails validate.
void save_graph(const KnowledgeGraph& g, std::ostream& out, GraphFormat format = GraphFormat::json);

// One JSON object per line: {"source", "relation", "target", "score",
// "analysis"}. Scores are rounded to two decimals before serialization.
void write_reflection_log(const std::vector<ReflectionVerdict>& verdicts, std::ostream& out);

// Emits the ReductionReport computed from before/after stats plus the given
// stage counters. Throws std::invalid_argument when after exceeds before.
void write_reduction_report(const GraphStats& before, const GraphStats& after,
                            const std::vector<std::pair<std::string, StageCounts>>& stages,
                            std::ostream& out);

ReductionReport make_reduction_report(const GraphStats& before, const GraphStats& after,
                                      std::vector<std::pair<std::string, StageCounts>> stages);

} // namespace kgd
