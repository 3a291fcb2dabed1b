#pragma once

#include "kgdenoise/embedding.hpp"
#include "kgdenoise/kg.hpp"
#include "kgdenoise/matching.hpp"

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace kgd {

enum class VariantKind { casing, whitespace, abbreviation, token_permutation };

std::string to_string(VariantKind kind);
VariantKind variant_kind_from(const std::string& name);

struct NoiseSpec {
    long base_entities = 100;     // total entity budget; clusters carve members from it
    long duplicate_clusters = 0;
    long cluster_size_min = 2;
    long cluster_size_max = 3;
    std::vector<VariantKind> variant_kinds = {
        VariantKind::casing,
        VariantKind::whitespace,
        VariantKind::abbreviation,
        VariantKind::token_permutation,
    };
    double triples_per_entity = 2.0;
    double erroneous_triple_fraction = 0.0;
    std::uint64_t seed = 0;
};

struct GroundTruth {
    std::vector<std::vector<EntityId>> clusters; // planted duplicate groups, sorted
    std::set<TripleKey> bad_triples;             // marker-carrying triples
};

// Deterministic noisy-graph generator. Each planted cluster shares one
// description verbatim across its members while surface names differ by the
// configured variant kinds; a fraction of every member's edges is duplicated
// onto its siblings, and erroneous triples carry kBadTripleMarker in their
// description. Throws std::invalid_argument on infeasible specs
// (duplicate_clusters * cluster_size_max > base_entities) or out-of-range
// fields.
std::pair<KnowledgeGraph, GroundTruth> generate_noisy_kg(const NoiseSpec& spec);

// Hash-based text embedder: equal text maps to an identical unit vector,
// distinct texts land on independent random directions. Input is normalized
// (lowercased, whitespace-collapsed) before hashing, so casing and spacing
// variants of one name share a vector.
class MockEmbedder : public TextEmbedder {
public:
    explicit MockEmbedder(int dimension = 32, std::uint64_t seed = 0);
    std::vector<Vector> embed(const std::vector<std::string>& texts) override;
    Vector embed_one(const std::string& text) const;
    int dimension() const { return dimension_; }

private:
    int dimension_;
    std::uint64_t seed_;
};

// Mock embedding table over a graph: each entity is embedded from its
// description, or from its normalized name when the description is empty.
EmbeddingTable mock_embedding_table(const KnowledgeGraph& g, int dimension = 32,
                                    std::uint64_t seed = 0);

struct PairMetrics {
    double precision = 1.0;
    double recall = 1.0;
    double f1 = 1.0;
    long true_positives = 0;
    long false_positives = 0;
    long false_negatives = 0;
};

// Pairwise ER metrics: a pair is positive iff co-clustered in truth and
// predicted-positive iff co-grouped. Precision defaults to 1 with no
// predicted positives, recall to 1 with no true positives, f1 to 0 when
// both are 0. Throws on overlapping predicted groups.
PairMetrics resolution_metrics(const std::vector<MatchGroup>& predicted,
                               const GroundTruth& truth,
                               const std::vector<EntityId>& universe);

// Precision/recall of removed triple keys against the planted bad set, with
// the same conventions.
PairMetrics reflection_metrics(const std::set<TripleKey>& removed, const GroundTruth& truth,
                               const std::vector<Triple>& all_triples);

} // namespace kgd
