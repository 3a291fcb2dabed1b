#pragma once

#include "kgdenoise/blocking.hpp"
#include "kgdenoise/embedding.hpp"
#include "kgdenoise/kg.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace kgd {

enum class SimilarityMode {
    ego,
    neighbor,
    type_aware_neighbor,
    ego_plus_neighbor,
    ego_plus_type_aware,
};

std::string to_string(SimilarityMode mode);
SimilarityMode similarity_mode_from(const std::string& name);

// The type-aware score averages per-type cosines over the types shared by
// both neighborhoods; all_types divides by the full type inventory instead,
// which drags scores toward zero as the inventory grows.
enum class TypeAveraging { shared_types, all_types };

struct ScoredPair {
    EntityId a, b; // canonical order: a < b
    double similarity = 0.0;
};

struct MatchGroup {
    std::vector<EntityId> members; // sorted, size >= 1
    EntityId canonical;            // element of members
};

enum class CanonicalPolicy { min_id, seeded_random };

// Precomputed lookups shared by entity_vector and pair_similarity calls.
struct MatchContext {
    const KnowledgeGraph& graph;
    const EmbeddingTable& table;
    NeighborIndex neighbors;
    std::vector<std::string> type_order; // sorted effective type inventory

    MatchContext(const KnowledgeGraph& g, const EmbeddingTable& t)
        : graph(g), table(t), neighbors(g), type_order(g.type_set()) {}
};

// cos(a, b), defined as 0 when either vector is all-zero; clamped to [-1, 1].
double cosine(const Vector& a, const Vector& b);

// ego: the entity's own vector. neighbor: arithmetic mean over the
// neighborhood (zero vector when isolated). type_aware_neighbor: per-type
// neighbor means concatenated in type_order (zero blocks for absent types).
// ego_plus_*: ego vector concatenated with the respective neighbor vector.
Vector entity_vector(const MatchContext& ctx, const EntityId& e, SimilarityMode mode);

// Cosine of the mode's entity vectors, except type_aware_neighbor which
// averages per-type cosines as selected by `averaging`.
double pair_similarity(const MatchContext& ctx, const EntityId& a, const EntityId& b,
                       SimilarityMode mode,
                       TypeAveraging averaging = TypeAveraging::shared_types);

// Within-block unordered pairs, globally deduplicated, in canonical order.
std::vector<std::pair<EntityId, EntityId>> candidate_pairs(const std::vector<Block>& blocks);

std::vector<ScoredPair> score_pairs(const MatchContext& ctx,
                                    const std::vector<std::pair<EntityId, EntityId>>& pairs,
                                    SimilarityMode mode,
                                    TypeAveraging averaging = TypeAveraging::shared_types);

// Deterministic representative choice. seeded_random draws uniformly from a
// generator keyed by (seed, sorted member ids).
EntityId select_canonical(const std::vector<EntityId>& members, CanonicalPolicy policy,
                          std::uint64_t seed);

// Transitive closure of pairs with similarity strictly above the threshold.
// Entities in no passing pair appear in no group. Groups are sorted by first
// member.
std::vector<MatchGroup> group_by_threshold(const std::vector<ScoredPair>& pairs,
                                           double threshold,
                                           CanonicalPolicy policy = CanonicalPolicy::min_id,
                                           std::uint64_t seed = 0);

struct GroupingOutcome {
    std::vector<MatchGroup> groups;
    long merges = 0; // prospective entity-count reduction
    double achieved_ratio = 0.0;
};

// Processes pairs by descending similarity (ties by pair order), linking
// while similarity is positive, until floor(ratio * entity_count) merges are
// reached or pairs run out. Reports the ratio actually achieved.
GroupingOutcome group_by_target_ratio(const std::vector<ScoredPair>& pairs, long entity_count,
                                      double ratio,
                                      CanonicalPolicy policy = CanonicalPolicy::min_id,
                                      std::uint64_t seed = 0);

} // namespace kgd
