#pragma once

#include "kgdenoise/embedding.hpp"
#include "kgdenoise/kg.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace kgd {

enum class BlockProvenance { semantic, type, structural };

std::string to_string(BlockProvenance p);

// Candidate set of entities compared pairwise downstream. Semantic and type
// blocks partition the entity set; structural blocks may overlap.
struct Block {
    int id = 0;
    std::vector<EntityId> members; // sorted, non-empty
    BlockProvenance provenance = BlockProvenance::semantic;
    std::optional<std::string> origin; // type label or pivot entity id
};

struct KMeansResult {
    std::map<EntityId, int> assignments;
    std::vector<double> sse_log; // within-cluster SSE per iteration, non-increasing
    int cluster_count = 0;
};

// Lloyd's iteration with k-means++ seeding under the Euclidean metric.
// Deterministic for a fixed seed; k is lowered to the number of distinct
// points when it exceeds them; assignment ties break toward the lowest
// cluster index. Throws std::invalid_argument on empty input or k < 1.
KMeansResult kmeans(const std::map<EntityId, Vector>& points, int k, std::uint64_t seed,
                    int max_iters = 100);

// max(1, round-half-up(sqrt(entity_count / 10)))
int semantic_block_count(std::size_t entity_count);

// Clusters description embeddings into semantic_block_count(|E|) blocks; one
// block per non-empty cluster. Requires table coverage of every entity.
std::vector<Block> semantic_blocks(const KnowledgeGraph& g, const EmbeddingTable& table,
                                   std::uint64_t seed);

// One block per effective type; blocks larger than max_block_size are
// subdivided by kmeans with k = ceil(size / max_block_size). The table is
// consulted only when subdivision is needed. max_block_size must be >= 2.
std::vector<Block> type_blocks(const KnowledgeGraph& g, const EmbeddingTable& table,
                               std::size_t max_block_size, std::uint64_t seed);

// One block per entity with at least two neighbors: the neighbor set itself,
// with the pivot entity recorded as origin. Identical member sets are
// deduplicated (keeping the lowest pivot id).
std::vector<Block> structural_blocks(const KnowledgeGraph& g);

} // namespace kgd
