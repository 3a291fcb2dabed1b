#include "kgdenoise/blocking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <stdexcept>

namespace kgd {

std::string to_string(BlockProvenance p) {
    switch (p) {
    case BlockProvenance::semantic: return "semantic";
    case BlockProvenance::type: return "type";
    case BlockProvenance::structural: return "structural";
    }
    return "unknown";
}

KMeansResult kmeans(const std::map<EntityId, Vector>& points, int k, std::uint64_t seed,
                    int max_iters) {
    if (points.empty()) {
        throw std::invalid_argument("kmeans requires at least one point");
    }
    if (k < 1 || max_iters < 1) {
        throw std::invalid_argument("kmeans requires k >= 1 and max_iters >= 1");
    }

    std::vector<EntityId> ids;
    std::vector<Vector> x;
    ids.reserve(points.size());
    x.reserve(points.size());
    for (const auto& [id, v] : points) {
        if (!x.empty() && v.size() != x.front().size()) {
            throw std::invalid_argument("kmeans points must share one dimension");
        }
        ids.push_back(id);
        x.push_back(v);
    }
    const std::size_t n = x.size();

    std::set<std::vector<double>> distinct;
    for (const Vector& v : x) {
        distinct.insert(std::vector<double>(v.data(), v.data() + v.size()));
    }
    const std::size_t target_k = std::min<std::size_t>(static_cast<std::size_t>(k),
                                                       distinct.size());

    // k-means++ seeding: subsequent centers drawn with probability
    // proportional to squared distance from the nearest chosen center.
    std::mt19937_64 rng(seed);
    std::vector<Vector> centers;
    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    centers.push_back(x[first(rng)]);
    std::vector<double> d2(n);
    auto refresh_d2 = [&](const Vector& c) {
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], (x[i] - c).squaredNorm());
        }
    };
    for (std::size_t i = 0; i < n; ++i) {
        d2[i] = (x[i] - centers[0]).squaredNorm();
    }
    while (centers.size() < target_k) {
        double total = 0.0;
        for (double w : d2) {
            total += w;
        }
        if (total <= 0.0) {
            break;
        }
        double r = std::uniform_real_distribution<double>(0.0, total)(rng);
        std::size_t chosen = n;
        double cum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (d2[i] <= 0.0) {
                continue;
            }
            cum += d2[i];
            chosen = i;
            if (cum >= r) {
                break;
            }
        }
        centers.push_back(x[chosen]);
        refresh_d2(centers.back());
    }
    const std::size_t kk = centers.size();

    KMeansResult result;
    result.cluster_count = static_cast<int>(kk);
    std::vector<int> assignment(n, -1);
    for (int iter = 0; iter < max_iters; ++iter) {
        std::vector<int> next(n, 0);
        double sse = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            int best_c = 0;
            for (std::size_t c = 0; c < kk; ++c) {
                double d = (x[i] - centers[c]).squaredNorm();
                if (d < best) {
                    best = d;
                    best_c = static_cast<int>(c);
                }
            }
            next[i] = best_c;
            sse += best;
        }
        result.sse_log.push_back(sse);
        if (next == assignment) {
            break;
        }
        assignment = next;
        for (std::size_t c = 0; c < kk; ++c) {
            Vector sum = Vector::Zero(x.front().size());
            long count = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (assignment[i] == static_cast<int>(c)) {
                    sum += x[i];
                    ++count;
                }
            }
            if (count > 0) { // empty clusters keep their previous center
                centers[c] = sum / static_cast<double>(count);
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        result.assignments[ids[i]] = assignment[i];
    }
    return result;
}

int semantic_block_count(std::size_t entity_count) {
    long k = std::llround(std::sqrt(static_cast<double>(entity_count) / 10.0));
    return static_cast<int>(std::max(1L, k));
}

namespace {

void require_coverage(const EmbeddingTable& table, const std::vector<EntityId>& ids,
                      const std::string& context) {
    std::vector<EntityId> missing = table.missing_ids(ids);
    if (!missing.empty()) {
        throw std::invalid_argument(context + ": embedding table lacks " +
                                    std::to_string(missing.size()) +
                                    " entities; first missing id: \"" + missing.front() + "\"");
    }
}

std::vector<Block> clusters_to_blocks(const KMeansResult& res, BlockProvenance provenance,
                                      const std::optional<std::string>& origin, int& next_id) {
    std::map<int, std::vector<EntityId>> buckets;
    for (const auto& [id, cluster] : res.assignments) {
        buckets[cluster].push_back(id); // sorted by id: assignments iterate in id order
    }
    std::vector<Block> blocks;
    for (auto& [cluster, members] : buckets) {
        blocks.push_back(Block{next_id++, std::move(members), provenance, origin});
    }
    return blocks;
}

} // namespace

std::vector<Block> semantic_blocks(const KnowledgeGraph& g, const EmbeddingTable& table,
                                   std::uint64_t seed) {
    std::vector<EntityId> ids = g.entity_ids();
    if (ids.empty()) {
        return {};
    }
    require_coverage(table, ids, "semantic blocking");
    std::map<EntityId, Vector> points;
    for (const EntityId& id : ids) {
        points[id] = table.entity(id);
    }
    KMeansResult res = kmeans(points, semantic_block_count(ids.size()), seed);
    int next_id = 0;
    return clusters_to_blocks(res, BlockProvenance::semantic, std::nullopt, next_id);
}

std::vector<Block> type_blocks(const KnowledgeGraph& g, const EmbeddingTable& table,
                               std::size_t max_block_size, std::uint64_t seed) {
    if (max_block_size < 2) {
        throw std::invalid_argument("max_block_size must be >= 2");
    }
    std::map<std::string, std::vector<EntityId>> by_type;
    for (const Entity& e : g.entities()) {
        by_type[e.type_or_unknown()].push_back(e.id);
    }
    std::vector<Block> blocks;
    int next_id = 0;
    for (auto& [type, members] : by_type) {
        std::sort(members.begin(), members.end());
        if (members.size() <= max_block_size) {
            blocks.push_back(Block{next_id++, std::move(members), BlockProvenance::type, type});
            continue;
        }
        require_coverage(table, members, "subdividing type block \"" + type + "\"");
        int k = static_cast<int>((members.size() + max_block_size - 1) / max_block_size);
        std::map<EntityId, Vector> points;
        for (const EntityId& id : members) {
            points[id] = table.entity(id);
        }
        KMeansResult res = kmeans(points, k, seed);
        std::vector<Block> sub =
            clusters_to_blocks(res, BlockProvenance::type, type, next_id);
        blocks.insert(blocks.end(), std::make_move_iterator(sub.begin()),
                      std::make_move_iterator(sub.end()));
    }
    return blocks;
}

std::vector<Block> structural_blocks(const KnowledgeGraph& g) {
    NeighborIndex index(g);
    std::vector<EntityId> ids = g.entity_ids();
    std::sort(ids.begin(), ids.end());
    std::set<std::vector<EntityId>> seen;
    std::vector<Block> blocks;
    int next_id = 0;
    for (const EntityId& e : ids) {
        const std::vector<EntityId>& nb = index.of(e);
        if (nb.size() < 2 || !seen.insert(nb).second) {
            continue;
        }
        blocks.push_back(Block{next_id++, nb, BlockProvenance::structural, e});
    }
    return blocks;
}

} // namespace kgd
