#include "kgdenoise/matching.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <stdexcept>

namespace kgd {

std::string to_string(SimilarityMode mode) {
    switch (mode) {
    case SimilarityMode::ego: return "ego";
    case SimilarityMode::neighbor: return "neighbor";
    case SimilarityMode::type_aware_neighbor: return "type_aware_neighbor";
    case SimilarityMode::ego_plus_neighbor: return "ego_plus_neighbor";
    case SimilarityMode::ego_plus_type_aware: return "ego_plus_type_aware";
    }
    return "unknown";
}

SimilarityMode similarity_mode_from(const std::string& name) {
    if (name == "ego") return SimilarityMode::ego;
    if (name == "neighbor") return SimilarityMode::neighbor;
    if (name == "type_aware_neighbor") return SimilarityMode::type_aware_neighbor;
    if (name == "ego_plus_neighbor") return SimilarityMode::ego_plus_neighbor;
    if (name == "ego_plus_type_aware") return SimilarityMode::ego_plus_type_aware;
    throw std::invalid_argument("unknown similarity mode: \"" + name + "\"");
}

double cosine(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("cosine requires vectors of equal length");
    }
    double na = a.norm();
    double nb = b.norm();
    if (na == 0.0 || nb == 0.0) {
        return 0.0;
    }
    return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

namespace {

Eigen::Index vector_length(const EmbeddingTable& table) {
    if (!table.entity_vectors.empty()) {
        return table.entity_vectors.begin()->second.size();
    }
    return table.stored_length();
}

Vector neighbor_mean(const MatchContext& ctx, const EntityId& e) {
    Eigen::Index len = vector_length(ctx.table);
    const std::vector<EntityId>& nb = ctx.neighbors.of(e);
    if (nb.empty()) {
        return Vector::Zero(len);
    }
    Vector sum = Vector::Zero(len);
    for (const EntityId& n : nb) {
        sum += ctx.table.entity(n);
    }
    return sum / static_cast<double>(nb.size());
}

// Mean neighbor vector per effective type; absent types yield no entry.
std::map<std::string, Vector> typed_neighbor_means(const MatchContext& ctx, const EntityId& e) {
    std::map<std::string, Vector> sums;
    std::map<std::string, long> counts;
    for (const EntityId& n : ctx.neighbors.of(e)) {
        const std::string& type = ctx.graph.entity(n).type_or_unknown();
        auto [it, inserted] = sums.try_emplace(type, ctx.table.entity(n));
        if (!inserted) {
            it->second += ctx.table.entity(n);
        }
        ++counts[type];
    }
    for (auto& [type, sum] : sums) {
        sum /= static_cast<double>(counts[type]);
    }
    return sums;
}

Vector concat(const Vector& a, const Vector& b) {
    Vector out(a.size() + b.size());
    out << a, b;
    return out;
}

Vector type_aware_concat(const MatchContext& ctx, const EntityId& e) {
    Eigen::Index len = vector_length(ctx.table);
    std::map<std::string, Vector> means = typed_neighbor_means(ctx, e);
    Vector out = Vector::Zero(static_cast<Eigen::Index>(ctx.type_order.size()) * len);
    for (std::size_t i = 0; i < ctx.type_order.size(); ++i) {
        auto it = means.find(ctx.type_order[i]);
        if (it != means.end()) {
            out.segment(static_cast<Eigen::Index>(i) * len, len) = it->second;
        }
    }
    return out;
}

} // namespace

Vector entity_vector(const MatchContext& ctx, const EntityId& e, SimilarityMode mode) {
    switch (mode) {
    case SimilarityMode::ego:
        return ctx.table.entity(e);
    case SimilarityMode::neighbor:
        return neighbor_mean(ctx, e);
    case SimilarityMode::type_aware_neighbor:
        return type_aware_concat(ctx, e);
    case SimilarityMode::ego_plus_neighbor:
        return concat(ctx.table.entity(e), neighbor_mean(ctx, e));
    case SimilarityMode::ego_plus_type_aware:
        return concat(ctx.table.entity(e), type_aware_concat(ctx, e));
    }
    throw std::invalid_argument("unknown similarity mode");
}

double pair_similarity(const MatchContext& ctx, const EntityId& a, const EntityId& b,
                       SimilarityMode mode, TypeAveraging averaging) {
    if (mode != SimilarityMode::type_aware_neighbor) {
        return cosine(entity_vector(ctx, a, mode), entity_vector(ctx, b, mode));
    }
    std::map<std::string, Vector> means_a = typed_neighbor_means(ctx, a);
    std::map<std::string, Vector> means_b = typed_neighbor_means(ctx, b);
    double sum = 0.0;
    long shared = 0;
    for (const auto& [type, va] : means_a) {
        auto it = means_b.find(type);
        if (it == means_b.end()) {
            continue;
        }
        sum += cosine(va, it->second);
        ++shared;
    }
    long denom = averaging == TypeAveraging::shared_types
                     ? shared
                     : static_cast<long>(ctx.type_order.size());
    return denom == 0 ? 0.0 : sum / static_cast<double>(denom);
}

std::vector<std::pair<EntityId, EntityId>> candidate_pairs(const std::vector<Block>& blocks) {
    std::set<std::pair<EntityId, EntityId>> out;
    for (const Block& block : blocks) {
        for (std::size_t i = 0; i < block.members.size(); ++i) {
            for (std::size_t j = i + 1; j < block.members.size(); ++j) {
                const EntityId& a = block.members[i];
                const EntityId& b = block.members[j];
                if (a == b) {
                    continue;
                }
                out.insert(a < b ? std::make_pair(a, b) : std::make_pair(b, a));
            }
        }
    }
    return {out.begin(), out.end()};
}

std::vector<ScoredPair> score_pairs(const MatchContext& ctx,
                                    const std::vector<std::pair<EntityId, EntityId>>& pairs,
                                    SimilarityMode mode, TypeAveraging averaging) {
    std::vector<ScoredPair> out;
    out.reserve(pairs.size());
    for (const auto& [a, b] : pairs) {
        ScoredPair sp;
        sp.a = std::min(a, b);
        sp.b = std::max(a, b);
        sp.similarity = pair_similarity(ctx, a, b, mode, averaging);
        out.push_back(std::move(sp));
    }
    return out;
}

EntityId select_canonical(const std::vector<EntityId>& members, CanonicalPolicy policy,
                          std::uint64_t seed) {
    if (members.empty()) {
        throw std::invalid_argument("cannot pick a canonical from an empty group");
    }
    std::vector<EntityId> sorted = members;
    std::sort(sorted.begin(), sorted.end());
    if (policy == CanonicalPolicy::min_id) {
        return sorted.front();
    }
    // Generator keyed by (seed, sorted member ids) via FNV-1a, so the draw
    // is independent of member order and of any other groups.
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const unsigned char* data, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            h ^= data[i];
            h *= 1099511628211ULL;
        }
    };
    unsigned char seed_bytes[8];
    for (int i = 0; i < 8; ++i) {
        seed_bytes[i] = static_cast<unsigned char>((seed >> (8 * i)) & 0xFF);
    }
    mix(seed_bytes, 8);
    for (const EntityId& id : sorted) {
        mix(reinterpret_cast<const unsigned char*>(id.data()), id.size());
        unsigned char sep = 0;
        mix(&sep, 1);
    }
    std::mt19937_64 gen(h);
    std::size_t idx = std::uniform_int_distribution<std::size_t>(0, sorted.size() - 1)(gen);
    return sorted[idx];
}

namespace {

// Union-find with lexicographically smallest id as each set's root.
class DisjointSets {
public:
    void insert(const EntityId& id) { parent_.try_emplace(id, id); }

    const EntityId& find(const EntityId& id) {
        EntityId root = id;
        while (parent_.at(root) != root) {
            root = parent_.at(root);
        }
        EntityId walk = id;
        while (parent_.at(walk) != root) {
            walk = std::exchange(parent_.at(walk), root);
        }
        return parent_.find(root)->first;
    }

    // True when the two ids were in different sets.
    bool unite(const EntityId& a, const EntityId& b) {
        EntityId ra = find(a);
        EntityId rb = find(b);
        if (ra == rb) {
            return false;
        }
        if (rb < ra) {
            std::swap(ra, rb);
        }
        parent_.at(rb) = ra;
        return true;
    }

    std::map<EntityId, std::vector<EntityId>> classes() {
        std::map<EntityId, std::vector<EntityId>> by_root;
        for (const auto& [id, _] : parent_) {
            by_root[find(id)].push_back(id);
        }
        return by_root;
    }

private:
    std::map<EntityId, EntityId> parent_;
};

std::vector<MatchGroup> classes_to_groups(DisjointSets& sets, CanonicalPolicy policy,
                                          std::uint64_t seed) {
    std::vector<MatchGroup> groups;
    for (auto& [root, members] : sets.classes()) {
        if (members.size() < 2) {
            continue;
        }
        MatchGroup g;
        g.members = std::move(members);
        g.canonical = select_canonical(g.members, policy, seed);
        groups.push_back(std::move(g));
    }
    return groups;
}

} // namespace

std::vector<MatchGroup> group_by_threshold(const std::vector<ScoredPair>& pairs,
                                           double threshold, CanonicalPolicy policy,
                                           std::uint64_t seed) {
    if (!std::isfinite(threshold)) {
        throw std::invalid_argument("threshold must be finite");
    }
    DisjointSets sets;
    for (const ScoredPair& p : pairs) {
        if (p.similarity > threshold) {
            sets.insert(p.a);
            sets.insert(p.b);
            sets.unite(p.a, p.b);
        }
    }
    return classes_to_groups(sets, policy, seed);
}

GroupingOutcome group_by_target_ratio(const std::vector<ScoredPair>& pairs, long entity_count,
                                      double ratio, CanonicalPolicy policy,
                                      std::uint64_t seed) {
    if (entity_count < 1) {
        throw std::invalid_argument("entity_count must be >= 1");
    }
    if (!(ratio >= 0.0 && ratio < 1.0)) {
        throw std::invalid_argument("ratio must lie in [0, 1)");
    }
    long target = static_cast<long>(std::floor(ratio * static_cast<double>(entity_count)));

    std::vector<ScoredPair> ordered = pairs;
    std::sort(ordered.begin(), ordered.end(), [](const ScoredPair& x, const ScoredPair& y) {
        if (x.similarity != y.similarity) {
            return x.similarity > y.similarity;
        }
        return std::tie(x.a, x.b) < std::tie(y.a, y.b);
    });

    GroupingOutcome out;
    DisjointSets sets;
    for (const ScoredPair& p : ordered) {
        if (out.merges >= target) {
            break;
        }
        if (p.similarity <= 0.0) {
            break; // non-positive similarity carries no match evidence
        }
        sets.insert(p.a);
        sets.insert(p.b);
        if (sets.unite(p.a, p.b)) {
            ++out.merges;
        }
    }
    out.groups = classes_to_groups(sets, policy, seed);
    out.achieved_ratio = static_cast<double>(out.merges) / static_cast<double>(entity_count);
    return out;
}

} // namespace kgd
