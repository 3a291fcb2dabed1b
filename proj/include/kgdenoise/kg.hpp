#pragma once

#include <functional>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace kgd {

using EntityId = std::string;

// Catch-all label for entities carrying no type, so the type map is total.
inline constexpr const char* kUnknownType = "UNKNOWN";

struct Entity {
    EntityId id;
    std::string name;
    std::string entity_type;  // empty = untyped
    std::string description;
    std::string source_chunk; // originating chunk id, empty when unknown

    const std::string& type_or_unknown() const {
        static const std::string unknown = kUnknownType;
        return entity_type.empty() ? unknown : entity_type;
    }
};

struct Triple {
    EntityId source;
    std::string relation;
    EntityId target;
    std::string description;
    std::string source_chunk;
};

// Identity of a triple for verdict maps and ground-truth sets. Parallel
// duplicates (same source/relation/target) share one key.
struct TripleKey {
    EntityId source;
    std::string relation;
    EntityId target;

    auto operator<=>(const TripleKey&) const = default;
};

inline TripleKey key_of(const Triple& t) {
    return TripleKey{t.source, t.relation, t.target};
}

class GraphBuilder;

// Immutable snapshot of a knowledge graph. Construction goes through
// GraphBuilder; all accessors are const and safe to call concurrently.
// Invalid states (duplicate ids, dangling endpoints) are representable so
// that validate() can report them as data.
class KnowledgeGraph {
public:
    KnowledgeGraph() = default;

    const std::vector<Entity>& entities() const { return entities_; }
    const std::vector<Triple>& triples() const { return triples_; }

    bool has_entity(const EntityId& id) const { return index_.count(id) > 0; }

    // Throws std::out_of_range for unknown ids. With duplicate ids the first
    // occurrence wins.
    const Entity& entity(const EntityId& id) const {
        auto it = index_.find(id);
        if (it == index_.end())
            throw std::out_of_range("unknown entity id: " + id);
        return entities_[it->second];
    }

    // Entity ids in insertion order.
    std::vector<EntityId> entity_ids() const;

    // Effective type inventory: sorted union of per-entity types, untyped
    // entities contributing UNKNOWN.
    std::vector<std::string> type_set() const;

private:
    friend class GraphBuilder;
    std::vector<Entity> entities_;
    std::vector<Triple> triples_;
    std::unordered_map<EntityId, std::size_t> index_;
};

// Single-writer builder; the produced graph is an independent snapshot.
class GraphBuilder {
public:
    GraphBuilder& add_entity(Entity e);
    GraphBuilder& add_triple(Triple t);
    KnowledgeGraph build() &&;

private:
    KnowledgeGraph g_;
};

struct Violation {
    enum class Kind {
        empty_id,
        duplicate_id,
        empty_name,
        empty_relation,
        dangling_source,
        dangling_target,
    };
    Kind kind;
    std::string subject; // offending entity id or triple rendered as text
    std::string message;
};

struct GraphStats {
    long entity_count = 0;
    long triple_count = 0;
    long relation_label_count = 0;
    double avg_description_tokens = 0.0;
    std::map<std::string, long> per_type_counts;
};

using Tokenizer = std::function<long(const std::string&)>;

// Whitespace-delimited token count; the default tokenizer for statistics
// and summarization budgets.
long count_tokens(const std::string& text);

// Undirected neighborhood of e: every e' connected to e by a triple in
// either direction. Contains e itself only when a self-loop exists.
// Throws std::out_of_range for unknown ids.
std::set<EntityId> neighbors(const KnowledgeGraph& g, const EntityId& e);

// Empty report iff all graph invariants hold; violations name the offending
// entity or triple.
std::vector<Violation> validate(const KnowledgeGraph& g);

// Weakly connected components over triples as undirected edges. Components
// are sorted internally and ordered by first member; isolated entities form
// singletons.
std::vector<std::vector<EntityId>> connected_components(const KnowledgeGraph& g);

GraphStats graph_stats(const KnowledgeGraph& g, const Tokenizer& tokenizer = count_tokens);

// Order-insensitive equality on the entity set and triple multiset.
bool structurally_equal(const KnowledgeGraph& a, const KnowledgeGraph& b);

// Precomputed undirected adjacency for similarity computations that touch
// many neighborhoods. Neighbor lists are deduplicated and sorted.
class NeighborIndex {
public:
    explicit NeighborIndex(const KnowledgeGraph& g);
    const std::vector<EntityId>& of(const EntityId& e) const;

private:
    std::map<EntityId, std::vector<EntityId>> adj_;
    std::vector<EntityId> empty_;
};

} // namespace kgd
