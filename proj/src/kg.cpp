#include "kgdenoise/kg.hpp"

#include <algorithm>
#include <cctype>

namespace kgd {

GraphBuilder& GraphBuilder::add_entity(Entity e) {
    if (g_.index_.find(e.id) == g_.index_.end())
        g_.index_.emplace(e.id, g_.entities_.size());
    g_.entities_.push_back(std::move(e));
    return *this;
}

GraphBuilder& GraphBuilder::add_triple(Triple t) {
    g_.triples_.push_back(std::move(t));
    return *this;
}

KnowledgeGraph GraphBuilder::build() && {
    return std::move(g_);
}

std::vector<EntityId> KnowledgeGraph::entity_ids() const {
    std::vector<EntityId> ids;
    ids.reserve(entities_.size());
    for (const auto& e : entities_)
        ids.push_back(e.id);
    return ids;
}

std::vector<std::string> KnowledgeGraph::type_set() const {
    std::set<std::string> types;
    for (const auto& e : entities_)
        types.insert(e.type_or_unknown());
    return {types.begin(), types.end()};
}

long count_tokens(const std::string& text) {
    long count = 0;
    bool in_token = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            in_token = false;
        } else if (!in_token) {
            in_token = true;
            ++count;
        }
    }
    return count;
}

std::set<EntityId> neighbors(const KnowledgeGraph& g, const EntityId& e) {
    if (!g.has_entity(e))
        throw std::out_of_range("unknown entity id: " + e);
    std::set<EntityId> result;
    for (const auto& t : g.triples()) {
        if (t.source == e)
            result.insert(t.target);
        if (t.target == e)
            result.insert(t.source);
    }
    // A self-loop keeps e in its own neighborhood; otherwise drop it.
    bool self_loop = false;
    for (const auto& t : g.triples())
        if (t.source == e && t.target == e) {
            self_loop = true;
            break;
        }
    if (!self_loop)
        result.erase(e);
    return result;
}

namespace {

std::string render(const Triple& t) {
    return "(" + t.source + ", " + t.relation + ", " + t.target + ")";
}

} // namespace

std::vector<Violation> validate(const KnowledgeGraph& g) {
    std::vector<Violation> out;
    std::set<EntityId> seen;
    for (const auto& e : g.entities()) {
        if (e.id.empty())
            out.push_back({Violation::Kind::empty_id, e.name, "entity with empty id"});
        else if (!seen.insert(e.id).second)
            out.push_back({Violation::Kind::duplicate_id, e.id, "duplicate entity id: " + e.id});
        if (e.name.empty())
            out.push_back({Violation::Kind::empty_name, e.id, "entity has empty name: " + e.id});
    }
    for (const auto& t : g.triples()) {
        if (t.relation.empty())
            out.push_back({Violation::Kind::empty_relation, render(t),
                           "triple has empty relation label: " + render(t)});
        if (!g.has_entity(t.source))
            out.push_back({Violation::Kind::dangling_source, render(t),
                           "triple source not in graph: " + t.source});
        if (!g.has_entity(t.target))
            out.push_back({Violation::Kind::dangling_target, render(t),
                           "triple target not in graph: " + t.target});
    }
    return out;
}

std::vector<std::vector<EntityId>> connected_components(const KnowledgeGraph& g) {
    // Union-find over the distinct id set.
    std::map<EntityId, EntityId> parent;
    for (const auto& e : g.entities())
        parent.emplace(e.id, e.id);

    std::function<const EntityId&(const EntityId&)> find = [&](const EntityId& x) -> const EntityId& {
        EntityId* cur = &parent.at(x);
        if (*cur == x)
            return parent.find(x)->first;
        const EntityId& root = find(*cur);
        parent.at(x) = root;
        return root;
    };
    auto unite = [&](const EntityId& a, const EntityId& b) {
        EntityId ra = find(a), rb = find(b);
        if (ra != rb)
            parent.at(std::max(ra, rb)) = std::min(ra, rb);
    };

    for (const auto& t : g.triples()) {
        if (parent.count(t.source) && parent.count(t.target))
            unite(t.source, t.target);
    }

    std::map<EntityId, std::vector<EntityId>> groups;
    for (const auto& [id, _] : parent)
        groups[find(id)].push_back(id);

    std::vector<std::vector<EntityId>> result;
    result.reserve(groups.size());
    for (auto& [root, members] : groups) {
        std::sort(members.begin(), members.end());
        result.push_back(std::move(members));
    }
    std::sort(result.begin(), result.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return result;
}

GraphStats graph_stats(const KnowledgeGraph& g, const Tokenizer& tokenizer) {
    GraphStats s;
    s.entity_count = static_cast<long>(g.entities().size());
    s.triple_count = static_cast<long>(g.triples().size());

    std::set<std::string> labels;
    for (const auto& t : g.triples())
        labels.insert(t.relation);
    s.relation_label_count = static_cast<long>(labels.size());

    long total_tokens = 0;
    for (const auto& e : g.entities()) {
        total_tokens += tokenizer(e.description);
        s.per_type_counts[e.type_or_unknown()] += 1;
    }
    if (s.entity_count > 0)
        s.avg_description_tokens = static_cast<double>(total_tokens) / s.entity_count;
    return s;
}

namespace {

auto entity_tuple(const Entity& e) {
    return std::tie(e.id, e.name, e.entity_type, e.description, e.source_chunk);
}

auto triple_tuple(const Triple& t) {
    return std::tie(t.source, t.relation, t.target, t.description, t.source_chunk);
}

} // namespace

bool structurally_equal(const KnowledgeGraph& a, const KnowledgeGraph& b) {
    if (a.entities().size() != b.entities().size() || a.triples().size() != b.triples().size())
        return false;

    auto es_a = a.entities();
    auto es_b = b.entities();
    auto by_entity = [](const Entity& x, const Entity& y) { return entity_tuple(x) < entity_tuple(y); };
    std::sort(es_a.begin(), es_a.end(), by_entity);
    std::sort(es_b.begin(), es_b.end(), by_entity);
    for (std::size_t i = 0; i < es_a.size(); ++i)
        if (entity_tuple(es_a[i]) != entity_tuple(es_b[i]))
            return false;

    auto ts_a = a.triples();
    auto ts_b = b.triples();
    auto by_triple = [](const Triple& x, const Triple& y) { return triple_tuple(x) < triple_tuple(y); };
    std::sort(ts_a.begin(), ts_a.end(), by_triple);
    std::sort(ts_b.begin(), ts_b.end(), by_triple);
    for (std::size_t i = 0; i < ts_a.size(); ++i)
        if (triple_tuple(ts_a[i]) != triple_tuple(ts_b[i]))
            return false;
    return true;
}

NeighborIndex::NeighborIndex(const KnowledgeGraph& g) {
    std::map<EntityId, std::set<EntityId>> sets;
    for (const auto& e : g.entities())
        sets[e.id];
    for (const auto& t : g.triples()) {
        if (t.source == t.target) {
            sets[t.source].insert(t.source);
            continue;
        }
        sets[t.source].insert(t.target);
        sets[t.target].insert(t.source);
    }
    for (auto& [id, s] : sets)
        adj_.emplace(id, std::vector<EntityId>(s.begin(), s.end()));
}

const std::vector<EntityId>& NeighborIndex::of(const EntityId& e) const {
    auto it = adj_.find(e);
    return it == adj_.end() ? empty_ : it->second;
}

} // namespace kgd
