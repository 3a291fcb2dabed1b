#pragma once

#include "kgdenoise/embedding.hpp"
#include "kgdenoise/kg.hpp"
#include "kgdenoise/llm_client.hpp"
#include "kgdenoise/matching.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace kgtest {

struct GraphOptions {
    int min_entities = 1;
    int max_entities = 12;
    int max_triples = 30;
    int type_count = 3; // distinct labels; entities may also stay untyped
    bool descriptions = true;
    bool self_loops = true;
};

inline std::string padded_id(int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "e%03d", i);
    return buf;
}

inline kgd::KnowledgeGraph random_graph(std::mt19937_64& rng, const GraphOptions& opt = {}) {
    static const char* words[] = {"alpha", "beta",  "gamma", "delta",
                                  "omega", "sigma", "kappa", "lambda"};
    auto pick = [&rng](int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(rng);
    };

    int n = pick(opt.min_entities, opt.max_entities);
    kgd::GraphBuilder b;
    std::vector<kgd::EntityId> ids;
    for (int i = 0; i < n; ++i) {
        kgd::Entity e;
        e.id = padded_id(i);
        e.name = std::string(words[pick(0, 7)]) + " " + std::to_string(i);
        int type = pick(0, opt.type_count);
        if (type < opt.type_count)
            e.entity_type = "T" + std::to_string(type);
        if (opt.descriptions && pick(0, 3) > 0) {
            int len = pick(1, 6);
            for (int w = 0; w < len; ++w)
                e.description += std::string(w ? " " : "") + words[pick(0, 7)];
        }
        e.source_chunk = "c" + std::to_string(pick(0, 3));
        ids.push_back(e.id);
        b.add_entity(std::move(e));
    }
    int m = pick(0, opt.max_triples);
    for (int i = 0; i < m; ++i) {
        kgd::Triple t;
        t.source = ids[static_cast<std::size_t>(pick(0, n - 1))];
        t.target = ids[static_cast<std::size_t>(pick(0, n - 1))];
        if (!opt.self_loops && t.source == t.target) {
            if (n == 1)
                continue;
            while (t.target == t.source)
                t.target = ids[static_cast<std::size_t>(pick(0, n - 1))];
        }
        t.relation = "r" + std::to_string(pick(0, 3));
        if (pick(0, 2) == 0)
            t.description = std::string("evidence ") + words[pick(0, 7)];
        t.source_chunk = "c" + std::to_string(pick(0, 3));
        b.add_triple(std::move(t));
    }
    return std::move(b).build();
}

inline kgd::EmbeddingTable random_table(const kgd::KnowledgeGraph& g, int dim,
                                        std::mt19937_64& rng) {
    kgd::EmbeddingTable table;
    table.dimension = dim;
    table.model_tag = kgd::ModelKind::external;
    std::normal_distribution<double> normal(0.0, 1.0);
    for (const auto& id : g.entity_ids()) {
        if (table.entity_vectors.count(id))
            continue;
        Eigen::VectorXd v(dim);
        for (Eigen::Index i = 0; i < v.size(); ++i)
            v[i] = normal(rng);
        double norm = v.norm();
        if (norm == 0.0)
            v[0] = 1.0;
        else
            v /= norm;
        table.entity_vectors.emplace(id, std::move(v));
    }
    return table;
}

// Brute-force connected components of the "similarity > threshold" graph;
// singleton components are dropped to match grouping output.
inline std::vector<std::set<kgd::EntityId>> brute_threshold_components(
    const std::vector<kgd::ScoredPair>& pairs, double threshold) {
    std::map<kgd::EntityId, std::set<kgd::EntityId>> adj;
    for (const auto& p : pairs) {
        if (p.similarity > threshold) {
            adj[p.a].insert(p.b);
            adj[p.b].insert(p.a);
        }
    }
    std::set<kgd::EntityId> visited;
    std::vector<std::set<kgd::EntityId>> components;
    for (const auto& [start, _] : adj) {
        if (visited.count(start))
            continue;
        std::set<kgd::EntityId> component;
        std::vector<kgd::EntityId> stack{start};
        while (!stack.empty()) {
            kgd::EntityId cur = stack.back();
            stack.pop_back();
            if (!visited.insert(cur).second)
                continue;
            component.insert(cur);
            for (const auto& next : adj[cur])
                stack.push_back(next);
        }
        components.push_back(std::move(component));
    }
    return components;
}

inline std::set<std::set<kgd::EntityId>> group_member_sets(
    const std::vector<kgd::MatchGroup>& groups) {
    std::set<std::set<kgd::EntityId>> out;
    for (const auto& g : groups)
        out.insert(std::set<kgd::EntityId>(g.members.begin(), g.members.end()));
    return out;
}

inline std::set<std::set<kgd::EntityId>> component_sets(
    const std::vector<std::set<kgd::EntityId>>& components) {
    return {components.begin(), components.end()};
}

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// Exhaustive tail-ranking oracle: for each triple, rank the true tail among
// all entities by TransE score (midrank for ties), then average.
inline double mean_tail_midrank(const kgd::KnowledgeGraph& g, const kgd::EmbeddingTable& table,
                                kgd::Norm norm) {
    std::vector<kgd::EntityId> ids = g.entity_ids();
    double total = 0.0;
    long count = 0;
    for (const auto& t : g.triples()) {
        const auto& h = table.entity(t.source);
        const auto& r = table.relation_vectors.at(t.relation);
        double true_score = kgd::score_transe(h, r, table.entity(t.target), norm);
        long better = 0, ties = 0;
        for (const auto& cand : ids) {
            if (cand == t.target)
                continue;
            double s = kgd::score_transe(h, r, table.entity(cand), norm);
            if (s > true_score)
                ++better;
            else if (s == true_score)
                ++ties;
        }
        total += 1.0 + static_cast<double>(better) + static_cast<double>(ties) / 2.0;
        ++count;
    }
    return count ? total / static_cast<double>(count) : 0.0;
}

// Transport double driven by a handler; records call count, the maximum
// number of concurrent calls, and the last request's headers/paths/bodies.
class ScriptedTransport : public kgd::Transport {
public:
    using Handler = std::function<kgd::HttpResponse(const std::string& path,
                                                    const std::string& body)>;
    explicit ScriptedTransport(Handler handler) : handler_(std::move(handler)) {}

    kgd::HttpResponse post(const std::string& path, const std::string& body,
                           const std::map<std::string, std::string>& headers) override {
        {
            std::lock_guard lock(m_);
            ++calls_;
            ++active_;
            max_active_ = std::max(max_active_, active_);
            last_headers_ = headers;
            paths_.push_back(path);
            bodies_.push_back(body);
        }
        kgd::HttpResponse res = handler_(path, body);
        {
            std::lock_guard lock(m_);
            --active_;
        }
        return res;
    }

    long calls() const {
        std::lock_guard lock(m_);
        return calls_;
    }
    int max_active() const {
        std::lock_guard lock(m_);
        return max_active_;
    }
    std::map<std::string, std::string> last_headers() const {
        std::lock_guard lock(m_);
        return last_headers_;
    }
    std::vector<std::string> paths() const {
        std::lock_guard lock(m_);
        return paths_;
    }
    std::vector<std::string> bodies() const {
        std::lock_guard lock(m_);
        return bodies_;
    }

private:
    Handler handler_;
    mutable std::mutex m_;
    long calls_ = 0;
    int active_ = 0;
    int max_active_ = 0;
    std::map<std::string, std::string> last_headers_;
    std::vector<std::string> paths_;
    std::vector<std::string> bodies_;
};

inline std::string chat_reply_body(const std::string& text) {
    nlohmann::json doc;
    doc["choices"] = nlohmann::json::array();
    doc["choices"].push_back({{"message", {{"role", "assistant"}, {"content", text}}}});
    return doc.dump();
}

// Embedding endpoint double: vector = [token count of text, byte length, 1].
inline kgd::HttpResponse embeddings_reply(const std::string& body) {
    auto doc = nlohmann::json::parse(body);
    nlohmann::json out;
    out["data"] = nlohmann::json::array();
    std::size_t index = 0;
    for (const auto& item : doc.at("input")) {
        std::string text = item.get<std::string>();
        out["data"].push_back(
            {{"index", index++},
             {"embedding", {static_cast<double>(kgd::count_tokens(text)),
                            static_cast<double>(text.size()), 1.0}}});
    }
    return {200, out.dump()};
}

} // namespace kgtest
