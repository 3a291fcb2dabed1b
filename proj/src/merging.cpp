#include "kgdenoise/merging.hpp"

#include "kgdenoise/llm_client.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>
#include <utility>

namespace kgd {

std::string to_string(MergeStrategy s) {
    switch (s) {
    case MergeStrategy::direct_merge: return "direct_merge";
    case MergeStrategy::synonym_link: return "synonym_link";
    case MergeStrategy::merge_with_link: return "merge_with_link";
    }
    return "unknown";
}

MergeStrategy merge_strategy_from(const std::string& name) {
    if (name == "direct_merge") return MergeStrategy::direct_merge;
    if (name == "synonym_link") return MergeStrategy::synonym_link;
    if (name == "merge_with_link") return MergeStrategy::merge_with_link;
    throw std::invalid_argument("unknown merge strategy: \"" + name + "\"");
}

SummarizerFactory make_llm_summarizer_factory(LlmClient& client) {
    return [&client](const std::string& entity_name) -> Summarizer {
        return [&client, entity_name](const std::vector<std::string>& texts) {
            std::string description_list;
            for (std::size_t i = 0; i < texts.size(); ++i) {
                if (i > 0) {
                    description_list += "\n";
                }
                description_list += texts[i];
            }
            std::string prompt =
                "You are a helpful assistant. Please summarize the following list of "
                "descriptions for the entity " +
                entity_name +
                " into a single, coherent paragraph. Combine the key information and "
                "remove redundant details.\n\n"
                "Descriptions to summarize:\n" +
                description_list + "\n\nConcise Summary:";
            return client.chat_complete({{ChatMessage::Role::user, prompt}});
        };
    };
}

namespace {

std::string join_texts(const std::vector<std::string>& texts) {
    const std::string sep = std::string(" ") + kDescriptionSeparator + " ";
    std::string out;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (i > 0) {
            out += sep;
        }
        out += texts[i];
    }
    return out;
}

std::string truncate_to_tokens(const std::string& text, long budget) {
    std::istringstream in(text);
    std::string token;
    std::string out;
    long kept = 0;
    while (kept < budget && in >> token) {
        if (kept > 0) {
            out += ' ';
        }
        out += token;
        ++kept;
    }
    return out;
}

} // namespace

std::string aggregate_description(const std::vector<std::string>& texts,
                                  const Summarizer& summarizer, long token_budget,
                                  AggregationStats* stats) {
    if (texts.empty()) {
        throw std::invalid_argument("aggregate_description requires at least one text");
    }
    if (token_budget < 1) {
        throw std::invalid_argument("token_budget must be >= 1");
    }
    std::vector<std::string> unique;
    for (const std::string& t : texts) {
        if (!t.empty() && std::find(unique.begin(), unique.end(), t) == unique.end()) {
            unique.push_back(t);
        }
    }
    if (unique.empty()) {
        return "";
    }
    std::string joined = join_texts(unique);
    if (count_tokens(joined) <= token_budget) {
        return joined;
    }
    if (summarizer) {
        if (stats) {
            ++stats->summarizer_calls;
        }
        try {
            return summarizer(unique);
        } catch (const std::exception&) {
            // fall through to truncation
        }
    }
    if (stats) {
        ++stats->fallback_truncations;
    }
    return truncate_to_tokens(joined, token_budget);
}

namespace {

struct PlanIndex {
    std::vector<MatchGroup> retained;         // members filtered to graph presence
    std::map<EntityId, EntityId> canonical_of; // retained members, incl. canonicals
};

// Validates group shape against the graph and drops groups with fewer than
// two present members (re-applying an executed plan is then a no-op).
PlanIndex index_plan(const KnowledgeGraph& g, const MergePlan& plan) {
    std::set<EntityId> seen;
    for (const MatchGroup& grp : plan.groups) {
        if (grp.members.empty()) {
            throw std::invalid_argument("match group has no members");
        }
        if (std::find(grp.members.begin(), grp.members.end(), grp.canonical) ==
            grp.members.end()) {
            throw std::invalid_argument("canonical \"" + grp.canonical +
                                        "\" is not a member of its group");
        }
        for (const EntityId& m : grp.members) {
            if (!seen.insert(m).second) {
                throw std::invalid_argument("match groups overlap on entity \"" + m + "\"");
            }
        }
    }
    PlanIndex idx;
    for (const MatchGroup& grp : plan.groups) {
        MatchGroup filtered;
        filtered.canonical = grp.canonical;
        for (const EntityId& m : grp.members) {
            if (g.has_entity(m)) {
                filtered.members.push_back(m);
            }
        }
        if (filtered.members.size() < 2) {
            continue;
        }
        if (!g.has_entity(grp.canonical)) {
            throw std::invalid_argument("canonical \"" + grp.canonical +
                                        "\" is absent from the graph");
        }
        idx.retained.push_back(std::move(filtered));
    }
    for (const MatchGroup& grp : idx.retained) {
        for (const EntityId& m : grp.members) {
            idx.canonical_of[m] = grp.canonical;
        }
    }
    return idx;
}

// Rewrites endpoints onto canonicals. A triple touched by some group is
// dropped when the rewrite makes its endpoints equal and is collapsed into
// an earlier triple with the same (source, relation, target), concatenating
// distinct descriptions. Untouched triples pass through verbatim, so a plan
// with no applicable groups leaves the triple list bit-identical.
std::vector<Triple> rewrite_triples(const KnowledgeGraph& g, const PlanIndex& idx) {
    std::vector<Triple> out;
    std::vector<std::vector<std::string>> descriptions;
    std::map<std::tuple<EntityId, std::string, EntityId>, std::size_t> first_with_key;
    for (const Triple& t : g.triples()) {
        auto src = idx.canonical_of.find(t.source);
        auto dst = idx.canonical_of.find(t.target);
        bool touched = src != idx.canonical_of.end() || dst != idx.canonical_of.end();
        Triple r = t;
        if (src != idx.canonical_of.end()) {
            r.source = src->second;
        }
        if (dst != idx.canonical_of.end()) {
            r.target = dst->second;
        }
        if (touched && r.source == r.target) {
            continue;
        }
        auto key = std::make_tuple(r.source, r.relation, r.target);
        if (touched) {
            auto f = first_with_key.find(key);
            if (f != first_with_key.end()) {
                std::vector<std::string>& list = descriptions[f->second];
                if (!r.description.empty() &&
                    std::find(list.begin(), list.end(), r.description) == list.end()) {
                    list.push_back(r.description);
                }
                continue;
            }
        }
        first_with_key.try_emplace(key, out.size());
        std::vector<std::string> list;
        if (!r.description.empty()) {
            list.push_back(r.description);
        }
        descriptions.push_back(std::move(list));
        out.push_back(std::move(r));
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (descriptions[i].size() > 1) {
            out[i].description = join_texts(descriptions[i]);
        }
    }
    return out;
}

std::string aggregate_group_description(const KnowledgeGraph& g, const MatchGroup& grp,
                                        const SummarizerFactory& summarizers, long token_budget,
                                        AggregationStats* stats) {
    std::vector<std::string> texts;
    texts.push_back(g.entity(grp.canonical).description);
    for (const EntityId& m : grp.members) {
        if (m != grp.canonical) {
            texts.push_back(g.entity(m).description);
        }
    }
    Summarizer summarizer =
        summarizers ? summarizers(g.entity(grp.canonical).name) : Summarizer{};
    return aggregate_description(texts, summarizer, token_budget, stats);
}

void require_strategy(const MergePlan& plan, MergeStrategy expected) {
    if (plan.strategy != expected) {
        throw std::invalid_argument("plan strategy is " + to_string(plan.strategy) +
                                    ", expected " + to_string(expected));
    }
    if (plan.synonym_label.empty()) {
        throw std::invalid_argument("synonym_label must be non-empty");
    }
}

void append_synonym_triples(GraphBuilder& builder, const PlanIndex& idx,
                            const std::string& label) {
    for (const MatchGroup& grp : idx.retained) {
        for (const EntityId& m : grp.members) {
            if (m != grp.canonical) {
                builder.add_triple(Triple{m, label, grp.canonical, "", ""});
            }
        }
    }
}

} // namespace

KnowledgeGraph direct_merge(const KnowledgeGraph& g, const MergePlan& plan,
                            const SummarizerFactory& summarizers, AggregationStats* stats) {
    require_strategy(plan, MergeStrategy::direct_merge);
    PlanIndex idx = index_plan(g, plan);
    std::map<EntityId, std::string> merged_description;
    std::set<EntityId> dropped;
    for (const MatchGroup& grp : idx.retained) {
        merged_description[grp.canonical] =
            aggregate_group_description(g, grp, summarizers, plan.token_budget, stats);
        for (const EntityId& m : grp.members) {
            if (m != grp.canonical) {
                dropped.insert(m);
            }
        }
    }
    GraphBuilder builder;
    for (const Entity& e : g.entities()) {
        if (dropped.count(e.id)) {
            continue;
        }
        Entity copy = e;
        auto it = merged_description.find(e.id);
        if (it != merged_description.end()) {
            copy.description = it->second;
        }
        builder.add_entity(std::move(copy));
    }
    for (Triple& t : rewrite_triples(g, idx)) {
        builder.add_triple(std::move(t));
    }
    return std::move(builder).build();
}

KnowledgeGraph synonym_link(const KnowledgeGraph& g, const MergePlan& plan) {
    require_strategy(plan, MergeStrategy::synonym_link);
    PlanIndex idx = index_plan(g, plan);
    GraphBuilder builder;
    for (const Entity& e : g.entities()) {
        builder.add_entity(e);
    }
    for (const Triple& t : g.triples()) {
        builder.add_triple(t);
    }
    append_synonym_triples(builder, idx, plan.synonym_label);
    return std::move(builder).build();
}

KnowledgeGraph merge_with_link(const KnowledgeGraph& g, const MergePlan& plan,
                               const SummarizerFactory& summarizers, AggregationStats* stats) {
    require_strategy(plan, MergeStrategy::merge_with_link);
    PlanIndex idx = index_plan(g, plan);
    std::map<EntityId, std::string> merged_description;
    for (const MatchGroup& grp : idx.retained) {
        merged_description[grp.canonical] =
            aggregate_group_description(g, grp, summarizers, plan.token_budget, stats);
    }
    GraphBuilder builder;
    for (const Entity& e : g.entities()) {
        Entity copy = e;
        auto it = merged_description.find(e.id);
        if (it != merged_description.end()) {
            copy.description = it->second;
        }
        builder.add_entity(std::move(copy));
    }
    for (Triple& t : rewrite_triples(g, idx)) {
        builder.add_triple(std::move(t));
    }
    append_synonym_triples(builder, idx, plan.synonym_label);
    return std::move(builder).build();
}

KnowledgeGraph apply_merge(const KnowledgeGraph& g, const MergePlan& plan,
                           const SummarizerFactory& summarizers, AggregationStats* stats) {
    switch (plan.strategy) {
    case MergeStrategy::direct_merge: return direct_merge(g, plan, summarizers, stats);
    case MergeStrategy::synonym_link: return synonym_link(g, plan);
    case MergeStrategy::merge_with_link: return merge_with_link(g, plan, summarizers, stats);
    }
    throw std::invalid_argument("unknown merge strategy");
}

} // namespace kgd
