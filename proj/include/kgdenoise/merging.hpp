#pragma once

#include "kgdenoise/kg.hpp"
#include "kgdenoise/matching.hpp"

#include <functional>
#include <string>
#include <vector>

namespace kgd {

class LlmClient;

enum class MergeStrategy { direct_merge, synonym_link, merge_with_link };

std::string to_string(MergeStrategy s);
MergeStrategy merge_strategy_from(const std::string& name);

// Condenses a list of descriptions into one text.
using Summarizer = std::function<std::string(const std::vector<std::string>&)>;

// Builds a summarizer bound to the entity whose descriptions it condenses;
// the prompt names the entity. An empty factory disables summarization and
// over-budget aggregates fall back to truncation.
using SummarizerFactory = std::function<Summarizer(const std::string& entity_name)>;

SummarizerFactory make_llm_summarizer_factory(LlmClient& client);

struct MergePlan {
    std::vector<MatchGroup> groups;
    MergeStrategy strategy = MergeStrategy::direct_merge;
    std::string synonym_label = "synonym_of";
    long token_budget = 4000;
};

struct AggregationStats {
    long summarizer_calls = 0;
    long fallback_truncations = 0;
};

// Separator between concatenated member descriptions; joined with spaces so
// it counts as one whitespace token.
inline constexpr const char* kDescriptionSeparator = "⟨SEP⟩"; // ⟨SEP⟩

// Joins the unique non-empty texts in input order. When the joined result
// exceeds token_budget whitespace tokens, the summarizer condenses it; on
// summarizer failure or absence the result is head-truncated to exactly
// token_budget tokens. Stats record which path ran.
std::string aggregate_description(const std::vector<std::string>& texts,
                                  const Summarizer& summarizer, long token_budget,
                                  AggregationStats* stats = nullptr);

// Collapses every group into its canonical entity: non-canonical members are
// removed, triple endpoints rewritten onto canonicals, self-loops created by
// the rewrite dropped, rewritten parallel duplicates collapsed (keeping the
// first, concatenating distinct descriptions), and the canonical description
// aggregated over the group.
KnowledgeGraph direct_merge(const KnowledgeGraph& g, const MergePlan& plan,
                            const SummarizerFactory& summarizers = {},
                            AggregationStats* stats = nullptr);

// Leaves entities and existing triples untouched; adds one
// (member, synonym_label, canonical) triple per non-canonical group member.
KnowledgeGraph synonym_link(const KnowledgeGraph& g, const MergePlan& plan);

// Rewrites triples and aggregates descriptions as direct_merge does, but
// keeps non-canonical entities (with their original descriptions) and
// attaches synonym triples to them.
KnowledgeGraph merge_with_link(const KnowledgeGraph& g, const MergePlan& plan,
                               const SummarizerFactory& summarizers = {},
                               AggregationStats* stats = nullptr);

// Dispatches on plan.strategy.
KnowledgeGraph apply_merge(const KnowledgeGraph& g, const MergePlan& plan,
                           const SummarizerFactory& summarizers = {},
                           AggregationStats* stats = nullptr);

} // namespace kgd
