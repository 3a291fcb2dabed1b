#pragma once

#include "kgdenoise/graph_io.hpp"
#include "kgdenoise/kg.hpp"

#include <functional>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace kgd {

class LlmClient;

// Relation or description text carrying this marker is scored 0.1 by the
// mock judge; everything else scores 1.0.
inline constexpr const char* kBadTripleMarker = "⟦bad⟧"; // ⟦bad⟧

struct JudgeConfig {
    double threshold = 0.2; // keep triples scoring >= threshold
    int max_retries = 3;    // extra attempts on malformed judge replies
    std::string synonym_label = "synonym_of"; // exempt from judging
    std::string backend = "mock";             // "mock" or "llm"
};

struct JudgeError : std::runtime_error {
    std::string raw_reply;
    JudgeError(const std::string& what, std::string raw = "")
        : std::runtime_error(what), raw_reply(std::move(raw)) {}
};

// Scores one triple's reliability in [0, 1].
class Judge {
public:
    virtual ~Judge() = default;
    virtual ReflectionVerdict judge(const Triple& t, const Entity& source,
                                    const Entity& target) = 0;
    // Bound on concurrent judge calls reflect_graph may issue.
    virtual int max_in_flight() const { return 1; }
};

// LLM-backed judge. Sends the triplet-evaluation prompts with the source and
// target names and the triple's description (relation label when the
// description is empty); parses the JSON reply, retrying malformed replies
// up to max_retries times before throwing JudgeError with the raw reply.
class LlmJudge : public Judge {
public:
    explicit LlmJudge(LlmClient& client, int max_retries = 3);
    ReflectionVerdict judge(const Triple& t, const Entity& source, const Entity& target) override;
    int max_in_flight() const override;

private:
    LlmClient& client_;
    int max_retries_;
};

// Deterministic offline judge keyed on kBadTripleMarker.
class MockJudge : public Judge {
public:
    ReflectionVerdict judge(const Triple& t, const Entity& source, const Entity& target) override;
};

// Adapts an arbitrary scoring function, for tests.
class FunctionJudge : public Judge {
public:
    explicit FunctionJudge(std::function<double(const Triple&)> score)
        : score_(std::move(score)) {}
    ReflectionVerdict judge(const Triple& t, const Entity& source, const Entity& target) override;

private:
    std::function<double(const Triple&)> score_;
};

// Runs the judge and clamps out-of-range scores into [0, 1], setting the
// verdict's clamped flag.
ReflectionVerdict judge_triple(Judge& judge, const Triple& t, const Entity& source,
                               const Entity& target);

// Keeps triples whose score is >= threshold plus all synonym-labeled
// triples; entities are untouched. The removed list preserves input order.
// Throws std::invalid_argument when a non-synonym triple lacks a score.
std::pair<KnowledgeGraph, std::vector<Triple>> filter_triples(
    const KnowledgeGraph& g, const std::map<TripleKey, double>& scores, double threshold,
    const std::string& synonym_label = "synonym_of");

struct ReflectionResult {
    KnowledgeGraph graph;
    std::vector<ReflectionVerdict> verdicts; // judged triples in input order
    std::vector<Triple> removed;
};

// Judges every non-synonym triple (bounded by judge.max_in_flight()),
// appends one JSONL line per verdict to `log` when given, and filters at
// config.threshold. Failures abort with per-triple context.
ReflectionResult reflect_graph(const KnowledgeGraph& g, Judge& judge, const JudgeConfig& config,
                               std::ostream* log = nullptr);

} // namespace kgd
