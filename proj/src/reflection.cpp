#include "kgdenoise/reflection.hpp"

#include "kgdenoise/llm_client.hpp"

#include <algorithm>
#include <atomic>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace kgd {
namespace {

const char* kJudgeSystemPrompt =
    "You are a knowledge graph expert who evaluates whether the knowledge graph "
    "triplet belongs to commonsense knowledge.";

std::string judge_user_prompt(const std::string& source, const std::string& destination,
                              const std::string& relationship) {
    return "Evaluate the reasonableness of the knowledge graph triplet with precision:\n"
           "Source: " + source + "\n"
           "Destination: " + destination + "\n"
           "Relationship: " + relationship + "\n"
           "\n"
           "Analysis requirements\n"
           "- Semantic accuracy: Does the relationship accurately describe the connection? "
           "Consider domain knowledge and factual correctness.\n"
           "- Relevance: Is the connection meaningful and significant, not trivial or "
           "coincidental?\n"
           "- Specificity: Is the relationship clear and specific rather than vague or "
           "overly general?\n"
           "- Logical coherence: Does the triple follow expected semantic and syntactic "
           "patterns for KGs?\n"
           "- Entity type compatibility: Is the relationship sensible given the entity "
           "types involved?\n"
           "\n"
           "Scoring guidelines\n"
           "- 0.0-0.3: Invalid or highly questionable (factually wrong, illogical, "
           "meaningless)\n"
           "- 0.4-0.6: Partially valid but problematic (some relevance yet "
           "vague/imprecise/minor inaccuracies)\n"
           "- 0.7-0.8: Mostly valid (accurate but could be more specific or informative)\n"
           "- 0.9-1.0: Fully valid (accurate, specific, informative, and logically sound)\n"
           "\n"
           "Optimization notes\n"
           "- Focus on direct evaluation without unnecessary elaboration.\n"
           "- Use domain-specific reasoning where applicable.\n"
           "\n"
           "Output format (return a valid JSON object):\n"
           "{\n"
           "    \"analysis\": \"concise analysis\",\n"
           "    \"score\": 0.5\n"
           "}\n"
           "The score should be a float between 0.0-1.0 with two-decimal precision.";
}

// Accepts either a bare JSON object or one embedded in prose/code fences.
bool parse_judge_reply(const std::string& reply, double& score, std::string& analysis) {
    auto try_parse = [&](const std::string& text) {
        nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
        if (!doc.is_object() || !doc.contains("score") || !doc["score"].is_number()) {
            return false;
        }
        score = doc["score"].get<double>();
        analysis = doc.contains("analysis") && doc["analysis"].is_string()
                       ? doc["analysis"].get<std::string>()
                       : "";
        return true;
    };
    if (try_parse(reply)) {
        return true;
    }
    std::size_t open = reply.find('{');
    std::size_t close = reply.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close <= open) {
        return false;
    }
    return try_parse(reply.substr(open, close - open + 1));
}

ReflectionVerdict verdict_for(const Triple& t, double score, std::string analysis) {
    ReflectionVerdict v;
    v.source = t.source;
    v.relation = t.relation;
    v.target = t.target;
    v.score = score;
    v.analysis = std::move(analysis);
    return v;
}

} // namespace

LlmJudge::LlmJudge(LlmClient& client, int max_retries)
    : client_(client), max_retries_(max_retries) {
    if (max_retries < 0) {
        throw std::invalid_argument("max_retries must be >= 0");
    }
}

int LlmJudge::max_in_flight() const {
    return client_.config().max_in_flight;
}

ReflectionVerdict LlmJudge::judge(const Triple& t, const Entity& source, const Entity& target) {
    const std::string& relationship = t.description.empty() ? t.relation : t.description;
    std::vector<ChatMessage> messages = {
        {ChatMessage::Role::system, kJudgeSystemPrompt},
        {ChatMessage::Role::user, judge_user_prompt(source.name, target.name, relationship)},
    };
    std::string last_reply;
    for (int attempt = 0; attempt <= max_retries_; ++attempt) {
        last_reply = client_.chat_complete(messages);
        double score = 0.0;
        std::string analysis;
        if (parse_judge_reply(last_reply, score, analysis)) {
            return verdict_for(t, score, std::move(analysis));
        }
    }
    throw JudgeError("judge reply was not valid JSON after " +
                         std::to_string(max_retries_ + 1) + " attempts",
                     last_reply);
}

ReflectionVerdict MockJudge::judge(const Triple& t, const Entity&, const Entity&) {
    bool marked = t.relation.find(kBadTripleMarker) != std::string::npos ||
                  t.description.find(kBadTripleMarker) != std::string::npos;
    return verdict_for(t, marked ? 0.1 : 1.0,
                       marked ? "relation text carries the error marker" : "no issues found");
}

ReflectionVerdict FunctionJudge::judge(const Triple& t, const Entity&, const Entity&) {
    return verdict_for(t, score_(t), "");
}

ReflectionVerdict judge_triple(Judge& judge, const Triple& t, const Entity& source,
                               const Entity& target) {
    ReflectionVerdict v = judge.judge(t, source, target);
    if (v.score < 0.0) {
        v.score = 0.0;
        v.clamped = true;
    } else if (v.score > 1.0) {
        v.score = 1.0;
        v.clamped = true;
    }
    return v;
}

std::pair<KnowledgeGraph, std::vector<Triple>> filter_triples(
    const KnowledgeGraph& g, const std::map<TripleKey, double>& scores, double threshold,
    const std::string& synonym_label) {
    GraphBuilder builder;
    for (const Entity& e : g.entities()) {
        builder.add_entity(e);
    }
    std::vector<Triple> removed;
    for (const Triple& t : g.triples()) {
        if (t.relation == synonym_label) {
            builder.add_triple(t);
            continue;
        }
        auto it = scores.find(key_of(t));
        if (it == scores.end()) {
            throw std::invalid_argument("no verdict for triple (" + t.source + ", " +
                                        t.relation + ", " + t.target + ")");
        }
        if (it->second >= threshold) {
            builder.add_triple(t);
        } else {
            removed.push_back(t);
        }
    }
    return {std::move(builder).build(), std::move(removed)};
}

ReflectionResult reflect_graph(const KnowledgeGraph& g, Judge& judge, const JudgeConfig& config,
                               std::ostream* log) {
    std::vector<const Triple*> pending;
    for (const Triple& t : g.triples()) {
        if (t.relation != config.synonym_label) {
            pending.push_back(&t);
        }
    }

    std::vector<ReflectionVerdict> verdicts(pending.size());
    std::vector<std::exception_ptr> failures(pending.size());
    std::atomic<std::size_t> cursor{0};
    auto work = [&]() {
        while (true) {
            std::size_t i = cursor.fetch_add(1);
            if (i >= pending.size()) {
                return;
            }
            const Triple& t = *pending[i];
            try {
                verdicts[i] = judge_triple(judge, t, g.entity(t.source), g.entity(t.target));
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    };
    int bound = std::max(1, judge.max_in_flight());
    if (bound == 1 || pending.size() <= 1) {
        work();
    } else {
        std::vector<std::thread> workers;
        int count = static_cast<int>(std::min<std::size_t>(pending.size(),
                                                           static_cast<std::size_t>(bound)));
        workers.reserve(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i) {
            workers.emplace_back(work);
        }
        for (std::thread& w : workers) {
            w.join();
        }
    }

    for (std::size_t i = 0; i < pending.size(); ++i) {
        if (!failures[i]) {
            continue;
        }
        const Triple& t = *pending[i];
        try {
            std::rethrow_exception(failures[i]);
        } catch (const JudgeError& e) {
            throw JudgeError("judging (" + t.source + ", " + t.relation + ", " + t.target +
                                 "): " + e.what(),
                             e.raw_reply);
        } catch (const std::exception& e) {
            throw JudgeError("judging (" + t.source + ", " + t.relation + ", " + t.target +
                             "): " + e.what());
        }
    }

    if (log != nullptr) {
        write_reflection_log(verdicts, *log);
    }

    std::map<TripleKey, double> scores;
    for (const ReflectionVerdict& v : verdicts) {
        scores[TripleKey{v.source, v.relation, v.target}] = v.score;
    }
    auto [filtered, removed] = filter_triples(g, scores, config.threshold, config.synonym_label);

    ReflectionResult result;
    result.graph = std::move(filtered);
    result.verdicts = std::move(verdicts);
    result.removed = std::move(removed);
    return result;
}

} // namespace kgd
