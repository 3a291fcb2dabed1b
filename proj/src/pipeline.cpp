#include "kgdenoise/pipeline.hpp"

#include "kgdenoise/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <set>
#include <utility>

#include <json.hpp>

namespace kgd {

std::string to_string(EmbeddingSource source) {
    switch (source) {
    case EmbeddingSource::transe: return "transe";
    case EmbeddingSource::distmult: return "distmult";
    case EmbeddingSource::complex_bilinear: return "complex";
    case EmbeddingSource::external_file: return "external_file";
    case EmbeddingSource::service: return "service";
    case EmbeddingSource::mock: return "mock";
    }
    return "unknown";
}

EmbeddingSource embedding_source_from(const std::string& name) {
    if (name == "transe") return EmbeddingSource::transe;
    if (name == "distmult") return EmbeddingSource::distmult;
    if (name == "complex") return EmbeddingSource::complex_bilinear;
    if (name == "external_file") return EmbeddingSource::external_file;
    if (name == "service") return EmbeddingSource::service;
    if (name == "mock") return EmbeddingSource::mock;
    throw std::invalid_argument("unknown embedding source: \"" + name + "\"");
}

std::string to_string(CanonicalPolicy policy) {
    return policy == CanonicalPolicy::min_id ? "min_id" : "seeded_random";
}

CanonicalPolicy canonical_policy_from(const std::string& name) {
    if (name == "min_id") return CanonicalPolicy::min_id;
    if (name == "seeded_random") return CanonicalPolicy::seeded_random;
    throw std::invalid_argument("unknown canonical policy: \"" + name + "\"");
}

BlockProvenance blocking_strategy_from(const std::string& name) {
    if (name == "semantic") return BlockProvenance::semantic;
    if (name == "type") return BlockProvenance::type;
    if (name == "structural") return BlockProvenance::structural;
    throw std::invalid_argument("unknown blocking strategy: \"" + name + "\"");
}

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& section,
                std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : obj.items()) {
        if (std::find_if(allowed.begin(), allowed.end(),
                         [&key](const char* a) { return key == a; }) == allowed.end()) {
            throw std::invalid_argument("unknown config key \"" + key + "\" in " + section);
        }
    }
}

const json& section(const json& doc, const char* name) {
    static const json empty = json::object();
    if (!doc.contains(name)) {
        return empty;
    }
    if (!doc[name].is_object()) {
        throw std::invalid_argument(std::string("config section \"") + name +
                                    "\" must be an object");
    }
    return doc[name];
}

template <typename T>
T field_or(const json& obj, const char* key, T fallback) {
    if (!obj.contains(key)) {
        return fallback;
    }
    try {
        return obj[key].get<T>();
    } catch (const json::exception&) {
        throw std::invalid_argument(std::string("config key \"") + key +
                                    "\" has the wrong type");
    }
}

std::string string_field(const json& obj, const char* key, const std::string& fallback) {
    return field_or<std::string>(obj, key, fallback);
}

} // namespace

PipelineConfig load_pipeline_config(std::istream& in) {
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw std::invalid_argument("config is not a JSON object");
    }
    check_keys(doc, "config",
               {"input", "output", "report", "reflection_log", "blocks", "pairs", "groups",
                "seed", "blocking", "embeddings", "matching", "grouping", "canonical_policy",
                "merging", "reflection", "service"});

    PipelineConfig config;
    config.input_path = string_field(doc, "input", "");
    config.output_path = string_field(doc, "output", "");
    config.report_path = string_field(doc, "report", "");
    config.reflection_log_path = string_field(doc, "reflection_log", "");
    config.blocks_path = string_field(doc, "blocks", "");
    config.pairs_path = string_field(doc, "pairs", "");
    config.groups_path = string_field(doc, "groups", "");
    config.seed = field_or<std::uint64_t>(doc, "seed", 0);

    const json& blocking = section(doc, "blocking");
    check_keys(blocking, "blocking", {"strategy", "max_block_size"});
    config.blocking = blocking_strategy_from(string_field(blocking, "strategy", "semantic"));
    config.max_block_size =
        static_cast<std::size_t>(field_or<long>(blocking, "max_block_size", 200));

    const json& embeddings = section(doc, "embeddings");
    check_keys(embeddings, "embeddings",
               {"source", "path", "dimension", "epochs", "learning_rate",
                "negatives_per_positive", "margin", "batch_size", "norm"});
    config.embedding_source =
        embedding_source_from(string_field(embeddings, "source", "service"));
    config.external_embeddings_path = string_field(embeddings, "path", "");
    config.train.dimension = field_or<int>(embeddings, "dimension", config.train.dimension);
    config.train.epochs = field_or<int>(embeddings, "epochs", config.train.epochs);
    config.train.learning_rate =
        field_or<double>(embeddings, "learning_rate", config.train.learning_rate);
    config.train.negatives_per_positive = field_or<int>(embeddings, "negatives_per_positive",
                                                        config.train.negatives_per_positive);
    config.train.margin = field_or<double>(embeddings, "margin", config.train.margin);
    config.train.batch_size = field_or<int>(embeddings, "batch_size", config.train.batch_size);
    std::string norm = string_field(embeddings, "norm", "l2");
    if (norm != "l1" && norm != "l2") {
        throw std::invalid_argument("embeddings.norm must be \"l1\" or \"l2\"");
    }
    config.train.norm = norm == "l1" ? Norm::l1 : Norm::l2;

    const json& matching = section(doc, "matching");
    check_keys(matching, "matching", {"mode", "type_averaging"});
    config.similarity_mode = similarity_mode_from(string_field(matching, "mode", "ego"));
    std::string averaging = string_field(matching, "type_averaging", "shared_types");
    if (averaging != "shared_types" && averaging != "all_types") {
        throw std::invalid_argument(
            "matching.type_averaging must be \"shared_types\" or \"all_types\"");
    }
    config.type_averaging =
        averaging == "all_types" ? TypeAveraging::all_types : TypeAveraging::shared_types;

    const json& grouping = section(doc, "grouping");
    check_keys(grouping, "grouping", {"threshold", "target_ratio"});
    if (grouping.contains("threshold")) {
        config.threshold = field_or<double>(grouping, "threshold", 0.0);
    }
    if (grouping.contains("target_ratio")) {
        config.target_ratio = field_or<double>(grouping, "target_ratio", 0.0);
    }

    config.canonical_policy =
        canonical_policy_from(string_field(doc, "canonical_policy", "seeded_random"));

    const json& merging = section(doc, "merging");
    check_keys(merging, "merging", {"strategy", "synonym_label", "token_budget"});
    config.merge_strategy =
        merge_strategy_from(string_field(merging, "strategy", "direct_merge"));
    config.synonym_label = string_field(merging, "synonym_label", "synonym_of");
    config.token_budget = field_or<long>(merging, "token_budget", 4000);

    const json& reflection = section(doc, "reflection");
    check_keys(reflection, "reflection", {"enabled", "backend", "threshold", "max_retries"});
    config.reflection_enabled = field_or<bool>(reflection, "enabled", true);
    config.judge.backend = string_field(reflection, "backend", "mock");
    config.judge.threshold = field_or<double>(reflection, "threshold", 0.2);
    config.judge.max_retries = field_or<int>(reflection, "max_retries", 3);

    const json& service = section(doc, "service");
    check_keys(service, "service",
               {"base_url", "api_key_env", "chat_model", "embed_model", "timeout_ms",
                "max_retries", "max_in_flight", "embed_batch_size"});
    config.service.base_url = string_field(service, "base_url", "");
    config.service.api_key_env =
        string_field(service, "api_key_env", config.service.api_key_env);
    config.service.chat_model = string_field(service, "chat_model", "");
    config.service.embed_model = string_field(service, "embed_model", "");
    config.service.timeout =
        std::chrono::milliseconds(field_or<long>(service, "timeout_ms", 30000));
    config.service.max_retries = field_or<int>(service, "max_retries", 3);
    config.service.max_in_flight = field_or<int>(service, "max_in_flight", 4);
    config.service.embed_batch_size = field_or<int>(service, "embed_batch_size", 64);

    return normalize_config(std::move(config));
}

PipelineConfig normalize_config(PipelineConfig config) {
    if (config.threshold && config.target_ratio) {
        throw std::invalid_argument(
            "set exactly one grouping criterion: threshold or target_ratio");
    }
    if (!config.threshold && !config.target_ratio) {
        config.target_ratio = 0.4;
    }
    if (config.threshold && !std::isfinite(*config.threshold)) {
        throw std::invalid_argument("grouping threshold must be finite");
    }
    if (config.target_ratio && !(*config.target_ratio >= 0.0 && *config.target_ratio < 1.0)) {
        throw std::invalid_argument("target_ratio must lie in [0, 1)");
    }
    if (config.max_block_size < 2) {
        throw std::invalid_argument("max_block_size must be >= 2");
    }
    if (config.token_budget < 1) {
        throw std::invalid_argument("token_budget must be >= 1");
    }
    if (config.synonym_label.empty()) {
        throw std::invalid_argument("synonym_label must be non-empty");
    }
    if (config.judge.backend != "mock" && config.judge.backend != "llm") {
        throw std::invalid_argument("reflection.backend must be \"mock\" or \"llm\"");
    }
    if (!(config.judge.threshold >= 0.0 && config.judge.threshold <= 1.0)) {
        throw std::invalid_argument("reflection.threshold must lie in [0, 1]");
    }
    if (config.judge.max_retries < 0) {
        throw std::invalid_argument("reflection.max_retries must be >= 0");
    }
    if (config.embedding_source == EmbeddingSource::external_file &&
        config.external_embeddings_path.empty()) {
        throw std::invalid_argument("embeddings.path is required for the external_file source");
    }
    config.judge.synonym_label = config.synonym_label;
    return config;
}

EmbeddingTable build_embeddings(const KnowledgeGraph& g, const PipelineConfig& config,
                                LlmClient* client) {
    switch (config.embedding_source) {
    case EmbeddingSource::transe:
    case EmbeddingSource::distmult:
    case EmbeddingSource::complex_bilinear: {
        ModelKind kind = config.embedding_source == EmbeddingSource::transe
                             ? ModelKind::transe
                             : (config.embedding_source == EmbeddingSource::distmult
                                    ? ModelKind::distmult
                                    : ModelKind::complex_bilinear);
        TrainConfig train = config.train;
        train.seed = config.seed;
        return train_kg_embeddings(g, kind, train);
    }
    case EmbeddingSource::external_file: {
        std::ifstream in(config.external_embeddings_path);
        if (!in) {
            throw std::invalid_argument("cannot open embeddings file: " +
                                        config.external_embeddings_path);
        }
        std::vector<EntityId> ids = g.entity_ids();
        return load_external_embeddings(in, std::set<EntityId>(ids.begin(), ids.end()));
    }
    case EmbeddingSource::service: {
        if (client == nullptr) {
            throw std::invalid_argument("service embeddings require a configured LLM client");
        }
        ServiceEmbedder embedder(*client);
        return embed_descriptions(g.entities(), embedder);
    }
    case EmbeddingSource::mock:
        return mock_embedding_table(g, config.train.dimension, config.seed);
    }
    throw std::invalid_argument("unknown embedding source");
}

std::vector<Block> build_blocks(const KnowledgeGraph& g, const EmbeddingTable& table,
                                const PipelineConfig& config) {
    switch (config.blocking) {
    case BlockProvenance::semantic: return semantic_blocks(g, table, config.seed);
    case BlockProvenance::type: return type_blocks(g, table, config.max_block_size, config.seed);
    case BlockProvenance::structural: return structural_blocks(g);
    }
    throw std::invalid_argument("unknown blocking strategy");
}

namespace {

template <typename F>
auto guarded(const char* stage, F&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const PipelineError&) {
        throw;
    } catch (const std::exception& e) {
        throw PipelineError(stage, e.what());
    }
}

} // namespace

PipelineResult run_pipeline(const KnowledgeGraph& g, const PipelineConfig& raw_config,
                            LlmClient* client) {
    PipelineConfig config = normalize_config(raw_config);
    std::vector<std::pair<std::string, StageCounts>> stages;
    GraphStats before = graph_stats(g);
    stages.push_back({"input",
                      {{"entities", before.entity_count}, {"triples", before.triple_count}}});

    EmbeddingTable table = guarded("embeddings", [&] {
        EmbeddingTable t = build_embeddings(g, config, client);
        std::vector<EntityId> missing = t.missing_ids(g.entity_ids());
        if (!missing.empty()) {
            throw std::invalid_argument("embedding coverage incomplete for " +
                                        std::to_string(missing.size()) +
                                        " entities; first missing id: \"" + missing.front() +
                                        "\"");
        }
        return t;
    });
    long vector_length = table.entity_vectors.empty()
                             ? 0
                             : static_cast<long>(table.entity_vectors.begin()->second.size());
    stages.push_back(
        {"embeddings",
         {{"entities_covered", static_cast<long>(table.entity_vectors.size())},
          {"vector_length", vector_length}}});

    std::vector<Block> blocks = guarded("blocking", [&] { return build_blocks(g, table, config); });
    long largest_block = 0;
    for (const Block& b : blocks) {
        largest_block = std::max(largest_block, static_cast<long>(b.members.size()));
    }
    stages.push_back({"blocking",
                      {{"blocks", static_cast<long>(blocks.size())},
                       {"largest_block", largest_block}}});

    std::vector<std::pair<EntityId, EntityId>> pairs =
        guarded("candidate_pairs", [&] { return candidate_pairs(blocks); });
    stages.push_back({"candidate_pairs", {{"pairs", static_cast<long>(pairs.size())}}});

    MatchContext ctx(g, table);
    std::vector<ScoredPair> scored = guarded("scoring", [&] {
        return score_pairs(ctx, pairs, config.similarity_mode, config.type_averaging);
    });
    stages.push_back({"scoring", {{"scored_pairs", static_cast<long>(scored.size())}}});

    GroupingOutcome grouping = guarded("grouping", [&] {
        GroupingOutcome outcome;
        if (before.entity_count == 0) {
            return outcome;
        }
        if (config.threshold) {
            outcome.groups = group_by_threshold(scored, *config.threshold,
                                                config.canonical_policy, config.seed);
            for (const MatchGroup& grp : outcome.groups) {
                outcome.merges += static_cast<long>(grp.members.size()) - 1;
            }
            outcome.achieved_ratio =
                static_cast<double>(outcome.merges) / static_cast<double>(before.entity_count);
            return outcome;
        }
        return group_by_target_ratio(scored, before.entity_count, *config.target_ratio,
                                     config.canonical_policy, config.seed);
    });
    long grouped_entities = 0;
    for (const MatchGroup& grp : grouping.groups) {
        grouped_entities += static_cast<long>(grp.members.size());
    }
    stages.push_back({"grouping",
                      {{"groups", static_cast<long>(grouping.groups.size())},
                       {"grouped_entities", grouped_entities},
                       {"merges", grouping.merges}}});

    PipelineResult result;
    result.achieved_ratio = grouping.achieved_ratio;

    MergePlan plan{grouping.groups, config.merge_strategy, config.synonym_label,
                   config.token_budget};
    SummarizerFactory summarizers =
        client != nullptr ? make_llm_summarizer_factory(*client) : SummarizerFactory{};
    KnowledgeGraph merged = guarded("merging", [&] {
        return apply_merge(g, plan, summarizers, &result.aggregation);
    });
    GraphStats after_merge = graph_stats(merged);
    stages.push_back({"merging",
                      {{"entities_after", after_merge.entity_count},
                       {"triples_after", after_merge.triple_count},
                       {"summarizer_calls", result.aggregation.summarizer_calls},
                       {"fallback_truncations", result.aggregation.fallback_truncations}}});

    if (config.reflection_enabled) {
        MockJudge mock;
        std::optional<LlmJudge> llm;
        Judge* judge = &mock;
        if (config.judge.backend == "llm") {
            if (client == nullptr) {
                throw PipelineError("reflection", "llm judge requires a configured LLM client");
            }
            llm.emplace(*client, config.judge.max_retries);
            judge = &*llm;
        }
        std::ofstream log_file;
        std::ostream* log = nullptr;
        if (!config.reflection_log_path.empty()) {
            log_file.open(config.reflection_log_path, std::ios::trunc);
            if (!log_file) {
                throw PipelineError("reflection", "cannot open reflection log: " +
                                                      config.reflection_log_path);
            }
            log = &log_file;
        }
        ReflectionResult reflected = guarded(
            "reflection", [&] { return reflect_graph(merged, *judge, config.judge, log); });
        stages.push_back({"reflection",
                          {{"judged", static_cast<long>(reflected.verdicts.size())},
                           {"removed", static_cast<long>(reflected.removed.size())}}});
        result.graph = std::move(reflected.graph);
        result.verdicts = std::move(reflected.verdicts);
    } else {
        result.graph = std::move(merged);
    }

    GraphStats after = graph_stats(result.graph);
    result.report = guarded(
        "report", [&] { return make_reduction_report(before, after, std::move(stages)); });
    return result;
}

} // namespace kgd
