#include "kgdenoise/pipeline.hpp"
#include "kgdenoise/synth.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

namespace {

using json = nlohmann::ordered_json;
using namespace kgd;

struct Overrides {
    std::string config_path;
    std::string in_path;
    std::string out_path;
    std::string report_path;
    std::string log_path;
    std::string blocks_path;
    std::string pairs_path;
    std::string groups_path;
    std::optional<double> threshold;
    std::optional<double> target_ratio;
    std::optional<double> reflect_threshold;
    std::optional<std::uint64_t> seed;
};

PipelineConfig load_config(const Overrides& o) {
    PipelineConfig config;
    if (!o.config_path.empty()) {
        std::ifstream in(o.config_path);
        if (!in) {
            throw std::invalid_argument("cannot open config file: " + o.config_path);
        }
        config = load_pipeline_config(in);
    }
    if (!o.in_path.empty()) config.input_path = o.in_path;
    if (!o.out_path.empty()) config.output_path = o.out_path;
    if (!o.report_path.empty()) config.report_path = o.report_path;
    if (!o.log_path.empty()) config.reflection_log_path = o.log_path;
    if (!o.blocks_path.empty()) config.blocks_path = o.blocks_path;
    if (!o.pairs_path.empty()) config.pairs_path = o.pairs_path;
    if (!o.groups_path.empty()) config.groups_path = o.groups_path;
    if (o.seed) config.seed = *o.seed;
    if (o.threshold && o.target_ratio) {
        throw std::invalid_argument(
            "set exactly one grouping criterion: threshold or target_ratio");
    }
    if (o.threshold) {
        config.threshold = *o.threshold;
        config.target_ratio.reset();
    }
    if (o.target_ratio) {
        config.target_ratio = *o.target_ratio;
        config.threshold.reset();
    }
    if (o.reflect_threshold) config.judge.threshold = *o.reflect_threshold;
    return normalize_config(std::move(config));
}

void add_common_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config_path, "JSON config file");
    cmd->add_option("--seed", o.seed, "root seed override");
}

void add_grouping_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--threshold", o.threshold, "similarity threshold (overrides target ratio)");
    cmd->add_option("--target-ratio", o.target_ratio,
                    "entity reduction ratio (overrides threshold)");
}

KnowledgeGraph read_graph(const std::string& path) {
    if (path.empty()) {
        throw std::invalid_argument("no input graph path given (use --in or the config)");
    }
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("cannot open input file: " + path);
    }
    GraphFormat format = path.size() >= 4 && path.substr(path.size() - 4) == ".tsv"
                             ? GraphFormat::tsv_triples
                             : GraphFormat::json;
    return load_graph(in, format);
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open output file: " + path);
    }
    return out;
}

void write_graph(const KnowledgeGraph& g, const std::string& path) {
    if (path.empty()) {
        save_graph(g, std::cout);
        return;
    }
    std::ofstream out = open_out(path);
    save_graph(g, out);
}

std::optional<LlmClient> maybe_client(const PipelineConfig& config) {
    if (config.service.base_url.empty()) {
        return std::nullopt;
    }
    return LlmClient(config.service, make_http_transport(config.service));
}

void write_blocks(const std::vector<Block>& blocks, std::ostream& out) {
    for (const Block& b : blocks) {
        json line;
        line["id"] = b.id;
        line["provenance"] = to_string(b.provenance);
        if (b.origin) {
            line["origin"] = *b.origin;
        }
        line["members"] = b.members;
        out << line.dump() << "\n";
    }
}

std::vector<Block> read_blocks(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("cannot open blocks file: " + path);
    }
    std::vector<Block> blocks;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object()) {
            throw std::invalid_argument("blocks file line " + std::to_string(line_no) +
                                        " is not a JSON object");
        }
        Block b;
        b.id = rec.at("id").get<int>();
        b.provenance = blocking_strategy_from(rec.at("provenance").get<std::string>());
        if (rec.contains("origin")) {
            b.origin = rec["origin"].get<std::string>();
        }
        b.members = rec.at("members").get<std::vector<EntityId>>();
        blocks.push_back(std::move(b));
    }
    return blocks;
}

void write_groups(const GroupingOutcome& outcome, std::ostream& out) {
    json doc;
    doc["groups"] = json::array();
    for (const MatchGroup& g : outcome.groups) {
        doc["groups"].push_back({{"canonical", g.canonical}, {"members", g.members}});
    }
    doc["merges"] = outcome.merges;
    doc["achieved_ratio"] = outcome.achieved_ratio;
    out << doc.dump(2) << "\n";
}

std::vector<MatchGroup> read_groups(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("cannot open groups file: " + path);
    }
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("groups")) {
        throw std::invalid_argument("groups file is not a JSON object with a groups array");
    }
    std::vector<MatchGroup> groups;
    for (const auto& rec : doc["groups"]) {
        MatchGroup g;
        g.canonical = rec.at("canonical").get<EntityId>();
        g.members = rec.at("members").get<std::vector<EntityId>>();
        groups.push_back(std::move(g));
    }
    return groups;
}

GroundTruth read_truth(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("cannot open truth file: " + path);
    }
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw std::invalid_argument("truth file is not a JSON object");
    }
    GroundTruth truth;
    for (const auto& cluster : doc.value("clusters", json::array())) {
        truth.clusters.push_back(cluster.get<std::vector<EntityId>>());
    }
    for (const auto& rec : doc.value("bad_triples", json::array())) {
        truth.bad_triples.insert(TripleKey{rec.at("source").get<EntityId>(),
                                           rec.at("relation").get<std::string>(),
                                           rec.at("target").get<EntityId>()});
    }
    return truth;
}

void write_truth(const GroundTruth& truth, std::ostream& out) {
    json doc;
    doc["clusters"] = truth.clusters;
    doc["bad_triples"] = json::array();
    for (const TripleKey& key : truth.bad_triples) {
        doc["bad_triples"].push_back(
            {{"source", key.source}, {"relation", key.relation}, {"target", key.target}});
    }
    out << doc.dump(2) << "\n";
}

NoiseSpec read_noise_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("cannot open spec file: " + path);
    }
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw std::invalid_argument("spec file is not a JSON object");
    }
    for (const auto& [key, value] : doc.items()) {
        static const std::set<std::string> allowed = {
            "base_entities",     "duplicate_clusters",         "cluster_size_min",
            "cluster_size_max",  "variant_kinds",              "triples_per_entity",
            "erroneous_triple_fraction", "seed"};
        if (!allowed.count(key)) {
            throw std::invalid_argument("unknown spec key \"" + key + "\"");
        }
    }
    NoiseSpec spec;
    spec.base_entities = doc.value("base_entities", spec.base_entities);
    spec.duplicate_clusters = doc.value("duplicate_clusters", spec.duplicate_clusters);
    spec.cluster_size_min = doc.value("cluster_size_min", spec.cluster_size_min);
    spec.cluster_size_max = doc.value("cluster_size_max", spec.cluster_size_max);
    if (doc.contains("variant_kinds")) {
        spec.variant_kinds.clear();
        for (const auto& name : doc["variant_kinds"]) {
            spec.variant_kinds.push_back(variant_kind_from(name.get<std::string>()));
        }
    }
    spec.triples_per_entity = doc.value("triples_per_entity", spec.triples_per_entity);
    spec.erroneous_triple_fraction =
        doc.value("erroneous_triple_fraction", spec.erroneous_triple_fraction);
    spec.seed = doc.value("seed", spec.seed);
    return spec;
}

void write_metrics(const PairMetrics& m, std::ostream& out) {
    json doc;
    doc["precision"] = m.precision;
    doc["recall"] = m.recall;
    doc["f1"] = m.f1;
    doc["true_positives"] = m.true_positives;
    doc["false_positives"] = m.false_positives;
    doc["false_negatives"] = m.false_negatives;
    out << doc.dump(2) << "\n";
}

int run_denoise(const Overrides& o) {
    PipelineConfig config = load_config(o);
    KnowledgeGraph g = read_graph(config.input_path);
    std::optional<LlmClient> client = maybe_client(config);
    PipelineResult result = run_pipeline(g, config, client ? &*client : nullptr);
    write_graph(result.graph, config.output_path);
    if (!config.report_path.empty()) {
        std::ofstream out = open_out(config.report_path);
        write_reduction_report(GraphStats{result.report.entities_before,
                                          result.report.triples_before, 0, 0.0, {}},
                               GraphStats{result.report.entities_after,
                                          result.report.triples_after, 0, 0.0, {}},
                               result.report.per_stage, out);
    }
    return 0;
}

int run_block(const Overrides& o) {
    PipelineConfig config = load_config(o);
    KnowledgeGraph g = read_graph(config.input_path);
    std::optional<LlmClient> client = maybe_client(config);
    EmbeddingTable table = build_embeddings(g, config, client ? &*client : nullptr);
    std::vector<Block> blocks = build_blocks(g, table, config);
    if (config.blocks_path.empty()) {
        write_blocks(blocks, std::cout);
    } else {
        std::ofstream out = open_out(config.blocks_path);
        write_blocks(blocks, out);
    }
    return 0;
}

int run_match(const Overrides& o) {
    PipelineConfig config = load_config(o);
    KnowledgeGraph g = read_graph(config.input_path);
    if (config.blocks_path.empty()) {
        throw std::invalid_argument("no blocks path given (use --blocks or the config)");
    }
    std::vector<Block> blocks = read_blocks(config.blocks_path);
    std::optional<LlmClient> client = maybe_client(config);
    EmbeddingTable table = build_embeddings(g, config, client ? &*client : nullptr);
    MatchContext ctx(g, table);
    std::vector<ScoredPair> scored = score_pairs(ctx, candidate_pairs(blocks),
                                                 config.similarity_mode, config.type_averaging);
    if (!config.pairs_path.empty()) {
        std::ofstream out = open_out(config.pairs_path);
        for (const ScoredPair& p : scored) {
            json line = {{"a", p.a}, {"b", p.b}, {"sim", p.similarity}};
            out << line.dump() << "\n";
        }
    }
    GroupingOutcome outcome;
    if (config.threshold) {
        outcome.groups =
            group_by_threshold(scored, *config.threshold, config.canonical_policy, config.seed);
        for (const MatchGroup& grp : outcome.groups) {
            outcome.merges += static_cast<long>(grp.members.size()) - 1;
        }
        long n = graph_stats(g).entity_count;
        outcome.achieved_ratio = n > 0 ? static_cast<double>(outcome.merges) / n : 0.0;
    } else {
        outcome = group_by_target_ratio(scored, graph_stats(g).entity_count,
                                        *config.target_ratio, config.canonical_policy,
                                        config.seed);
    }
    if (config.groups_path.empty()) {
        write_groups(outcome, std::cout);
    } else {
        std::ofstream out = open_out(config.groups_path);
        write_groups(outcome, out);
    }
    return 0;
}

int run_merge(const Overrides& o) {
    PipelineConfig config = load_config(o);
    KnowledgeGraph g = read_graph(config.input_path);
    if (config.groups_path.empty()) {
        throw std::invalid_argument("no groups path given (use --groups or the config)");
    }
    MergePlan plan{read_groups(config.groups_path), config.merge_strategy, config.synonym_label,
                   config.token_budget};
    std::optional<LlmClient> client = maybe_client(config);
    SummarizerFactory summarizers =
        client ? make_llm_summarizer_factory(*client) : SummarizerFactory{};
    KnowledgeGraph merged = apply_merge(g, plan, summarizers);
    write_graph(merged, config.output_path);
    return 0;
}

int run_reflect(const Overrides& o) {
    PipelineConfig config = load_config(o);
    KnowledgeGraph g = read_graph(config.input_path);
    std::optional<LlmClient> client = maybe_client(config);
    MockJudge mock;
    std::optional<LlmJudge> llm;
    Judge* judge = &mock;
    if (config.judge.backend == "llm") {
        if (!client) {
            throw std::invalid_argument("the llm judge backend needs service.base_url");
        }
        llm.emplace(*client, config.judge.max_retries);
        judge = &*llm;
    }
    std::ofstream log_file;
    std::ostream* log = nullptr;
    if (!config.reflection_log_path.empty()) {
        log_file = open_out(config.reflection_log_path);
        log = &log_file;
    }
    ReflectionResult result = reflect_graph(g, *judge, config.judge, log);
    write_graph(result.graph, config.output_path);
    return 0;
}

int run_stats(const std::string& path) {
    KnowledgeGraph g = read_graph(path);
    GraphStats stats = graph_stats(g);
    json doc;
    doc["entities"] = stats.entity_count;
    doc["triples"] = stats.triple_count;
    doc["relation_labels"] = stats.relation_label_count;
    doc["avg_description_tokens"] = stats.avg_description_tokens;
    doc["per_type"] = json::object();
    for (const auto& [type, count] : stats.per_type_counts) {
        doc["per_type"][type] = count;
    }
    doc["connected_components"] = static_cast<long>(connected_components(g).size());
    std::cout << doc.dump(2) << "\n";
    return 0;
}

int run_synth(const std::string& spec_path, const std::string& out_path,
              const std::string& truth_path) {
    NoiseSpec spec = read_noise_spec(spec_path);
    auto [graph, truth] = generate_noisy_kg(spec);
    write_graph(graph, out_path);
    if (!truth_path.empty()) {
        std::ofstream out = open_out(truth_path);
        write_truth(truth, out);
    }
    return 0;
}

int run_eval(const std::string& truth_path, const std::string& groups_path,
             const std::string& graph_path, const std::string& before_path,
             const std::string& after_path) {
    GroundTruth truth = read_truth(truth_path);
    bool resolution = !groups_path.empty();
    bool reflection = !before_path.empty() || !after_path.empty();
    if (resolution == reflection) {
        throw std::invalid_argument(
            "pass either --groups with --graph (resolution) or --before with --after "
            "(reflection)");
    }
    if (resolution) {
        if (graph_path.empty()) {
            throw std::invalid_argument("resolution eval needs --graph for the entity universe");
        }
        KnowledgeGraph g = read_graph(graph_path);
        PairMetrics m = resolution_metrics(read_groups(groups_path), truth, g.entity_ids());
        write_metrics(m, std::cout);
        return 0;
    }
    if (before_path.empty() || after_path.empty()) {
        throw std::invalid_argument("reflection eval needs both --before and --after graphs");
    }
    KnowledgeGraph before = read_graph(before_path);
    KnowledgeGraph after = read_graph(after_path);
    std::set<TripleKey> kept;
    for (const Triple& t : after.triples()) {
        kept.insert(key_of(t));
    }
    std::set<TripleKey> removed;
    for (const Triple& t : before.triples()) {
        if (!kept.count(key_of(t))) {
            removed.insert(key_of(t));
        }
    }
    PairMetrics m = reflection_metrics(removed, truth, before.triples());
    write_metrics(m, std::cout);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"knowledge graph denoising: entity resolution and triple reflection"};
    app.require_subcommand(1);

    Overrides o;
    int rc = 0;

    CLI::App* denoise = app.add_subcommand("denoise", "run the full pipeline");
    add_common_flags(denoise, o);
    add_grouping_flags(denoise, o);
    denoise->add_option("--in", o.in_path, "input graph (json, or .tsv triples)");
    denoise->add_option("--out", o.out_path, "output graph path (stdout when omitted)");
    denoise->add_option("--report", o.report_path, "reduction report path");
    denoise->add_option("--reflection-log", o.log_path, "reflection verdicts JSONL path");
    denoise->add_option("--reflect-threshold", o.reflect_threshold,
                        "triple reflection keep threshold");
    denoise->callback([&] { rc = run_denoise(o); });

    CLI::App* block = app.add_subcommand("block", "compute candidate blocks");
    add_common_flags(block, o);
    block->add_option("--in", o.in_path, "input graph");
    block->add_option("--out", o.blocks_path, "blocks JSONL path (stdout when omitted)");
    block->callback([&] { rc = run_block(o); });

    CLI::App* match = app.add_subcommand("match", "score candidate pairs and group them");
    add_common_flags(match, o);
    add_grouping_flags(match, o);
    match->add_option("--in", o.in_path, "input graph");
    match->add_option("--blocks", o.blocks_path, "blocks JSONL from the block stage");
    match->add_option("--pairs", o.pairs_path, "scored pairs JSONL path");
    match->add_option("--out", o.groups_path, "groups JSON path (stdout when omitted)");
    match->callback([&] { rc = run_match(o); });

    CLI::App* merge = app.add_subcommand("merge", "apply a merge plan to a graph");
    add_common_flags(merge, o);
    merge->add_option("--in", o.in_path, "input graph");
    merge->add_option("--groups", o.groups_path, "groups JSON from the match stage");
    merge->add_option("--out", o.out_path, "merged graph path (stdout when omitted)");
    merge->callback([&] { rc = run_merge(o); });

    CLI::App* reflect = app.add_subcommand("reflect", "judge triples and drop low scorers");
    add_common_flags(reflect, o);
    reflect->add_option("--in", o.in_path, "input graph");
    reflect->add_option("--out", o.out_path, "filtered graph path (stdout when omitted)");
    reflect->add_option("--log", o.log_path, "verdicts JSONL path");
    reflect->add_option("--reflect-threshold", o.reflect_threshold,
                        "triple reflection keep threshold");
    reflect->callback([&] { rc = run_reflect(o); });

    std::string stats_path;
    CLI::App* stats = app.add_subcommand("stats", "print graph statistics");
    stats->add_option("graph", stats_path, "graph file")->required();
    stats->callback([&] { rc = run_stats(stats_path); });

    std::string spec_path, synth_out, truth_out;
    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic noisy graph");
    synth->add_option("--spec", spec_path, "noise spec JSON")->required();
    synth->add_option("--out", synth_out, "output graph path (stdout when omitted)");
    synth->add_option("--truth", truth_out, "ground truth JSON path");
    synth->callback([&] { rc = run_synth(spec_path, synth_out, truth_out); });

    std::string truth_path, eval_groups, eval_graph, eval_before, eval_after;
    CLI::App* eval = app.add_subcommand("eval", "score output against ground truth");
    eval->add_option("--truth", truth_path, "ground truth JSON")->required();
    eval->add_option("--groups", eval_groups, "predicted groups JSON (resolution mode)");
    eval->add_option("--graph", eval_graph, "graph defining the entity universe");
    eval->add_option("--before", eval_before, "graph before reflection (reflection mode)");
    eval->add_option("--after", eval_after, "graph after reflection (reflection mode)");
    eval->callback(
        [&] { rc = run_eval(truth_path, eval_groups, eval_graph, eval_before, eval_after); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const LoadError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return rc;
}
