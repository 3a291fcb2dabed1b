#include "kgdenoise/graph_io.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace kgd {

namespace {

using json = nlohmann::ordered_json;

constexpr const char* kFormatVersion = "1.0";

KnowledgeGraph from_json_document(const json& doc) {
    GraphBuilder builder;
    for (const auto& rec : doc.value("entities", json::array())) {
        Entity e;
        e.id = rec.at("id").get<std::string>();
        e.name = rec.at("name").get<std::string>();
        e.entity_type = rec.value("type", "");
        e.description = rec.value("description", "");
        e.source_chunk = rec.value("source_chunk", "");
        builder.add_entity(std::move(e));
    }
    for (const auto& rec : doc.value("triples", json::array())) {
        Triple t;
        t.source = rec.at("source").get<std::string>();
        t.relation = rec.at("relation").get<std::string>();
        t.target = rec.at("target").get<std::string>();
        t.description = rec.value("description", "");
        t.source_chunk = rec.value("source_chunk", "");
        builder.add_triple(std::move(t));
    }
    return std::move(builder).build();
}

KnowledgeGraph load_tsv(std::istream& in) {
    GraphBuilder builder;
    std::set<EntityId> seen;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        auto tab1 = line.find('\t');
        auto tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
        if (tab1 == std::string::npos || tab2 == std::string::npos)
            throw LoadError("tsv parse error at line " + std::to_string(line_no) +
                            ": expected source<TAB>relation<TAB>target");
        std::string source = line.substr(0, tab1);
        std::string relation = line.substr(tab1 + 1, tab2 - tab1 - 1);
        std::string target = line.substr(tab2 + 1);
        if (source.empty() || relation.empty() || target.empty())
            throw LoadError("tsv parse error at line " + std::to_string(line_no) +
                            ": empty field");
        for (const auto& name : {source, target}) {
            if (seen.insert(name).second)
                builder.add_entity(Entity{name, name, "", "", ""});
        }
        builder.add_triple(Triple{source, relation, target, "", ""});
    }
    return std::move(builder).build();
}

} // namespace

double reduction_pct(long before, long after) {
    if (before == 0)
        return 0.0;
    double pct = static_cast<double>(before - after) / static_cast<double>(before) * 100.0;
    return std::round(pct * 100.0) / 100.0;
}

KnowledgeGraph load_graph(std::istream& in, GraphFormat format) {
    KnowledgeGraph g;
    if (format == GraphFormat::tsv_triples) {
        g = load_tsv(in);
    } else {
        json doc;
        try {
            doc = json::parse(in);
        } catch (const json::parse_error& e) {
            throw LoadError(std::string("json parse error: ") + e.what());
        }
        try {
            g = from_json_document(doc);
        } catch (const json::exception& e) {
            throw LoadError(std::string("graph document error: ") + e.what());
        }
    }
    auto violations = validate(g);
    if (!violations.empty())
        throw LoadError("graph fails validation: " + violations.front().message +
                        (violations.size() > 1
                             ? " (+" + std::to_string(violations.size() - 1) + " more)"
                             : ""));
    return g;
}

void save_graph(const KnowledgeGraph& g, std::ostream& out, GraphFormat format) {
    if (format != GraphFormat::json)
        throw std::invalid_argument("save_graph supports only the json format");
    auto violations = validate(g);
    if (!violations.empty())
        throw std::invalid_argument("refusing to save invalid graph: " + violations.front().message);

    auto entities = g.entities();
    std::sort(entities.begin(), entities.end(),
              [](const Entity& a, const Entity& b) { return a.id < b.id; });
    auto triples = g.triples();
    std::sort(triples.begin(), triples.end(), [](const Triple& a, const Triple& b) {
        return std::tie(a.source, a.relation, a.target, a.description, a.source_chunk) <
               std::tie(b.source, b.relation, b.target, b.description, b.source_chunk);
    });

    json doc;
    doc["format_version"] = kFormatVersion;
    doc["entities"] = json::array();
    for (const auto& e : entities) {
        doc["entities"].push_back({{"id", e.id},
                                   {"name", e.name},
                                   {"type", e.entity_type},
                                   {"description", e.description},
                                   {"source_chunk", e.source_chunk}});
    }
    doc["triples"] = json::array();
    for (const auto& t : triples) {
        doc["triples"].push_back({{"source", t.source},
                                  {"relation", t.relation},
                                  {"target", t.target},
                                  {"description", t.description},
                                  {"source_chunk", t.source_chunk}});
    }
    out << doc.dump(2) << "\n";
}

void write_reflection_log(const std::vector<ReflectionVerdict>& verdicts, std::ostream& out) {
    for (const auto& v : verdicts) {
        double score = std::round(v.score * 100.0) / 100.0;
        json line = {{"source", v.source},
                     {"relation", v.relation},
                     {"target", v.target},
                     {"score", score},
                     {"analysis", v.analysis}};
        out << line.dump() << "\n";
    }
}

ReductionReport make_reduction_report(const GraphStats& before, const GraphStats& after,
                                      std::vector<std::pair<std::string, StageCounts>> stages) {
    if (after.entity_count > before.entity_count || after.triple_count > before.triple_count)
        throw std::invalid_argument("reduction report requires after <= before");
    ReductionReport r;
    r.entities_before = before.entity_count;
    r.entities_after = after.entity_count;
    r.entity_reduction_pct = reduction_pct(before.entity_count, after.entity_count);
    r.triples_before = before.triple_count;
    r.triples_after = after.triple_count;
    r.triple_reduction_pct = reduction_pct(before.triple_count, after.triple_count);
    r.per_stage = std::move(stages);
    return r;
}

void write_reduction_report(const GraphStats& before, const GraphStats& after,
                            const std::vector<std::pair<std::string, StageCounts>>& stages,
                            std::ostream& out) {
    ReductionReport r = make_reduction_report(before, after, stages);
    json doc;
    doc["entities_before"] = r.entities_before;
    doc["entities_after"] = r.entities_after;
    doc["entity_reduction_pct"] = r.entity_reduction_pct;
    doc["triples_before"] = r.triples_before;
    doc["triples_after"] = r.triples_after;
    doc["triple_reduction_pct"] = r.triple_reduction_pct;
    json stages_doc = json::object();
    for (const auto& [name, counts] : r.per_stage) {
        json entry = json::object();
        for (const auto& [k, v] : counts)
            entry[k] = v;
        stages_doc[name] = entry;
    }
    doc["per_stage"] = stages_doc;
    out << doc.dump(2) << "\n";
}

} // namespace kgd
