#include "kgdenoise/embedding.hpp"

#include "kgdenoise/graph_io.hpp"
#include "kgdenoise/llm_client.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <random>
#include <stdexcept>
#include <unordered_set>
#include <utility>

#include <json.hpp>

namespace kgd {
namespace {

constexpr double kZeroNormGuard = 1e-12;

// Gradient of ||x|| with respect to x.
Vector norm_gradient(const Vector& x, Norm norm) {
    if (norm == Norm::l1) {
        return x.array().sign().matrix();
    }
    double n = x.norm();
    if (n < kZeroNormGuard) {
        return Vector::Zero(x.size());
    }
    return x / n;
}

double stable_softplus(double z) {
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double stable_sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    double e = std::exp(z);
    return e / (1.0 + e);
}

void check_label(double label) {
    if (label != 1.0 && label != -1.0) {
        throw std::invalid_argument("label must be +1 or -1");
    }
}

void check_same_size(VectorRef h, VectorRef r, VectorRef t) {
    if (h.size() != r.size() || h.size() != t.size()) {
        throw std::invalid_argument("embedding vectors must share one length");
    }
}

struct ComplexHalves {
    Eigen::ArrayXd re, im;
};

ComplexHalves split(VectorRef v) {
    Eigen::Index d = v.size() / 2;
    return {v.head(d).array(), v.tail(d).array()};
}

} // namespace

std::string to_string(ModelKind kind) {
    switch (kind) {
    case ModelKind::transe: return "transe";
    case ModelKind::distmult: return "distmult";
    case ModelKind::complex_bilinear: return "complex";
    case ModelKind::external: return "external";
    }
    return "unknown";
}

const Vector& EmbeddingTable::entity(const EntityId& id) const {
    auto it = entity_vectors.find(id);
    if (it == entity_vectors.end()) {
        throw std::out_of_range("no embedding for entity: " + id);
    }
    return it->second;
}

std::vector<EntityId> EmbeddingTable::missing_ids(const std::vector<EntityId>& expected) const {
    std::vector<EntityId> missing;
    for (const EntityId& id : expected) {
        if (!entity_vectors.count(id)) {
            missing.push_back(id);
        }
    }
    return missing;
}

double score_transe(VectorRef h, VectorRef r, VectorRef t, Norm norm) {
    check_same_size(h, r, t);
    Vector x = h + r - t;
    return norm == Norm::l1 ? -x.lpNorm<1>() : -x.norm();
}

double score_distmult(VectorRef h, VectorRef r, VectorRef t) {
    check_same_size(h, r, t);
    return (h.array() * r.array() * t.array()).sum();
}

double score_complex(VectorRef h, VectorRef r, VectorRef t) {
    check_same_size(h, r, t);
    if (h.size() % 2 != 0) {
        throw std::invalid_argument("complex vectors must have even stored length");
    }
    auto [hre, him] = split(h);
    auto [rre, rim] = split(r);
    auto [tre, tim] = split(t);
    return ((hre * rre - him * rim) * tre + (hre * rim + him * rre) * tim).sum();
}

double transe_margin_loss(VectorRef h, VectorRef r, VectorRef t, VectorRef neg_h,
                          VectorRef neg_t, double margin, Norm norm) {
    double pos = -score_transe(h, r, t, norm);
    double neg = -score_transe(neg_h, r, neg_t, norm);
    return std::max(0.0, margin + pos - neg);
}

MarginGradients transe_margin_grad(VectorRef h, VectorRef r, VectorRef t, VectorRef neg_h,
                                   VectorRef neg_t, double margin, Norm norm) {
    MarginGradients out;
    out.loss = transe_margin_loss(h, r, t, neg_h, neg_t, margin, norm);
    Eigen::Index len = h.size();
    out.dh = Vector::Zero(len);
    out.dr = Vector::Zero(len);
    out.dt = Vector::Zero(len);
    out.dneg_h = Vector::Zero(len);
    out.dneg_t = Vector::Zero(len);
    if (out.loss <= 0.0) {
        return out;
    }
    Vector u_pos = norm_gradient(h + r - t, norm);
    Vector u_neg = norm_gradient(neg_h + r - neg_t, norm);
    out.dh = u_pos;
    out.dt = -u_pos;
    out.dneg_h = -u_neg;
    out.dneg_t = u_neg;
    out.dr = u_pos - u_neg;
    return out;
}

double logistic_loss(double score, double label) {
    check_label(label);
    return stable_softplus(-label * score);
}

TripleGradients distmult_logistic_grad(VectorRef h, VectorRef r, VectorRef t, double label) {
    check_label(label);
    double s = score_distmult(h, r, t);
    TripleGradients out;
    out.loss = stable_softplus(-label * s);
    double g = -label * stable_sigmoid(-label * s);
    out.dh = g * (r.array() * t.array()).matrix();
    out.dr = g * (h.array() * t.array()).matrix();
    out.dt = g * (h.array() * r.array()).matrix();
    return out;
}

TripleGradients complex_logistic_grad(VectorRef h, VectorRef r, VectorRef t, double label) {
    check_label(label);
    double s = score_complex(h, r, t);
    TripleGradients out;
    out.loss = stable_softplus(-label * s);
    double g = -label * stable_sigmoid(-label * s);
    auto [hre, him] = split(h);
    auto [rre, rim] = split(r);
    auto [tre, tim] = split(t);
    Eigen::Index d = h.size() / 2;
    out.dh.resize(2 * d);
    out.dr.resize(2 * d);
    out.dt.resize(2 * d);
    out.dh.head(d) = g * (rre * tre + rim * tim);
    out.dh.tail(d) = g * (-rim * tre + rre * tim);
    out.dr.head(d) = g * (hre * tre + him * tim);
    out.dr.tail(d) = g * (-him * tre + hre * tim);
    out.dt.head(d) = g * (hre * rre - him * rim);
    out.dt.tail(d) = g * (hre * rim + him * rre);
    return out;
}

namespace {

struct TrainState {
    std::vector<EntityId> entity_ids;
    std::vector<std::string> relation_labels;
    std::vector<Vector> ent;
    std::vector<Vector> rel;
    std::vector<std::array<int, 3>> triples; // (head, relation, tail) indices
    std::unordered_set<std::uint64_t> observed;
    std::uint64_t relation_count = 0;
    std::uint64_t entity_count = 0;

    std::uint64_t pack(int h, int r, int t) const {
        return (static_cast<std::uint64_t>(h) * relation_count + static_cast<std::uint64_t>(r)) *
                   entity_count +
               static_cast<std::uint64_t>(t);
    }
};

TrainState build_state(const KnowledgeGraph& g) {
    TrainState st;
    st.entity_ids = g.entity_ids();
    std::sort(st.entity_ids.begin(), st.entity_ids.end());
    std::map<EntityId, int> eidx;
    for (int i = 0; i < static_cast<int>(st.entity_ids.size()); ++i) {
        eidx[st.entity_ids[i]] = i;
    }
    std::set<std::string> labels;
    for (const Triple& t : g.triples()) {
        labels.insert(t.relation);
    }
    st.relation_labels.assign(labels.begin(), labels.end());
    std::map<std::string, int> ridx;
    for (int i = 0; i < static_cast<int>(st.relation_labels.size()); ++i) {
        ridx[st.relation_labels[i]] = i;
    }
    st.entity_count = st.entity_ids.size();
    st.relation_count = st.relation_labels.size();
    for (const Triple& t : g.triples()) {
        std::array<int, 3> idx = {eidx.at(t.source), ridx.at(t.relation), eidx.at(t.target)};
        st.triples.push_back(idx);
        st.observed.insert(st.pack(idx[0], idx[1], idx[2]));
    }
    return st;
}

void xavier_init(std::vector<Vector>& vecs, std::size_t count, Eigen::Index len,
                 std::mt19937_64& rng) {
    double bound = std::sqrt(3.0 / static_cast<double>(len));
    std::uniform_real_distribution<double> dist(-bound, bound);
    vecs.resize(count);
    for (Vector& v : vecs) {
        v.resize(len);
        for (Eigen::Index i = 0; i < len; ++i) {
            v[i] = dist(rng);
        }
    }
}

void renormalize_l2(std::vector<Vector>& vecs) {
    for (Vector& v : vecs) {
        double n = v.norm();
        if (n >= kZeroNormGuard) {
            v /= n;
        }
    }
}

void accumulate(std::map<int, Vector>& grads, int idx, const Vector& g) {
    auto [it, inserted] = grads.try_emplace(idx, g);
    if (!inserted) {
        it->second += g;
    }
}

} // namespace

EmbeddingTable train_kg_embeddings(const KnowledgeGraph& g, ModelKind model,
                                   const TrainConfig& config) {
    if (model == ModelKind::external) {
        throw std::invalid_argument("cannot train external embeddings");
    }
    if (g.entities().empty()) {
        throw std::invalid_argument("cannot train embeddings on an empty graph");
    }
    if (config.dimension < 1 || config.epochs < 0 || config.learning_rate <= 0.0 ||
        config.negatives_per_positive < 1 || config.batch_size < 1) {
        throw std::invalid_argument("invalid training configuration");
    }

    TrainState st = build_state(g);
    Eigen::Index len =
        model == ModelKind::complex_bilinear ? 2L * config.dimension : config.dimension;
    std::mt19937_64 rng(config.seed);
    xavier_init(st.ent, st.entity_ids.size(), len, rng);
    xavier_init(st.rel, st.relation_labels.size(), len, rng);
    if (model == ModelKind::transe) {
        renormalize_l2(st.ent);
    }

    std::vector<std::size_t> order(st.triples.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::uniform_int_distribution<int> coin(0, 1);
    std::uniform_int_distribution<std::size_t> pick(0, st.entity_ids.empty()
                                                           ? 0
                                                           : st.entity_ids.size() - 1);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(config.batch_size)) {
            std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            std::map<int, Vector> ent_grads;
            std::map<int, Vector> rel_grads;
            for (std::size_t pos = start; pos < stop; ++pos) {
                auto [h, r, t] = st.triples[order[pos]];
                if (model != ModelKind::transe) {
                    TripleGradients pg =
                        model == ModelKind::distmult
                            ? distmult_logistic_grad(st.ent[h], st.rel[r], st.ent[t], 1.0)
                            : complex_logistic_grad(st.ent[h], st.rel[r], st.ent[t], 1.0);
                    epoch_loss += pg.loss;
                    accumulate(ent_grads, h, pg.dh);
                    accumulate(rel_grads, r, pg.dr);
                    accumulate(ent_grads, t, pg.dt);
                }
                for (int k = 0; k < config.negatives_per_positive; ++k) {
                    bool corrupt_head = coin(rng) == 0;
                    int nh = h;
                    int nt = t;
                    for (int attempt = 0; attempt < 100; ++attempt) {
                        int candidate = static_cast<int>(pick(rng));
                        if (corrupt_head) {
                            nh = candidate;
                        } else {
                            nt = candidate;
                        }
                        if (!st.observed.count(st.pack(nh, r, nt))) {
                            break;
                        }
                    }
                    if (model == ModelKind::transe) {
                        MarginGradients mg =
                            transe_margin_grad(st.ent[h], st.rel[r], st.ent[t], st.ent[nh],
                                               st.ent[nt], config.margin, config.norm);
                        epoch_loss += mg.loss;
                        if (mg.loss > 0.0) {
                            accumulate(ent_grads, h, mg.dh);
                            accumulate(rel_grads, r, mg.dr);
                            accumulate(ent_grads, t, mg.dt);
                            accumulate(ent_grads, nh, mg.dneg_h);
                            accumulate(ent_grads, nt, mg.dneg_t);
                        }
                    } else {
                        TripleGradients ng =
                            model == ModelKind::distmult
                                ? distmult_logistic_grad(st.ent[nh], st.rel[r], st.ent[nt], -1.0)
                                : complex_logistic_grad(st.ent[nh], st.rel[r], st.ent[nt], -1.0);
                        epoch_loss += ng.loss;
                        accumulate(ent_grads, nh, ng.dh);
                        accumulate(rel_grads, r, ng.dr);
                        accumulate(ent_grads, nt, ng.dt);
                    }
                }
            }
            for (const auto& [idx, grad] : ent_grads) {
                st.ent[idx] -= config.learning_rate * grad;
            }
            for (const auto& [idx, grad] : rel_grads) {
                st.rel[idx] -= config.learning_rate * grad;
            }
        }
        if (!std::isfinite(epoch_loss)) {
            throw TrainError("training loss is not finite at epoch " + std::to_string(epoch) +
                                 "; lower the learning rate",
                             epoch);
        }
        if (model == ModelKind::transe) {
            renormalize_l2(st.ent);
        }
    }

    EmbeddingTable table;
    table.dimension = config.dimension;
    table.model_tag = model;
    for (std::size_t i = 0; i < st.entity_ids.size(); ++i) {
        table.entity_vectors[st.entity_ids[i]] = st.ent[i];
    }
    for (std::size_t i = 0; i < st.relation_labels.size(); ++i) {
        table.relation_vectors[st.relation_labels[i]] = st.rel[i];
    }
    return table;
}

EmbeddingTable load_external_embeddings(std::istream& in,
                                        const std::set<EntityId>& expected_ids) {
    EmbeddingTable table;
    table.model_tag = ModelKind::external;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw LoadError("embeddings line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!rec.is_object() || !rec.contains("id") || !rec["id"].is_string() ||
            !rec.contains("vector") || !rec["vector"].is_array()) {
            throw LoadError("embeddings line " + std::to_string(line_no) +
                            ": expected an object with string \"id\" and numeric \"vector\"");
        }
        EntityId id = rec["id"].get<std::string>();
        std::vector<double> values;
        for (const auto& v : rec["vector"]) {
            if (!v.is_number()) {
                throw LoadError("embeddings line " + std::to_string(line_no) +
                                ": vector for \"" + id + "\" holds a non-number");
            }
            values.push_back(v.get<double>());
        }
        if (table.entity_vectors.count(id)) {
            throw LoadError("embeddings line " + std::to_string(line_no) + ": duplicate id \"" +
                            id + "\"");
        }
        if (table.entity_vectors.empty()) {
            table.dimension = static_cast<int>(values.size());
        } else if (static_cast<int>(values.size()) != table.dimension) {
            throw LoadError("embeddings line " + std::to_string(line_no) + ": vector for \"" +
                            id + "\" has length " + std::to_string(values.size()) +
                            ", expected " + std::to_string(table.dimension));
        }
        table.entity_vectors[id] = Eigen::Map<const Vector>(values.data(),
                                                            static_cast<Eigen::Index>(values.size()));
    }
    std::vector<EntityId> missing;
    for (const EntityId& id : expected_ids) {
        if (!table.entity_vectors.count(id)) {
            missing.push_back(id);
        }
    }
    if (!missing.empty()) {
        std::string msg = "embeddings cover " + std::to_string(missing.size()) +
                          " entities short; first missing id: \"" + missing.front() + "\"";
        throw LoadError(msg);
    }
    return table;
}

std::vector<Vector> ServiceEmbedder::embed(const std::vector<std::string>& texts) {
    return client_.embed_texts(texts);
}

EmbeddingTable embed_descriptions(const std::vector<Entity>& entities, TextEmbedder& embedder) {
    EmbeddingTable table;
    table.model_tag = ModelKind::external;
    if (entities.empty()) {
        return table;
    }
    std::vector<std::string> texts;
    texts.reserve(entities.size());
    for (const Entity& e : entities) {
        texts.push_back(e.description.empty() ? e.name : e.name + ": " + e.description);
    }
    std::vector<Vector> vectors = embedder.embed(texts);
    if (vectors.size() != entities.size()) {
        throw std::runtime_error("embedder returned " + std::to_string(vectors.size()) +
                                 " vectors for " + std::to_string(entities.size()) + " texts");
    }
    table.dimension = static_cast<int>(vectors.front().size());
    for (std::size_t i = 0; i < entities.size(); ++i) {
        if (vectors[i].size() != vectors.front().size()) {
            throw std::runtime_error("embedder returned vectors of mixed lengths");
        }
        table.entity_vectors[entities[i].id] = vectors[i];
    }
    return table;
}

} // namespace kgd
