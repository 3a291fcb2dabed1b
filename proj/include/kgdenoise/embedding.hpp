#pragma once

#include "kgdenoise/kg.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace kgd {

using Vector = Eigen::VectorXd;
using VectorRef = Eigen::Ref<const Eigen::VectorXd>;

enum class Norm { l1, l2 };

enum class ModelKind { transe, distmult, complex_bilinear, external };

std::string to_string(ModelKind kind);

// Per-entity (and, for trained models, per-relation) dense vectors.
// ComplEx vectors are stored as [real parts | imaginary parts], so their
// stored length is 2 * dimension.
struct EmbeddingTable {
    int dimension = 0;
    ModelKind model_tag = ModelKind::external;
    std::map<EntityId, Vector> entity_vectors;
    std::map<std::string, Vector> relation_vectors;

    Eigen::Index stored_length() const {
        return model_tag == ModelKind::complex_bilinear ? 2L * dimension : dimension;
    }

    const Vector& entity(const EntityId& id) const;

    // Ids from `expected` that the table does not cover.
    std::vector<EntityId> missing_ids(const std::vector<EntityId>& expected) const;
};

struct TrainConfig {
    int dimension = 64;
    int epochs = 100;
    double learning_rate = 0.01;
    int negatives_per_positive = 1;
    double margin = 1.0; // TransE only
    int batch_size = 1;
    std::uint64_t seed = 0;
    Norm norm = Norm::l2; // TransE only
};

struct TrainError : std::runtime_error {
    int epoch;
    TrainError(const std::string& what, int epoch_) : std::runtime_error(what), epoch(epoch_) {}
};

// ---------------------------------------------------------------------------
// Triple plausibility scores. Higher is more plausible.
// ---------------------------------------------------------------------------

// -||h + r - t|| under the given norm.
double score_transe(VectorRef h, VectorRef r, VectorRef t, Norm norm = Norm::l2);

// sum_i h_i r_i t_i. Symmetric in h and t.
double score_distmult(VectorRef h, VectorRef r, VectorRef t);

// Re(sum_i h_i r_i conj(t_i)) over [real | imaginary] stored vectors.
// Asymmetric in h and t for nonzero imaginary parts.
double score_complex(VectorRef h, VectorRef r, VectorRef t);

// ---------------------------------------------------------------------------
// Training losses with analytic gradients (checked against finite
// differences in the test suite).
// ---------------------------------------------------------------------------

struct MarginGradients {
    double loss = 0.0;
    Vector dh, dr, dt, dneg_h, dneg_t; // dr covers both ranking terms
};

// max(0, margin + ||h + r - t|| - ||nh + r - nt||)
double transe_margin_loss(VectorRef h, VectorRef r, VectorRef t, VectorRef neg_h,
                          VectorRef neg_t, double margin, Norm norm);
MarginGradients transe_margin_grad(VectorRef h, VectorRef r, VectorRef t, VectorRef neg_h,
                                   VectorRef neg_t, double margin, Norm norm);

// log(1 + exp(-label * score)), label in {+1, -1}.
double logistic_loss(double score, double label);

struct TripleGradients {
    double loss = 0.0;
    Vector dh, dr, dt;
};

TripleGradients distmult_logistic_grad(VectorRef h, VectorRef r, VectorRef t, double label);
TripleGradients complex_logistic_grad(VectorRef h, VectorRef r, VectorRef t, double label);

// ---------------------------------------------------------------------------
// Embedding sources
// ---------------------------------------------------------------------------

// SGD with uniform negative sampling (corrupt head or tail with equal
// probability, resampling corruptions that hit observed triples). TransE
// uses margin-ranking loss and renormalizes entity vectors to unit L2 norm
// after every epoch; DistMult and ComplEx use logistic loss. Deterministic
// for a fixed config. Throws TrainError with the epoch index if the loss
// stops being finite.
EmbeddingTable train_kg_embeddings(const KnowledgeGraph& g, ModelKind model,
                                   const TrainConfig& config);

// JSONL input, one {"id": str, "vector": [..]} per line. Verifies that every
// expected id is covered and that all vectors share one dimension.
EmbeddingTable load_external_embeddings(std::istream& in, const std::set<EntityId>& expected_ids);

// Source of text embeddings; implemented by the service client adapter and
// by the deterministic mock used in tests.
class TextEmbedder {
public:
    virtual ~TextEmbedder() = default;
    virtual std::vector<Vector> embed(const std::vector<std::string>& texts) = 0;
};

class LlmClient;

// Embeds through the configured embedding service.
class ServiceEmbedder : public TextEmbedder {
public:
    explicit ServiceEmbedder(LlmClient& client) : client_(client) {}
    std::vector<Vector> embed(const std::vector<std::string>& texts) override;

private:
    LlmClient& client_;
};

// Embeds "name: description" per entity (name alone when the description is
// empty).
EmbeddingTable embed_descriptions(const std::vector<Entity>& entities, TextEmbedder& embedder);

} // namespace kgd
