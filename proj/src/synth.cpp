#include "kgdenoise/synth.hpp"

#include "kgdenoise/reflection.hpp"

#include <algorithm>
#include <cctype>
#include <random>
#include <sstream>
#include <stdexcept>

namespace kgd {

std::string to_string(VariantKind kind) {
    switch (kind) {
    case VariantKind::casing: return "casing";
    case VariantKind::whitespace: return "whitespace";
    case VariantKind::abbreviation: return "abbreviation";
    case VariantKind::token_permutation: return "token_permutation";
    }
    return "unknown";
}

VariantKind variant_kind_from(const std::string& name) {
    if (name == "casing") return VariantKind::casing;
    if (name == "whitespace") return VariantKind::whitespace;
    if (name == "abbreviation") return VariantKind::abbreviation;
    if (name == "token_permutation") return VariantKind::token_permutation;
    throw std::invalid_argument("unknown variant kind: \"" + name + "\"");
}

namespace {

const std::vector<std::string> kNameWords = {
    "Quantum", "Harbor",  "Atlas",   "Meridian", "Cobalt",  "Summit",
    "Aurora",  "Pioneer", "Granite", "Velvet",   "Orchard", "Beacon",
    "Cascade", "Ember",   "Falcon",  "Juniper",  "Kestrel", "Lumen",
    "Mosaic",  "Nimbus",  "Onyx",    "Prairie",  "Quartz",  "Sable",
};

const std::vector<std::string> kDescriptionWords = {
    "regional", "archive",   "network",  "initiative", "observed", "catalog",
    "founded",  "processes", "supplies", "historic",   "coastal",  "annual",
    "digital",  "research",  "museum",   "transit",    "festival", "reserve",
};

const std::vector<std::string> kTypePool = {
    "PERSON", "ORGANIZATION", "LOCATION", "CONCEPT", "EVENT",
};

const std::vector<std::string> kRelationPool = {
    "related_to", "part_of", "located_in", "works_with", "derived_from", "influences",
};

std::vector<std::string> split_words(const std::string& text) {
    std::istringstream in(text);
    std::vector<std::string> words;
    std::string w;
    while (in >> w) {
        words.push_back(w);
    }
    return words;
}

std::string join_words(const std::vector<std::string>& words, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (i > 0) {
            out += sep;
        }
        out += words[i];
    }
    return out;
}

std::string apply_variant(const std::string& name, VariantKind kind) {
    std::vector<std::string> words = split_words(name);
    switch (kind) {
    case VariantKind::casing: {
        std::string lowered = name;
        std::transform(lowered.begin(), lowered.end(), lowered.begin(), [](unsigned char c) {
            return static_cast<char>(std::tolower(c));
        });
        return lowered;
    }
    case VariantKind::whitespace:
        return join_words(words, "  ");
    case VariantKind::abbreviation: {
        std::string initials;
        for (const std::string& w : words) {
            initials += static_cast<char>(std::toupper(static_cast<unsigned char>(w.front())));
        }
        return initials;
    }
    case VariantKind::token_permutation:
        if (words.size() >= 2) {
            std::rotate(words.begin(), words.begin() + 1, words.end());
        }
        return join_words(words, " ");
    }
    return name;
}

std::string normalize_text(const std::string& text) {
    std::string out;
    bool pending_space = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out += ' ';
            pending_space = false;
        }
        out += static_cast<char>(std::tolower(c));
    }
    return out;
}

std::uint64_t fnv1a(std::uint64_t seed, const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (int i = 0; i < 8; ++i) {
        h ^= (seed >> (8 * i)) & 0xFF;
        h *= 1099511628211ULL;
    }
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

void validate_spec(const NoiseSpec& spec) {
    if (spec.base_entities < 1) {
        throw std::invalid_argument("base_entities must be >= 1");
    }
    if (spec.duplicate_clusters < 0) {
        throw std::invalid_argument("duplicate_clusters must be >= 0");
    }
    if (spec.cluster_size_min < 1 || spec.cluster_size_max < spec.cluster_size_min) {
        throw std::invalid_argument("cluster size range must satisfy 1 <= min <= max");
    }
    if (spec.erroneous_triple_fraction < 0.0 || spec.erroneous_triple_fraction > 1.0) {
        throw std::invalid_argument("erroneous_triple_fraction must lie in [0, 1]");
    }
    if (spec.triples_per_entity < 0.0) {
        throw std::invalid_argument("triples_per_entity must be >= 0");
    }
    if (spec.duplicate_clusters * spec.cluster_size_max > spec.base_entities) {
        throw std::invalid_argument(
            "infeasible spec: duplicate_clusters * cluster_size_max exceeds base_entities");
    }
}

} // namespace

std::pair<KnowledgeGraph, GroundTruth> generate_noisy_kg(const NoiseSpec& spec) {
    validate_spec(spec);
    std::mt19937_64 rng(spec.seed);
    auto pick = [&rng](const std::vector<std::string>& pool) -> const std::string& {
        return pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
    };

    std::vector<long> cluster_sizes;
    long cluster_slots = 0;
    std::uniform_int_distribution<long> size_dist(spec.cluster_size_min, spec.cluster_size_max);
    for (long c = 0; c < spec.duplicate_clusters; ++c) {
        cluster_sizes.push_back(size_dist(rng));
        cluster_slots += cluster_sizes.back();
    }
    const long singles = spec.base_entities - cluster_slots;
    const long total = spec.base_entities;

    int width = 4;
    for (long v = total; v >= 10000; v /= 10) {
        ++width;
    }
    auto make_id = [width](long n) {
        std::string digits = std::to_string(n);
        return "e" + std::string(static_cast<std::size_t>(width) - digits.size(), '0') + digits;
    };

    const long chunk_count = std::max(1L, total / 10);
    std::uniform_int_distribution<long> chunk_dist(0, chunk_count - 1);
    std::uniform_int_distribution<int> type_dist(0, static_cast<int>(kTypePool.size()));

    GraphBuilder builder;
    GroundTruth truth;
    long next = 0;
    long concept_index = 0;
    auto make_concept = [&](std::string& name, std::string& description, std::string& type) {
        name = pick(kNameWords) + " " + pick(kNameWords) + " " + pick(kNameWords);
        description = "Describes " + name + ": " + pick(kDescriptionWords) + " " +
                      pick(kDescriptionWords) + " " + pick(kDescriptionWords) + " (concept " +
                      std::to_string(concept_index) + ")";
        int type_pick = type_dist(rng);
        type = type_pick == static_cast<int>(kTypePool.size()) ? "" : kTypePool[type_pick];
        ++concept_index;
    };

    std::vector<EntityId> ids;
    std::map<EntityId, std::vector<EntityId>> siblings;
    for (long c = 0; c < spec.duplicate_clusters; ++c) {
        std::string name, description, type;
        make_concept(name, description, type);
        std::vector<EntityId> members;
        for (long j = 0; j < cluster_sizes[static_cast<std::size_t>(c)]; ++j) {
            std::string member_name = name;
            if (j > 0 && !spec.variant_kinds.empty()) {
                member_name = apply_variant(
                    name, spec.variant_kinds[static_cast<std::size_t>(j - 1) %
                                             spec.variant_kinds.size()]);
            }
            EntityId id = make_id(next++);
            builder.add_entity(Entity{id, member_name, type, description,
                                      "chunk-" + std::to_string(chunk_dist(rng))});
            members.push_back(id);
            ids.push_back(id);
        }
        for (const EntityId& m : members) {
            siblings[m] = members;
        }
        if (members.size() >= 2) {
            truth.clusters.push_back(members);
        }
    }
    for (long s = 0; s < singles; ++s) {
        std::string name, description, type;
        make_concept(name, description, type);
        EntityId id = make_id(next++);
        builder.add_entity(Entity{id, name, type, description,
                                  "chunk-" + std::to_string(chunk_dist(rng))});
        ids.push_back(id);
    }

    std::vector<Triple> triples;
    std::set<TripleKey> keys;
    if (total >= 2) {
        const long target = std::llround(spec.triples_per_entity * static_cast<double>(total));
        std::uniform_int_distribution<std::size_t> idx(0, ids.size() - 1);
        long attempts = 0;
        while (static_cast<long>(triples.size()) < target && attempts < target * 20) {
            ++attempts;
            const EntityId& s = ids[idx(rng)];
            const EntityId& t = ids[idx(rng)];
            if (s == t) {
                continue;
            }
            Triple triple{s, pick(kRelationPool), t, "", ""};
            if (!keys.insert(key_of(triple)).second) {
                continue;
            }
            triples.push_back(std::move(triple));
        }

        // Copy a coin-flip share of each member's edges onto its siblings so
        // duplicate clusters also look alike structurally.
        std::bernoulli_distribution copy_edge(0.5);
        const std::size_t base_count = triples.size();
        for (std::size_t i = 0; i < base_count; ++i) {
            const Triple t = triples[i];
            auto src = siblings.find(t.source);
            if (src != siblings.end()) {
                for (const EntityId& sib : src->second) {
                    if (sib == t.source || sib == t.target || !copy_edge(rng)) {
                        continue;
                    }
                    Triple dup{sib, t.relation, t.target, "", ""};
                    if (keys.insert(key_of(dup)).second) {
                        triples.push_back(std::move(dup));
                    }
                }
            }
            auto dst = siblings.find(t.target);
            if (dst != siblings.end()) {
                for (const EntityId& sib : dst->second) {
                    if (sib == t.target || sib == t.source || !copy_edge(rng)) {
                        continue;
                    }
                    Triple dup{t.source, t.relation, sib, "", ""};
                    if (keys.insert(key_of(dup)).second) {
                        triples.push_back(std::move(dup));
                    }
                }
            }
        }
    }

    const long bad_count =
        std::llround(spec.erroneous_triple_fraction * static_cast<double>(triples.size()));
    std::vector<std::size_t> order(triples.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::shuffle(order.begin(), order.end(), rng);
    for (long b = 0; b < bad_count; ++b) {
        Triple& t = triples[order[static_cast<std::size_t>(b)]];
        t.description = std::string("unreliable extraction ") + kBadTripleMarker;
        truth.bad_triples.insert(key_of(t));
    }

    for (Triple& t : triples) {
        builder.add_triple(std::move(t));
    }
    return {std::move(builder).build(), std::move(truth)};
}

MockEmbedder::MockEmbedder(int dimension, std::uint64_t seed)
    : dimension_(dimension), seed_(seed) {
    if (dimension < 1) {
        throw std::invalid_argument("dimension must be >= 1");
    }
}

Vector MockEmbedder::embed_one(const std::string& text) const {
    std::mt19937_64 rng(fnv1a(seed_, normalize_text(text)));
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector v(dimension_);
    for (int i = 0; i < dimension_; ++i) {
        v[i] = gauss(rng);
    }
    double n = v.norm();
    if (n == 0.0) {
        v[0] = 1.0;
        return v;
    }
    return v / n;
}

std::vector<Vector> MockEmbedder::embed(const std::vector<std::string>& texts) {
    std::vector<Vector> out;
    out.reserve(texts.size());
    for (const std::string& t : texts) {
        out.push_back(embed_one(t));
    }
    return out;
}

EmbeddingTable mock_embedding_table(const KnowledgeGraph& g, int dimension, std::uint64_t seed) {
    MockEmbedder embedder(dimension, seed);
    EmbeddingTable table;
    table.dimension = dimension;
    table.model_tag = ModelKind::external;
    for (const Entity& e : g.entities()) {
        table.entity_vectors[e.id] =
            embedder.embed_one(e.description.empty() ? e.name : e.description);
    }
    return table;
}

namespace {

using IdPair = std::pair<EntityId, EntityId>;

void insert_pairs(std::set<IdPair>& out, const std::vector<EntityId>& members) {
    for (std::size_t i = 0; i < members.size(); ++i) {
        for (std::size_t j = i + 1; j < members.size(); ++j) {
            const EntityId& a = members[i];
            const EntityId& b = members[j];
            out.insert(a < b ? IdPair{a, b} : IdPair{b, a});
        }
    }
}

PairMetrics from_counts(long tp, long fp, long fn) {
    PairMetrics m;
    m.true_positives = tp;
    m.false_positives = fp;
    m.false_negatives = fn;
    m.precision = tp + fp == 0 ? 1.0
                               : static_cast<double>(tp) / static_cast<double>(tp + fp);
    m.recall = tp + fn == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    m.f1 = m.precision + m.recall == 0.0
               ? 0.0
               : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

} // namespace

PairMetrics resolution_metrics(const std::vector<MatchGroup>& predicted,
                               const GroundTruth& truth,
                               const std::vector<EntityId>& universe) {
    std::set<EntityId> known(universe.begin(), universe.end());
    std::set<EntityId> seen;
    for (const MatchGroup& g : predicted) {
        for (const EntityId& m : g.members) {
            if (!seen.insert(m).second) {
                throw std::invalid_argument("predicted groups overlap on entity \"" + m + "\"");
            }
            if (!known.count(m)) {
                throw std::invalid_argument("predicted member \"" + m +
                                            "\" is outside the universe");
            }
        }
    }
    std::set<IdPair> truth_pairs;
    for (const std::vector<EntityId>& c : truth.clusters) {
        insert_pairs(truth_pairs, c);
    }
    std::set<IdPair> predicted_pairs;
    for (const MatchGroup& g : predicted) {
        insert_pairs(predicted_pairs, g.members);
    }
    long tp = 0;
    for (const IdPair& p : predicted_pairs) {
        tp += truth_pairs.count(p) ? 1 : 0;
    }
    return from_counts(tp, static_cast<long>(predicted_pairs.size()) - tp,
                       static_cast<long>(truth_pairs.size()) - tp);
}

PairMetrics reflection_metrics(const std::set<TripleKey>& removed, const GroundTruth& truth,
                               const std::vector<Triple>& all_triples) {
    std::set<TripleKey> keys;
    for (const Triple& t : all_triples) {
        keys.insert(key_of(t));
    }
    for (const TripleKey& k : removed) {
        if (!keys.count(k)) {
            throw std::invalid_argument("removed triple (" + k.source + ", " + k.relation +
                                        ", " + k.target + ") is not in the graph");
        }
    }
    long tp = 0;
    for (const TripleKey& k : removed) {
        tp += truth.bad_triples.count(k) ? 1 : 0;
    }
    return from_counts(tp, static_cast<long>(removed.size()) - tp,
                       static_cast<long>(truth.bad_triples.size()) - tp);
}

} // namespace kgd
