#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kgdenoise/kg.hpp"
#include "support.hpp"

#include <random>

using namespace kgd;

namespace {

KnowledgeGraph tiny(std::initializer_list<EntityId> ids,
                    std::initializer_list<Triple> triples) {
    GraphBuilder b;
    for (const auto& id : ids)
        b.add_entity(Entity{id, "name " + id, "", "", ""});
    for (const auto& t : triples)
        b.add_triple(t);
    return std::move(b).build();
}

} // namespace

TEST_CASE("neighbors follows triples in both directions") {
    auto g = tiny({"a", "b", "c", "x"}, {{"a", "r", "b", "", ""}, {"c", "s", "a", "", ""}});
    CHECK(neighbors(g, "a") == std::set<EntityId>{"b", "c"});
    CHECK(neighbors(g, "b") == std::set<EntityId>{"a"});
    CHECK(neighbors(g, "x") == std::set<EntityId>{});
}

TEST_CASE("neighbors excludes self unless a self-loop exists") {
    auto g = tiny({"a", "b"}, {{"a", "r", "b", "", ""}, {"b", "r", "b", "", ""}});
    CHECK(neighbors(g, "a") == std::set<EntityId>{"b"});
    CHECK(neighbors(g, "b") == std::set<EntityId>{"a", "b"});
}

TEST_CASE("neighbors rejects unknown ids") {
    auto g = tiny({"a"}, {});
    CHECK_THROWS_AS(neighbors(g, "ghost"), std::out_of_range);
}

TEST_CASE("neighbors is symmetric on random graphs") {
    std::mt19937_64 rng(11);
    for (int round = 0; round < 30; ++round) {
        auto g = kgtest::random_graph(rng);
        for (const auto& a : g.entity_ids()) {
            for (const auto& b : neighbors(g, a)) {
                CAPTURE(a);
                CAPTURE(b);
                CHECK(neighbors(g, b).count(a) == 1);
            }
        }
    }
}

TEST_CASE("validate accepts a well-formed graph") {
    auto g = tiny({"a", "b", "c"}, {{"a", "r", "b", "", ""}, {"b", "r", "c", "", ""}});
    CHECK(validate(g).empty());
}

TEST_CASE("validate reports dangling endpoints") {
    GraphBuilder b;
    b.add_entity(Entity{"a", "a", "", "", ""});
    b.add_triple(Triple{"a", "r", "ghost", "", ""});
    auto g = std::move(b).build();
    auto report = validate(g);
    REQUIRE(report.size() == 1);
    CHECK(report[0].kind == Violation::Kind::dangling_target);
    CHECK(report[0].message.find("ghost") != std::string::npos);
}

TEST_CASE("validate reports duplicate entity ids") {
    GraphBuilder b;
    b.add_entity(Entity{"a", "first", "", "", ""});
    b.add_entity(Entity{"a", "second", "", "", ""});
    auto g = std::move(b).build();
    auto report = validate(g);
    REQUIRE(report.size() == 1);
    CHECK(report[0].kind == Violation::Kind::duplicate_id);
    CHECK(report[0].subject == "a");
}

TEST_CASE("validate reports empty names and empty relation labels") {
    GraphBuilder b;
    b.add_entity(Entity{"a", "", "", "", ""});
    b.add_entity(Entity{"b", "b", "", "", ""});
    b.add_triple(Triple{"a", "", "b", "", ""});
    auto g = std::move(b).build();
    auto report = validate(g);
    REQUIRE(report.size() == 2);
    CHECK(report[0].kind == Violation::Kind::empty_name);
    CHECK(report[1].kind == Violation::Kind::empty_relation);
}

TEST_CASE("connected components split and chain") {
    auto two = tiny({"a", "b", "c", "d"}, {{"a", "r", "b", "", ""}, {"c", "r", "d", "", ""}});
    auto comps = connected_components(two);
    REQUIRE(comps.size() == 2);
    CHECK(comps[0] == std::vector<EntityId>{"a", "b"});
    CHECK(comps[1] == std::vector<EntityId>{"c", "d"});

    auto chain = tiny({"a", "b", "c"}, {{"a", "r", "b", "", ""}, {"b", "r", "c", "", ""}});
    auto chain_comps = connected_components(chain);
    REQUIRE(chain_comps.size() == 1);
    CHECK(chain_comps[0] == std::vector<EntityId>{"a", "b", "c"});

    CHECK(connected_components(KnowledgeGraph{}).empty());
}

TEST_CASE("connected components partition all entities") {
    std::mt19937_64 rng(22);
    for (int round = 0; round < 30; ++round) {
        auto g = kgtest::random_graph(rng);
        auto comps = connected_components(g);
        std::set<EntityId> seen;
        std::size_t total = 0;
        for (const auto& comp : comps) {
            total += comp.size();
            for (const auto& id : comp)
                CHECK(seen.insert(id).second);
        }
        CHECK(total == g.entities().size());
    }
}

TEST_CASE("count_tokens splits on whitespace runs") {
    CHECK(count_tokens("") == 0);
    CHECK(count_tokens("   ") == 0);
    CHECK(count_tokens("one") == 1);
    CHECK(count_tokens("one two\tthree\nfour") == 4);
    CHECK(count_tokens("  padded   words  ") == 2);
}

TEST_CASE("graph_stats aggregates counts and token averages") {
    GraphBuilder b;
    Entity a{"a", "a", "PERSON", "", ""};
    a.description = "one two three four five six seven eight nine ten";
    Entity c{"b", "b", "", "", ""};
    for (int i = 0; i < 30; ++i)
        c.description += (i ? " w" : "w");
    b.add_entity(a).add_entity(c);
    b.add_triple(Triple{"a", "knows", "b", "", ""});
    b.add_triple(Triple{"b", "knows", "a", "", ""});
    b.add_triple(Triple{"a", "knows", "a", "", ""});
    auto g = std::move(b).build();

    auto stats = graph_stats(g);
    CHECK(stats.entity_count == 2);
    CHECK(stats.triple_count == 3);
    CHECK(stats.relation_label_count == 1);
    CHECK(stats.avg_description_tokens == doctest::Approx(20.0));
    CHECK(stats.per_type_counts.at("PERSON") == 1);
    CHECK(stats.per_type_counts.at(kUnknownType) == 1);

    auto empty = graph_stats(KnowledgeGraph{});
    CHECK(empty.entity_count == 0);
    CHECK(empty.triple_count == 0);
    CHECK(empty.avg_description_tokens == 0.0);
}

TEST_CASE("entity lookup and type set") {
    GraphBuilder b;
    b.add_entity(Entity{"a", "a", "PERSON", "", ""});
    b.add_entity(Entity{"b", "b", "", "", ""});
    auto g = std::move(b).build();
    CHECK(g.entity("a").entity_type == "PERSON");
    CHECK_THROWS_AS(g.entity("zz"), std::out_of_range);
    CHECK(g.type_set() == std::vector<std::string>{"PERSON", kUnknownType});
    CHECK(g.entity("b").type_or_unknown() == kUnknownType);
}

TEST_CASE("structurally_equal ignores order, sees content changes") {
    GraphBuilder b1;
    b1.add_entity(Entity{"a", "a", "", "", ""}).add_entity(Entity{"b", "b", "", "", ""});
    b1.add_triple(Triple{"a", "r", "b", "", ""});
    auto g1 = std::move(b1).build();

    GraphBuilder b2;
    b2.add_entity(Entity{"b", "b", "", "", ""}).add_entity(Entity{"a", "a", "", "", ""});
    b2.add_triple(Triple{"a", "r", "b", "", ""});
    auto g2 = std::move(b2).build();
    CHECK(structurally_equal(g1, g2));

    GraphBuilder b3;
    b3.add_entity(Entity{"b", "b", "", "", ""}).add_entity(Entity{"a", "a", "", "", ""});
    b3.add_triple(Triple{"a", "r", "b", "different evidence", ""});
    auto g3 = std::move(b3).build();
    CHECK_FALSE(structurally_equal(g1, g3));
}

TEST_CASE("NeighborIndex matches neighbors() with sorted dedup lists") {
    std::mt19937_64 rng(33);
    for (int round = 0; round < 20; ++round) {
        auto g = kgtest::random_graph(rng);
        NeighborIndex index(g);
        for (const auto& id : g.entity_ids()) {
            auto expected = neighbors(g, id);
            const auto& got = index.of(id);
            CHECK(std::is_sorted(got.begin(), got.end()));
            CHECK(std::set<EntityId>(got.begin(), got.end()) == expected);
            CHECK(got.size() == expected.size());
        }
    }
}

TEST_CASE("per-chunk assembly keeps components inside one chunk") {
    GraphBuilder b;
    int chunks = 4;
    for (int c = 0; c < chunks; ++c) {
        std::string chunk = "chunk" + std::to_string(c);
        for (int i = 0; i < 3; ++i) {
            Entity e;
            e.id = chunk + ":e" + std::to_string(i);
            e.name = "entity " + std::to_string(i);
            e.source_chunk = chunk;
            b.add_entity(std::move(e));
        }
        b.add_triple(Triple{chunk + ":e0", "r", chunk + ":e1", "", chunk});
        b.add_triple(Triple{chunk + ":e1", "r", chunk + ":e2", "", chunk});
    }
    auto g = std::move(b).build();

    auto comps = connected_components(g);
    long non_singleton = 0;
    for (const auto& comp : comps) {
        std::set<std::string> chunk_tags;
        for (const auto& id : comp)
            chunk_tags.insert(g.entity(id).source_chunk);
        CHECK(chunk_tags.size() == 1);
        if (comp.size() > 1)
            ++non_singleton;
    }
    CHECK(non_singleton <= chunks);
}
