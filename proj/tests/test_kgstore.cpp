#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "knowtrace/errors.hpp"
#include "knowtrace/kgstore.hpp"
#include "knowtrace/lmio.hpp"
#include "knowtrace/text_util.hpp"

using namespace knowtrace;

namespace {

Triplet tr(std::string s, std::string r, std::string o) {
    return Triplet{std::move(s), std::move(r), std::move(o), {}};
}

std::vector<std::string> subjects(const KGContext& kg) {
    std::vector<std::string> out;
    for (const auto& t : kg.triplets()) out.push_back(t.subject + "/" + t.relation + "/" + t.object);
    return out;
}

}  // namespace

TEST_CASE("normalize_entity lowercases and collapses whitespace", "[kgstore]") {
    CHECK(normalize_entity("  James  Watt ") == "james watt");
    CHECK(normalize_entity("Birmingham") == "birmingham");
    CHECK(normalize_entity("a\t\tb\nc") == "a b c");
    CHECK_THROWS_AS(normalize_entity(""), InvalidEntity);
    CHECK_THROWS_AS(normalize_entity("   "), InvalidEntity);
}

TEST_CASE("merge inserts, dedups by normalized key and keeps order", "[kgstore]") {
    KGContext kg;
    const auto t1 = tr("James Watt", "wrote", "X");
    const auto t2 = tr("B", "r", "C");
    const auto t3 = tr("D", "r", "E");

    CHECK(kg.merge({t1}) == 1);
    CHECK(kg.find(t1.key()).has_value());
    CHECK(kg.merge({tr("  JAMES   watt", "Wrote ", "x")}) == 0);

    CHECK(kg.merge({t2, t1, t3}) == 2);
    CHECK(subjects(kg) == std::vector<std::string>{"James Watt/wrote/X", "B/r/C", "D/r/E"});
}

TEST_CASE("merge skips malformed triplets and reports them", "[kgstore]") {
    KGContext kg;
    std::vector<std::string> rejected;
    const auto n = kg.merge({tr("a", " ", "b"), tr("a", "r", "b"), tr("a|b", "r", "c"), tr("x", "r", "y\nz")},
                            &rejected);
    CHECK(n == 1);
    CHECK(rejected.size() == 3);
    CHECK_THROWS_AS(tr("", "r", "o").validate(), MalformedTriplet);
}

TEST_CASE("merge indexes entities with first-seen surface", "[kgstore]") {
    KGContext kg;
    kg.merge({tr("James Watt", "wrote", "Essay"), tr("james watt", "born in", "Greenock")});
    REQUIRE(kg.entity("james watt") != nullptr);
    CHECK(kg.entity("james watt")->surface == "James Watt");
    CHECK(kg.entity("james watt")->incident == std::vector<std::size_t>{0, 1});
    CHECK(kg.contains_entity("greenock"));
    CHECK(kg.entity_order() == std::vector<std::string>{"james watt", "essay", "greenock"});
}

TEST_CASE("merge is idempotent", "[kgstore]") {
    const std::vector<Triplet> batch = {tr("a", "r", "b"), tr("b", "s", "c"), tr("A", "R", "B")};
    KGContext once, twice;
    once.merge(batch);
    twice.merge(batch);
    twice.merge(batch);
    CHECK(once == twice);
    CHECK(once.size() == 2);
}

TEST_CASE("register_expansion_point marks only unseen entities", "[kgstore]") {
    KGContext kg;
    CHECK(kg.register_expansion_point("The rioting being a dividing factor in Birmingham"));
    CHECK_FALSE(kg.register_expansion_point("the rioting being a dividing factor in birmingham"));
    CHECK(kg.is_initial("the rioting being a dividing factor in birmingham"));
    CHECK(kg.empty());

    kg.merge({tr("James Watt", "wrote", "the rioting being a dividing factor in Birmingham")});
    CHECK_FALSE(kg.register_expansion_point("James Watt"));
    CHECK_FALSE(kg.is_initial("james watt"));
    CHECK_THROWS_AS(kg.register_expansion_point("  "), InvalidEntity);
}

TEST_CASE("restore rebuilds an equal graph", "[kgstore]") {
    KGContext kg;
    kg.register_expansion_point("Seed");
    kg.merge({tr("Seed", "r", "Other"), tr("Other", "s", "Third")});
    const KGContext back = KGContext::restore(kg.entity_snapshot(), kg.triplets());
    CHECK(back == kg);
    CHECK(back.is_initial("seed"));
}

TEST_CASE("render Triplets", "[kgstore]") {
    KGContext kg;
    CHECK(render(kg, RenderStrategy::Triplets) == "None");
    kg.merge({tr("James Watt", "wrote", "the rioting being a dividing factor in Birmingham"),
              tr("James Watt", "is", "an industrialist"),
              tr("the rioting being a dividing factor in Birmingham", "refers to", "Priestley Riots"),
              tr("Birmingham", "is located in", "the West Midlands region of England")});
    const std::string text = render(kg, RenderStrategy::Triplets);
    CHECK(split_lines(text).size() == 4);
    CHECK(text.rfind("(James Watt | wrote | the rioting being a dividing factor in Birmingham)\n", 0) == 0);
}

TEST_CASE("render Triplets round-trips through the completion parser", "[kgstore]") {
    std::mt19937_64 rng(11);
    const std::vector<std::string> words = {"alpha", "Beta", "gamma, delta", "e (f)", "x-y", "Z"};
    for (int round = 0; round < 200; ++round) {
        KGContext kg;
        std::vector<Triplet> batch;
        const int n = 1 + static_cast<int>(rng() % 6);
        for (int i = 0; i < n; ++i) batch.push_back(tr(words[rng() % 6], words[rng() % 6], words[rng() % 6]));
        kg.merge(batch);
        std::set<TripletKey> want, got;
        for (const auto& t : kg.triplets()) want.insert(t.key());
        for (const auto& t : parse_completion(render(kg, RenderStrategy::Triplets)).triples)
            got.insert(tr(t.subject, t.relation, t.object).key());
        REQUIRE(got == want);
    }
}

TEST_CASE("render Paths", "[kgstore]") {
    KGContext kg;
    CHECK(render(kg, RenderStrategy::Paths) == "None");
    kg.merge({tr("a", "r1", "b"), tr("b", "r2", "c")});
    CHECK(render(kg, RenderStrategy::Paths) == "a --r1--> b --r2--> c");

    KGContext fan;
    fan.merge({tr("a", "r1", "b"), tr("b", "r2", "c"), tr("b", "r3", "d"), tr("c", "r4", "e")});
    // a-b stops at the fan-out; b-r2-c-r4-e chains; the rest are single edges
    CHECK(render(fan, RenderStrategy::Paths) == "b --r2--> c --r4--> e\n(a | r1 | b)\n(b | r3 | d)");
}

TEST_CASE("render Texts", "[kgstore]") {
    KGContext kg;
    CHECK_THROWS_AS(render(kg, RenderStrategy::Texts), MissingRewriteBackend);
    int calls = 0;
    const RewriteFn rewrite = [&](const std::string& prompt) {
        ++calls;
        CHECK(prompt.rfind(std::string(kRewriteInstruction), 0) == 0);
        CHECK(prompt.find("(a | r | b)") != std::string::npos);
        return std::string("A relates to B.");
    };
    CHECK(render(kg, RenderStrategy::Texts, rewrite) == "None");
    CHECK(calls == 0);
    kg.merge({tr("a", "r", "b")});
    CHECK(render(kg, RenderStrategy::Texts, rewrite) == "A relates to B.");
    CHECK(calls == 1);
}

TEST_CASE("assemble_paths examples", "[kgstore]") {
    KGContext chain;
    chain.merge({tr("a", "r1", "b"), tr("b", "r2", "c")});
    auto paths = assemble_paths(chain);
    REQUIRE(paths.size() == 1);
    CHECK(paths[0].sequence(chain) == std::vector<std::string>{"a", "r1", "b", "r2", "c"});

    KGContext fan;
    fan.merge({tr("a", "r1", "b"), tr("b", "r2", "c"), tr("b", "r3", "d")});
    paths = assemble_paths(fan);
    REQUIRE(paths.size() == 3);
    CHECK(paths[0].sequence(fan) == std::vector<std::string>{"a", "r1", "b"});
    CHECK(paths[1].sequence(fan) == std::vector<std::string>{"b", "r2", "c"});
    CHECK(paths[2].sequence(fan) == std::vector<std::string>{"b", "r3", "d"});

    KGContext single;
    single.merge({tr("a", "r1", "b")});
    paths = assemble_paths(single);
    REQUIRE(paths.size() == 1);
    CHECK(paths[0].triplet_indices == std::vector<std::size_t>{0});
}

TEST_CASE("assemble_paths uses every triplet exactly once", "[kgstore]") {
    std::mt19937_64 rng(3);
    for (int round = 0; round < 300; ++round) {
        KGContext kg;
        std::vector<Triplet> batch;
        const int n = 1 + static_cast<int>(rng() % 10);
        for (int i = 0; i < n; ++i)
            batch.push_back(tr("n" + std::to_string(rng() % 5), "r" + std::to_string(i), "n" + std::to_string(rng() % 5)));
        kg.merge(batch);
        std::vector<int> seen(kg.size(), 0);
        for (const auto& chain : assemble_paths(kg)) {
            for (std::size_t k = 0; k < chain.triplet_indices.size(); ++k) {
                ++seen[chain.triplet_indices[k]];
                if (k > 0) {
                    const auto& prev = kg.triplets()[chain.triplet_indices[k - 1]];
                    const auto& cur = kg.triplets()[chain.triplet_indices[k]];
                    REQUIRE(normalize_text(prev.object) == normalize_text(cur.subject));
                }
            }
        }
        for (int s : seen) REQUIRE(s == 1);
    }
}
