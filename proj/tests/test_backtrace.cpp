#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "knowtrace/errors.hpp"
#include "knowtrace/text_util.hpp"
#include "test_support.hpp"

using namespace knowtrace;
using namespace knowtrace::testing;

namespace {

Triplet tr(std::string s, std::string r, std::string o) {
    return Triplet{std::move(s), std::move(r), std::move(o), {}};
}

KGContext graph(const std::vector<std::string>& initials, const std::vector<Triplet>& triplets) {
    KGContext kg;
    for (const auto& e : initials) kg.register_expansion_point(e);
    kg.merge(triplets);
    return kg;
}

}  // namespace

TEST_CASE("target extraction respects word boundaries", "[backtrace]") {
    const KGContext kg = graph({}, {tr("Mozart", "composed", "art"), tr("James Watt", "r", "University of Glasgow")});
    CHECK(extract_target_entities(kg, "Mozart wrote music.", "") == std::set<std::string>{"mozart"});
    CHECK(extract_target_entities(kg, "He went to the university of  Glasgow.", "University of Glasgow") ==
          std::set<std::string>{"university of glasgow"});
    CHECK(extract_target_entities(kg, "", "art") == std::set<std::string>{"art"});
    CHECK(extract_target_entities(KGContext{}, "anything", "art").empty());
}

TEST_CASE("support of a chain drops the dangling edge", "[backtrace]") {
    const KGContext kg = graph({"a"}, {tr("a", "r1", "b"), tr("b", "r2", "c"), tr("c", "r3", "d")});
    const auto s = support_subgraph(kg, {"c"});
    CHECK(s.triplet_indices == std::set<std::size_t>{0, 1});
    CHECK(s.anchored_initials == std::set<std::string>{"a"});
    CHECK(s.contains(kg.triplets()[1].key()));
    CHECK_FALSE(s.contains(kg.triplets()[2].key()));
}

TEST_CASE("support needs an initial entity in the component", "[backtrace]") {
    const KGContext kg = graph({"x"}, {tr("a", "r", "b"), tr("x", "s", "y")});
    CHECK(support_subgraph(kg, {"a", "b"}).triplet_indices.empty());
    CHECK(support_subgraph(kg, {"y"}).triplet_indices == std::set<std::size_t>{1});
    CHECK(support_subgraph(kg, {}).triplet_indices.empty());
}

TEST_CASE("unanchored cycles survive peeling", "[backtrace]") {
    const KGContext kg = graph({"a"}, {tr("a", "r", "b"), tr("b", "r", "c"), tr("c", "r", "d"), tr("d", "r", "b"),
                                       tr("d", "r", "leaf")});
    const auto s = support_subgraph(kg, {"a"});
    CHECK(s.triplet_indices == std::set<std::size_t>{0, 1, 2, 3});
}

TEST_CASE("toy backtrace keeps the two answer-bearing triplets", "[backtrace]") {
    const Trajectory t = run_toy();
    const auto s = backtrace(t);
    CHECK(s.target_entities.count("james watt"));
    CHECK(s.target_entities.count("university of glasgow"));
    REQUIRE(s.triplet_indices == std::set<std::size_t>{0, 4});

    const auto e1 = filter_exploration(t.iterations[0], s);
    CHECK(e1.verdict == ExplorationFilter::Verdict::Filtered);
    CHECK(e1.kept_pairs == std::vector<std::size_t>{0});
    CHECK(filter_exploration(t.iterations[1], s).verdict == ExplorationFilter::Verdict::Keep);
    CHECK(filter_exploration(t.iterations[2], s).verdict == ExplorationFilter::Verdict::Keep);

    const auto c1 = filter_completion(t.iterations[0].pair_records[0], s);
    REQUIRE(c1);
    REQUIRE(c1->size() == 1);
    CHECK((*c1)[0].relation == "wrote");
    CHECK_FALSE(filter_completion(t.iterations[0].pair_records[1], s));

    const auto examples = synthesize_supervision(t, s);
    REQUIRE(examples.size() == 5);
    std::size_t explorations = 0;
    for (const auto& ex : examples) {
        if (ex.kind == TemplateKind::Exploration) {
            ++explorations;
            CHECK_FALSE(ex.pair);
            CHECK_NOTHROW(parse_exploration(ex.target));
        } else {
            REQUIRE(ex.pair);
            CHECK_FALSE(parse_completion(ex.target).triples.empty());
        }
        CHECK(ex.question == "toy");
    }
    CHECK(explorations == 3);
    CHECK(examples[0].target ==
          "Sufficient: No\nExpand:\n- The rioting being a dividing factor in Birmingham: Find out who wrote about this "
          "topic and what this rioting refers to.");
    CHECK(examples[1].target == "(James Watt | wrote | the rioting being a dividing factor in Birmingham)");
}

TEST_CASE("toy FA matches an independent token count", "[backtrace]") {
    const Trajectory t = run_toy();
    const auto s = backtrace(t);
    const auto fa = fa_breakdown(t, s);
    std::size_t all = 0;
    for (const auto& r : toy_responses()) all += count_tokens(r);
    CHECK(fa.all_tokens == all);
    const auto& r = toy_responses();
    const std::size_t filtered = count_tokens("- Birmingham: Find out where Birmingham is located.") +
                                 count_tokens("(James Watt, is, an industrialist);") +
                                 count_tokens("(the rioting being a dividing factor in Birmingham, refers to, "
                                              "Priestley Riots);") +
                                 count_tokens(r[2]);
    CHECK(fa.filtered_tokens == filtered);
    CHECK(fa_ratio(t, s) == Catch::Approx(static_cast<double>(filtered) / static_cast<double>(all)));
}

TEST_CASE("an unsupported answer yields no examples", "[backtrace]") {
    auto backend = ScriptedBackend::sequence(
        {"Sufficient: No\nExpand:\n- E: r", "(E, r, X)", "Sufficient: Yes\nThought: no idea\nAnswer: Paris"});
    const Bm25Retriever retriever(CorpusIndex::build(toy_corpus()));
    const TemplateSet templates = default_templates();
    const Trajectory t = run_question({"", "Q"}, {backend, retriever, templates, {}, nullptr});
    const auto s = backtrace(t);
    CHECK(s.triplet_indices.empty());
    CHECK(filter_exploration(t.iterations[0], s).verdict == ExplorationFilter::Verdict::Drop);
    const auto examples = synthesize_supervision(t, s);
    REQUIRE(examples.size() == 1);
    CHECK(examples[0].question == "Q");
    CHECK(fa_breakdown(t, s).filtered_tokens == count_tokens("Sufficient: No\nExpand:\n- E: r") + 3);
}

TEST_CASE("support equals the simple-path oracle on forests", "[backtrace]") {
    std::mt19937_64 rng(515);
    int non_empty = 0;
    for (int round = 0; round < 300; ++round) {
        const RandomGraph g = random_forest(rng, 12);
        const KGContext kg = to_kg(g);
        const auto got = support_subgraph(kg, target_keys(g)).triplet_indices;
        REQUIRE(got == simple_path_oracle(g));
        if (!got.empty()) ++non_empty;
    }
    CHECK(non_empty > 50);
}

TEST_CASE("support grows with the target set", "[backtrace]") {
    std::mt19937_64 rng(77);
    for (int round = 0; round < 300; ++round) {
        const RandomGraph g = random_cyclic(rng, 10);
        const KGContext kg = to_kg(g);
        std::set<std::string> targets = target_keys(g);
        const auto small = support_subgraph(kg, targets).triplet_indices;
        for (const auto& n : g.names) {
            if (rng() % 3 == 0) targets.insert(n);
        }
        const auto large = support_subgraph(kg, targets).triplet_indices;
        REQUIRE(std::includes(large.begin(), large.end(), small.begin(), small.end()));
    }
}

TEST_CASE("rerender mode rebuilds exploration prompts", "[backtrace]") {
    const Trajectory t = run_toy();
    const auto s = backtrace(t);
    CHECK_THROWS_AS(synthesize_supervision(t, s, {PromptMode::Rerender, nullptr}), ConfigError);

    const TemplateSet templates = default_templates();
    const auto examples = synthesize_supervision(t, s, {PromptMode::Rerender, &templates});
    REQUIRE(examples.size() == 5);
    CHECK(examples[0].prompt == t.iterations[0].exploration_prompt);
    const std::string& third = examples[2].prompt;
    CHECK(third.find("(James Watt | wrote | the rioting being a dividing factor in Birmingham)") != std::string::npos);
    CHECK(third.find("industrialist") == std::string::npos);
    CHECK(third.find("West Midlands") == std::string::npos);
    CHECK(examples[1].prompt == t.iterations[0].pair_records[0].completion_prompt);
}

TEST_CASE("supervision records round-trip", "[backtrace]") {
    const Trajectory t = run_toy();
    const auto examples = synthesize_supervision(t, backtrace(t));
    const std::string jsonl = serialize_supervision(examples);
    CHECK(split_lines(jsonl).size() == examples.size() + 1);
    CHECK(parse_supervision(jsonl) == examples);
    const SupervisionExample ex{TemplateKind::Completion, "p\n\"q\"", "(a | b | c)", "id", 2, 1};
    CHECK(parse_supervision_record(serialize_supervision_record(ex)) == ex);
    CHECK_THROWS_AS(parse_supervision_record("{\"kind\": \"other\"}"), Error);
}
