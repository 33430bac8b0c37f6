#include <catch2/catch_amalgamated.hpp>

#include "knowtrace/backends.hpp"
#include "knowtrace/errors.hpp"
#include "knowtrace/lmio.hpp"
#include "knowtrace/text_util.hpp"
#include "test_support.hpp"

using namespace knowtrace;
using namespace knowtrace::testing;

TEST_CASE("template placeholders are validated", "[lmio]") {
    CHECK_NOTHROW(PromptTemplate::create(TemplateKind::Exploration, "Q: {{QUESTION}}\nK: {{KNOWLEDGE}}"));
    CHECK_THROWS_AS(PromptTemplate::create(TemplateKind::Exploration, "Q: {{QUESTION}}"), TemplateError);
    CHECK_THROWS_AS(PromptTemplate::create(TemplateKind::Exploration, "{{QUESTION}} {{QUESTION}} {{KNOWLEDGE}}"),
                    TemplateError);
    CHECK_THROWS_AS(PromptTemplate::create(TemplateKind::Exploration, "{{QUESTION}} {{KNOWLEDGE}} {{ENTITY}}"),
                    TemplateError);
    CHECK_THROWS_AS(
        PromptTemplate::create(TemplateKind::Completion, "{{ENTITY}} {{RELATION}} {{PASSAGES}}", {"{{ENTITY}}"}),
        TemplateError);
}

TEST_CASE("shipped templates load with four examples each", "[lmio]") {
    const TemplateSet set = default_templates();
    CHECK(set.exploration.few_shots().size() == 4);
    CHECK(set.completion.few_shots().size() == 4);
}

TEST_CASE("build_exploration_prompt substitutes once and is deterministic", "[lmio]") {
    const auto tmpl = PromptTemplate::create(TemplateKind::Exploration, "Question: {{QUESTION}}\n{{KNOWLEDGE}}",
                                             {"shot one", "shot two"});
    const std::string p = build_exploration_prompt(tmpl, "Q?", "None");
    CHECK(p == "shot one\n\nshot two\n\nQuestion: Q?\nNone");
    CHECK(build_exploration_prompt(tmpl, "Q?", "None") == p);
    // substituted text is not rescanned
    CHECK(build_exploration_prompt(tmpl, "{{KNOWLEDGE}}", "K") == "shot one\n\nshot two\n\nQuestion: {{KNOWLEDGE}}\nK");
}

TEST_CASE("toy iteration 1 prompt shows an empty knowledge block", "[lmio]") {
    const Trajectory t = run_toy();
    const std::string& prompt = t.iterations[0].exploration_prompt;
    CHECK(prompt.find("Knowledge:\nNone") != std::string::npos);
    CHECK(prompt.find(kToyQuestion) != std::string::npos);
}

TEST_CASE("completion prompt numbers passages in rank order", "[lmio]") {
    const auto tmpl = PromptTemplate::create(TemplateKind::Completion, "{{ENTITY}}|{{RELATION}}\n{{PASSAGES}}");
    CHECK(build_completion_prompt(tmpl, {"E", "R"}, {}) == "E|R\nNo passages.");
    const std::vector<Passage> ps = {{"p2", "Second", "text two"}, {"p1", "First", "text one"}};
    const std::string p = build_completion_prompt(tmpl, {"E", "R"}, ps);
    CHECK(p == "E|R\n[1] Second\ntext two\n\n[2] First\ntext one");
    CHECK(build_completion_prompt(tmpl, {"E", "R"}, ps) == p);
    CHECK_THROWS_AS(build_completion_prompt(PromptTemplate::create(TemplateKind::Exploration, "{{QUESTION}}{{KNOWLEDGE}}"),
                                            {"E", "R"}, ps),
                    TemplateError);
}

TEST_CASE("parse_exploration: sufficient", "[lmio]") {
    const auto out = parse_exploration(
        "Sufficient: Yes\nThought: James Watt wrote about the rioting being a dividing factor in Birmingham. He was "
        "educated at the University of Glasgow.\nAnswer: University of Glasgow");
    const auto* s = std::get_if<Sufficient>(&out);
    REQUIRE(s);
    CHECK(s->answer == "University of Glasgow");
    CHECK(s->thought.rfind("James Watt wrote", 0) == 0);

    const auto relaxed = parse_exploration("Some preamble\n  sufficient : YES\nthought: t\n\nANSWER:   a  ");
    CHECK(std::get<Sufficient>(relaxed) == Sufficient{"t", "a"});
}

TEST_CASE("parse_exploration: expand", "[lmio]") {
    const auto out =
        parse_exploration("Sufficient: No\nExpand:\n- Birmingham: Find out where Birmingham is located.");
    const auto* e = std::get_if<Expand>(&out);
    REQUIRE(e);
    REQUIRE(e->pairs.size() == 1);
    CHECK(e->pairs[0] == ExpansionPair{"Birmingham", "Find out where Birmingham is located."});

    const auto detailed = parse_exploration_detailed("Sufficient: No\nExpand:\n- A: x: y\n-   B  \n");
    const auto& pairs = std::get<Expand>(detailed.outcome).pairs;
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[0] == ExpansionPair{"A", "x: y"});
    CHECK(pairs[1] == ExpansionPair{"B", ""});
    CHECK(detailed.pair_lines == std::vector<std::string>{"- A: x: y", "-   B  "});
}

TEST_CASE("parse_exploration errors carry the raw text", "[lmio]") {
    for (const std::string raw : {"Sufficient: Maybe", "no flag here", "Sufficient: Yes\nThought: t",
                                  "Sufficient: No\nExpand:", "Sufficient: No\n- a: b", "Sufficient: Yes\nAnswer:   "}) {
        try {
            parse_exploration(raw);
            FAIL("expected ParseError for: " << raw);
        } catch (const ParseError& e) {
            CHECK(e.raw() == raw);
        }
    }
}

TEST_CASE("parse_forced_answer rejects Expand", "[lmio]") {
    CHECK_THROWS_AS(parse_forced_answer("Sufficient: No\nExpand:\n- a: b"), ParseError);
    CHECK(std::holds_alternative<Sufficient>(parse_forced_answer("Sufficient: Yes\nThought: t\nAnswer: a")));
}

TEST_CASE("parse_completion forms", "[lmio]") {
    auto out = parse_completion("(James Watt, wrote, the rioting being a dividing factor in Birmingham)");
    REQUIRE(out.triples.size() == 1);
    CHECK(out.triples[0] == RawTriple{"James Watt", "wrote", "the rioting being a dividing factor in Birmingham"});

    CHECK(parse_completion("None").triples.empty());
    CHECK(parse_completion("  \n\n none \n").triples.empty());

    out = parse_completion("(a | has, part | b)");
    REQUIRE(out.triples.size() == 1);
    CHECK(out.triples[0] == RawTriple{"a", "has, part", "b"});

    out = parse_completion("(a, is part of, b, c)");
    REQUIRE(out.triples.size() == 1);
    CHECK(out.triples[0] == RawTriple{"a", "is part of, b", "c"});

    const auto detailed = parse_completion_detailed("(x, r, y);\ngarbage line\n(p | q)\n(s | t | u),");
    CHECK(detailed.outcome.triples == std::vector<RawTriple>{{"x", "r", "y"}, {"s", "t", "u"}});
    CHECK(detailed.triple_lines == std::vector<std::string>{"(x, r, y);", "(s | t | u),"});
    CHECK(detailed.skipped_lines == std::vector<std::string>{"garbage line", "(p | q)"});
}

TEST_CASE("parse_completion output never exceeds the line count", "[lmio]") {
    const std::string raw = "(a|b|c)\n(d, e, f)\n\n(g | h | i)\nbad";
    CHECK(parse_completion(raw).triples.size() <= split_lines(raw).size());
}

TEST_CASE("render and parse round-trip", "[lmio]") {
    const ExplorationOutcome s = Sufficient{"because: reasons, many", "Paris"};
    CHECK(parse_exploration(render_exploration(s)) == s);
    const ExplorationOutcome e = Expand{{{"A b", "hint: with colon"}, {"C", ""}}};
    CHECK(render_exploration(e) == "Sufficient: No\nExpand:\n- A b: hint: with colon\n- C:");
    CHECK(parse_exploration(render_exploration(e)) == e);
    const CompletionOutcome c{{{"a, b", "r", "c (d)"}}};
    CHECK(render_completion(c) == "(a, b | r | c (d))");
    CHECK(parse_completion(render_completion(c)) == c);
    CHECK(render_completion({}) == "None");
}

TEST_CASE("generate_with_retry", "[lmio]") {
    const std::function<ExplorationOutcome(std::string_view)> parser = parse_exploration;
    const std::string ok = "Sufficient: Yes\nThought: t\nAnswer: a";

    auto first = ScriptedBackend::sequence({ok});
    auto r = generate_with_retry(first, "P", parser, 1, 64);
    CHECK(r.rejected.empty());
    CHECK(r.prompt == "P");

    auto second = ScriptedBackend::sequence({"junk", ok});
    r = generate_with_retry(second, "P", parser, 1, 64);
    REQUIRE(r.rejected.size() == 1);
    CHECK(r.rejected[0].raw == "junk");
    CHECK(r.prompt == "P\n\nFollow the required output format exactly.");

    auto never = ScriptedBackend::sequence({"junk1", "junk2"});
    try {
        generate_with_retry(never, "P", parser, 1, 64);
        FAIL("expected GenerationFormatError");
    } catch (const GenerationFormatError& e) {
        CHECK(e.raw_attempts() == std::vector<std::string>{"junk1", "junk2"});
    }
}
