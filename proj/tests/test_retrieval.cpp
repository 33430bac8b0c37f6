#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "knowtrace/errors.hpp"
#include "knowtrace/retrieval.hpp"
#include "test_support.hpp"

using namespace knowtrace;
using namespace knowtrace::testing;
using Catch::Matchers::WithinAbs;

TEST_CASE("tokenize lowercases ASCII alphanumeric runs", "[retrieval]") {
    CHECK(tokenize("James Watt, b. 1736!") == std::vector<std::string>{"james", "watt", "b", "1736"});
    CHECK(tokenize("  --  ").empty());
}

TEST_CASE("form_query joins entity and hint", "[retrieval]") {
    CHECK(form_query("Birmingham", "Find out where Birmingham is located.") ==
          "Birmingham Find out where Birmingham is located.");
    CHECK(form_query(" E ", "") == "E");
}

TEST_CASE("bm25 score matches a hand computation", "[retrieval]") {
    const auto index = CorpusIndex::build({{"d1", "", "cat dog"}, {"d2", "", "cat cat fish"}});
    CHECK(index.avg_doc_length() == 2.5);
    CHECK(index.document_frequency("cat") == 2);
    CHECK(index.term_frequency("cat", 1) == 2);
    const double idf_dog = std::log(2.0);
    CHECK_THAT(index.idf("dog"), WithinAbs(idf_dog, 1e-12));
    const double expected = idf_dog * 2.2 / (1.0 + 1.2 * (0.25 + 0.75 * 2.0 / 2.5));
    CHECK_THAT(index.bm25_score(tokenize("dog"), "d1"), WithinAbs(expected, 1e-12));
    CHECK(index.bm25_score(tokenize("dog"), "d2") == 0.0);
}

TEST_CASE("search ranks, excludes zero scores and breaks ties by id", "[retrieval]") {
    const Bm25Retriever r(CorpusIndex::build(
        {{"b", "", "apple pie"}, {"a", "", "apple pie"}, {"c", "", "banana split"}, {"d", "", "apple apple"}}));
    const auto hits = r.retrieve("apple", 10);
    REQUIRE(hits.size() == 3);
    CHECK(hits[0].id == "d");
    CHECK(hits[1].id == "a");
    CHECK(hits[2].id == "b");
    CHECK(r.retrieve("apple", 1).size() == 1);
    CHECK(r.retrieve("zebra", 5).empty());
    CHECK(r.retrieve("", 5).empty());
}

TEST_CASE("toy corpus finds the Priestley passage for the first expansion", "[retrieval]") {
    const Bm25Retriever r(CorpusIndex::build(toy_corpus()));
    const auto hits = r.retrieve(form_query("the rioting being a dividing factor in Birmingham",
                                            "Find out who wrote about it."),
                                 3);
    REQUIRE_FALSE(hits.empty());
    CHECK(hits[0].text.find("rioting") != std::string::npos);
}

TEST_CASE("search agrees with a brute-force scorer", "[retrieval]") {
    std::mt19937_64 rng(99);
    for (int round = 0; round < 200; ++round) {
        const auto corpus = random_corpus(rng, 30);
        const Bm25Retriever r(CorpusIndex::build(corpus));
        const std::string q = random_query(rng);
        const auto got = r.search(q, 5);
        const auto want = brute_force_bm25(corpus, q, 5);
        REQUIRE(got.size() == want.size());
        for (std::size_t k = 0; k < got.size(); ++k) {
            CHECK(r.index().passages()[got[k].ordinal].id == want[k].id);
            CHECK_THAT(got[k].score, WithinAbs(want[k].score, 1e-9));
        }
    }
}

TEST_CASE("duplicate passage ids are rejected", "[retrieval]") {
    CHECK_THROWS_AS(CorpusIndex::build({{"x", "", "a"}, {"x", "", "b"}}), IngestError);
}

TEST_CASE("corpus jsonl round-trip and errors", "[retrieval]") {
    TempDir dir;
    const auto path = dir.path() / "corpus.jsonl";
    const std::vector<Passage> ps = {{"p1", "Title \"q\"", "line\none"}, {"p2", "", "two"}};
    write_corpus(path, ps);
    CHECK(load_corpus(path) == ps);

    std::ofstream(dir.path() / "bad.jsonl") << "{\"id\": \"p1\", \"text\": \"ok\"}\n{\"title\": \"no id\"}\n";
    try {
        load_corpus(dir.path() / "bad.jsonl");
        FAIL("expected IngestError");
    } catch (const IngestError& e) {
        CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }
}

TEST_CASE("remote retriever posts the query and truncates", "[retrieval]") {
    httplib::Server server;
    std::string seen;
    server.Post("/search", [&](const httplib::Request& req, httplib::Response& res) {
        seen = req.body;
        res.set_content(R"({"passages":[{"id":"a","title":"A","text":"x"},{"id":"b","text":"y"}]})",
                        "application/json");
    });
    server.Post("/broken", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("not json", "text/plain");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread worker([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    const std::string base = "http://127.0.0.1:" + std::to_string(port);
    const RemoteRetriever r(base + "/search", 5);
    const auto hits = r.retrieve("who wrote", 1);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0] == Passage{"a", "A", "x"});
    const auto body = nlohmann::json::parse(seen);
    CHECK(body["query"] == "who wrote");
    CHECK(body["n"] == 1);
    CHECK(RemoteRetriever(base + "/search", 5).retrieve("q", 5)[1].title.empty());
    CHECK_THROWS_AS(RemoteRetriever(base + "/broken", 5).retrieve("q", 1), TransportError);
    CHECK_THROWS_AS(RemoteRetriever(base + "/missing", 5).retrieve("q", 1), TransportError);

    server.stop();
    worker.join();
}
