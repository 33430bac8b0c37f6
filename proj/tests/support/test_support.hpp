#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "knowtrace/backtrace.hpp"
#include "knowtrace/engine.hpp"
#include "knowtrace/retrieval.hpp"

namespace knowtrace::testing {

namespace fs = std::filesystem;

fs::path fixture_dir();  // fixtures/toy

inline const std::string kToyQuestion =
    "Where was the person who wrote about the rioting being a dividing factor in Birmingham educated?";

/// The six scripted generations of the toy run, in call order.
std::vector<std::string> toy_responses();
std::vector<Passage> toy_corpus();
TemplateSet default_templates();

/// Runs the toy question against a fresh sequence script at width 1.
Trajectory run_toy(EngineConfig config = {});

/// prompt fingerprint -> raw for every generation recorded in the
/// trajectories, including rejected attempts. Throws on a conflicting key.
std::map<std::string, std::string> keyed_script(const std::vector<Trajectory>& trajectories);

/// Runs each question alone with its own sequence script.
std::vector<Trajectory> run_each(const std::vector<Question>& questions,
                                 const std::vector<std::vector<std::string>>& scripts,
                                 const Retriever& retriever, const EngineConfig& config);

/// A small synthetic workload. Shapes rotate through: answer at once,
/// two expansion rounds, exhaustion, and (if allowed) a format failure.
struct SyntheticItem {
    std::string id;
    std::string question;
    std::string answer;
    std::vector<std::string> responses;
};

std::vector<SyntheticItem> synthetic_items(std::size_t n, bool with_failures);
std::vector<Passage> synthetic_corpus(const std::vector<SyntheticItem>& items);
/// hotpotqa layout, one paragraph per item plus a shared one.
std::string synthetic_hotpot_json(const std::vector<SyntheticItem>& items);

/// Whitespace token count written independently of the library.
std::size_t count_tokens(const std::string& text);

/// Scratch directory removed on destruction.
class TempDir {
  public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const fs::path& path() const { return path_; }

  private:
    fs::path path_;
};

// ---- graph oracle ----------------------------------------------------------

struct RandomGraph {
    std::vector<std::string> names;  // already normalized
    std::vector<std::pair<int, int>> edges;  // subject, object
    std::set<int> initials;
    std::set<int> targets;
};

/// Forest on at most `max_nodes` nodes with random anchors.
RandomGraph random_forest(std::mt19937_64& rng, int max_nodes);
/// Arbitrary multigraph (cycles, parallel edges, self loops allowed).
RandomGraph random_cyclic(std::mt19937_64& rng, int max_nodes);

KGContext to_kg(const RandomGraph& g);
std::set<std::string> target_keys(const RandomGraph& g);

/// Edges on some simple path between two distinct anchored nodes, inside
/// components holding at least one target and one initial. Brute force.
std::set<std::size_t> simple_path_oracle(const RandomGraph& g);

// ---- bm25 oracle -----------------------------------------------------------

struct ScoredId {
    std::string id;
    double score;
};

/// Scores every document from scratch; descending score, then ascending id.
std::vector<ScoredId> brute_force_bm25(const std::vector<Passage>& corpus, const std::string& query,
                                       std::size_t n);

std::vector<Passage> random_corpus(std::mt19937_64& rng, std::size_t max_docs);
std::string random_query(std::mt19937_64& rng);

}  // namespace knowtrace::testing
