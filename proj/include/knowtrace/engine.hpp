#pragma once

#include <optional>
#include <string>
#include <vector>

#include "knowtrace/backends.hpp"
#include "knowtrace/kgstore.hpp"
#include "knowtrace/lmio.hpp"
#include "knowtrace/retrieval.hpp"

namespace knowtrace {

struct EngineConfig {
    int max_iterations = 5;      // L
    int passages_per_query = 5;  // N
    RenderStrategy strategy = RenderStrategy::Triplets;
    int parse_retries = 1;
    int max_output_tokens = 512;
    int inner_parallelism = 1;  // concurrent (retrieve + complete) tasks per iteration

    /// Throws ConfigError unless every bound is positive (retries may be 0).
    void validate() const;

    friend bool operator==(const EngineConfig&, const EngineConfig&) = default;
};

inline constexpr std::string_view kForcedAnswerSuffix = "You must answer now.";

struct PairRecord {
    ExpansionPair pair;
    bool is_initial_entity = false;
    /// Repeats an earlier pair of the same exploration; nothing was executed.
    bool duplicate = false;
    std::string query;
    std::vector<std::string> passage_ids;
    std::size_t passage_tokens = 0;
    std::string completion_prompt;
    std::string completion_raw;
    std::vector<GenerationAttempt> rejected_attempts;
    std::vector<Triplet> completion_triplets;
    std::vector<std::string> skipped_lines;

    friend bool operator==(const PairRecord&, const PairRecord&) = default;
};

struct IterationRecord {
    int index = 0;
    bool forced = false;  // the forced-answer exploration after L iterations
    std::string exploration_prompt;
    std::string exploration_raw;
    std::vector<GenerationAttempt> rejected_attempts;
    std::optional<ExplorationOutcome> outcome;  // absent only when this step failed
    std::vector<PairRecord> pair_records;  // parallel to the Expand pairs

    friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

struct FinalState {
    enum class Kind { Answered, Exhausted, Failed };

    Kind kind = Kind::Failed;
    std::string thought;
    std::string answer;
    std::string reason;  // Failed only: "format" or "transport" plus detail
    std::string step;    // Failed only: where it happened

    static FinalState answered(std::string thought, std::string answer);
    static FinalState exhausted(std::string thought, std::string answer);
    static FinalState failed(std::string reason, std::string step);

    bool has_answer() const noexcept { return kind != Kind::Failed; }

    friend bool operator==(const FinalState&, const FinalState&) = default;
};

std::string_view to_string(FinalState::Kind kind);

struct Trajectory {
    std::string question_id;  // may be empty
    std::string question;
    EngineConfig config;
    std::vector<IterationRecord> iterations;
    FinalState final;
    KGContext kg;
    std::string backend_identity;

    /// Answer for Answered/Exhausted, empty for Failed.
    std::string prediction() const { return final.has_answer() ? final.answer : std::string(); }

    friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

struct Question {
    std::string id;
    std::string text;
};

struct EngineContext {
    GenerationBackend& backend;
    const Retriever& retriever;
    const TemplateSet& templates;
    EngineConfig config;
    /// Used by the Texts strategy; defaults to `backend` when null.
    GenerationBackend* rewrite_backend = nullptr;
};

/// Runs the explore-then-complete loop for one question. Never throws for
/// generation or transport problems; those end the trajectory as Failed with
/// everything recorded so far.
Trajectory run_question(const Question& question, const EngineContext& ctx);

/// Runs questions on up to `concurrency_width` threads; output order equals
/// input order.
std::vector<Trajectory> run_batch(const std::vector<Question>& questions, const EngineContext& ctx,
                                  int concurrency_width);

}  // namespace knowtrace
