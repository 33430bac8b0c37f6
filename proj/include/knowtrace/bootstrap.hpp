#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "knowtrace/backtrace.hpp"
#include "knowtrace/engine.hpp"
#include "knowtrace/errors.hpp"
#include "knowtrace/evalkit.hpp"

namespace knowtrace {

struct LabeledItem {
    std::string id;
    std::string question;
    std::vector<std::string> answers;  // non-empty
};

using LabeledDataset = std::vector<LabeledItem>;

LabeledDataset labeled_from(const std::vector<QAItem>& items);

/// Throws ConfigError on an empty dataset, duplicate ids, or an item
/// without gold answers.
void validate_dataset(const LabeledDataset& dataset);

struct RoundReport {
    int round = 0;
    std::size_t attempted = 0;
    std::size_t correct = 0;
    std::size_t failed = 0;  // trajectories that ended Failed
    std::filesystem::path dataset_path;
    std::size_t exploration_examples = 0;
    std::size_t completion_examples = 0;
    double mean_fa = 0.0;  // over correct trajectories
    std::string identity_before;
    std::string identity_after;
};

std::string round_report_json(const RoundReport& report);

struct RoundOptions {
    int round = 1;
    std::filesystem::path round_dir;  // receives trajectories/, supervision.jsonl, report.json
    int concurrency_width = 1;
    SynthesisOptions synthesis;
};

/// Runs every question, keeps trajectories whose prediction matches a gold
/// answer, and writes the supervision examples synthesized from them.
/// Item-level failures are counted, never thrown.
RoundReport collect_round(const LabeledDataset& dataset, const EngineContext& ctx, const RoundOptions& options);

/// Creates the backend for a model identity.
using BackendFactory = std::function<std::unique_ptr<GenerationBackend>(const std::string& identity)>;

/// Trains from (base identity, dataset path, round) and returns the new
/// identity. Throws Error on failure.
using TrainHook = std::function<std::string(const std::string& base, const std::filesystem::path& data, int round)>;

/// `<command> --base <id> --data <path> --round <k>`; the last non-empty
/// stdout line is the new identity. A nonzero exit throws Error.
TrainHook command_train_hook(std::string command);

class BootstrapAborted : public Error {
  public:
    BootstrapAborted(const std::string& what, std::vector<RoundReport> completed)
        : Error(what), completed_(std::move(completed)) {}

    const std::vector<RoundReport>& completed() const noexcept { return completed_; }

  private:
    std::vector<RoundReport> completed_;
};

struct BootstrapOptions {
    int rounds = 1;
    std::string base_identity;
    std::filesystem::path out_dir;  // round k goes to out_dir/round_k
    int concurrency_width = 1;
    SynthesisOptions synthesis;
};

/// Round k runs with the identity produced by round k-1 (the base identity
/// for round 1), and the hook always trains from the base identity. Without
/// a hook only round 1 runs. A failing hook throws BootstrapAborted with the
/// reports of the rounds completed before it.
std::vector<RoundReport> run_bootstrap(const LabeledDataset& dataset, const BackendFactory& make_backend,
                                       const Retriever& retriever, const TemplateSet& templates,
                                       const EngineConfig& config, const BootstrapOptions& options,
                                       const TrainHook& hook = nullptr);

}  // namespace knowtrace
