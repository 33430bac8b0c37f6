#include "knowtrace/bootstrap.hpp"

#include <set>

#include "json.hpp"

#include "knowtrace/process.hpp"
#include "knowtrace/text_util.hpp"
#include "knowtrace/trajectory_io.hpp"

namespace knowtrace {

using nlohmann::json;

LabeledDataset labeled_from(const std::vector<QAItem>& items) {
    LabeledDataset out;
    out.reserve(items.size());
    for (const auto& item : items) out.push_back({item.id, item.question, item.answers});
    return out;
}

void validate_dataset(const LabeledDataset& dataset) {
    if (dataset.empty()) throw ConfigError("labeled dataset is empty");
    std::set<std::string> ids;
    for (const auto& item : dataset) {
        if (!ids.insert(item.id).second) throw ConfigError("duplicate question id: " + item.id);
        if (item.answers.empty()) throw ConfigError("question " + item.id + " has no gold answer");
    }
}

std::string round_report_json(const RoundReport& r) {
    const json doc = {{"round", r.round},
                      {"attempted", r.attempted},
                      {"correct", r.correct},
                      {"failed", r.failed},
                      {"dataset_path", r.dataset_path.string()},
                      {"examples", {{"exploration", r.exploration_examples}, {"completion", r.completion_examples}}},
                      {"mean_fa", r.mean_fa},
                      {"identity_before", r.identity_before},
                      {"identity_after", r.identity_after}};
    return doc.dump(2) + "\n";
}

RoundReport collect_round(const LabeledDataset& dataset, const EngineContext& ctx, const RoundOptions& options) {
    validate_dataset(dataset);
    std::vector<Question> questions;
    questions.reserve(dataset.size());
    for (const auto& item : dataset) questions.push_back({item.id, item.question});
    const auto trajectories = run_batch(questions, ctx, options.concurrency_width);

    RoundReport report;
    report.round = options.round;
    report.attempted = dataset.size();
    report.identity_before = ctx.backend.identity();
    report.identity_after = report.identity_before;
    report.dataset_path = options.round_dir / "supervision.jsonl";

    const auto traj_dir = options.round_dir / "trajectories";
    std::filesystem::create_directories(traj_dir);
    std::string supervision;
    double fa_sum = 0.0;
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
        const Trajectory& traj = trajectories[i];
        write_trajectory(traj_dir, traj);
        if (traj.final.kind == FinalState::Kind::Failed) {
            ++report.failed;
            continue;
        }
        if (exact_match(traj.prediction(), dataset[i].answers) != 1) continue;
        ++report.correct;
        const SupportSubgraph support = backtrace(traj);
        fa_sum += fa_ratio(traj, support);
        for (const auto& ex : synthesize_supervision(traj, support, options.synthesis)) {
            if (ex.kind == TemplateKind::Exploration) {
                ++report.exploration_examples;
            } else {
                ++report.completion_examples;
            }
            supervision += serialize_supervision_record(ex);
            supervision += '\n';
        }
    }
    if (report.correct > 0) report.mean_fa = fa_sum / static_cast<double>(report.correct);
    write_file(report.dataset_path, supervision);
    write_file(options.round_dir / "report.json", round_report_json(report));
    return report;
}

TrainHook command_train_hook(std::string command) {
    return [command = std::move(command)](const std::string& base, const std::filesystem::path& data, int round) {
        const ProcessResult res =
            run_process({command, "--base", base, "--data", data.string(), "--round", std::to_string(round)});
        if (res.exit_code != 0)
            throw Error("train hook exited with status " + std::to_string(res.exit_code));
        std::string identity;
        for (std::string_view line : split_lines(res.out)) {
            if (!trim(line).empty()) identity = std::string(trim(line));
        }
        if (identity.empty()) throw Error("train hook printed no identity");
        return identity;
    };
}

std::vector<RoundReport> run_bootstrap(const LabeledDataset& dataset, const BackendFactory& make_backend,
                                       const Retriever& retriever, const TemplateSet& templates,
                                       const EngineConfig& config, const BootstrapOptions& options,
                                       const TrainHook& hook) {
    if (options.rounds < 1) throw ConfigError("bootstrap needs at least one round");
    validate_dataset(dataset);
    std::vector<RoundReport> reports;
    std::string identity = options.base_identity;
    const int rounds = hook ? options.rounds : 1;
    for (int k = 1; k <= rounds; ++k) {
        const auto backend = make_backend(identity);
        const EngineContext ctx{*backend, retriever, templates, config, nullptr};
        RoundOptions round_options{k, options.out_dir / ("round_" + std::to_string(k)),
                                   options.concurrency_width, options.synthesis};
        RoundReport report = collect_round(dataset, ctx, round_options);
        if (hook) {
            try {
                identity = hook(options.base_identity, report.dataset_path, k);
            } catch (const Error& e) {
                throw BootstrapAborted("round " + std::to_string(k) + ": " + e.what(), std::move(reports));
            }
            report.identity_after = identity;
            write_file(round_options.round_dir / "report.json", round_report_json(report));
        }
        reports.push_back(std::move(report));
    }
    return reports;
}

}  // namespace knowtrace
