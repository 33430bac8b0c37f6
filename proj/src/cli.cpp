#include "knowtrace/cli.hpp"

#include <chrono>
#include <ctime>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "CLI11.hpp"
#include "json.hpp"

#include "knowtrace/bootstrap.hpp"
#include "knowtrace/errors.hpp"
#include "knowtrace/evalkit.hpp"
#include "knowtrace/text_util.hpp"
#include "knowtrace/trajectory_io.hpp"

namespace knowtrace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string RunConfig::base_identity() const {
    if (!backend.identity.empty()) return backend.identity;
    return backend.kind == "http" ? backend.model : std::string("scripted");
}

namespace {

using Setter = std::function<void(RunConfig&, const std::string&, const fs::path&)>;

int to_int(std::string_view key, const std::string& value) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(value, &used);
        if (used == value.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string(key) + ": expected an integer, got '" + value + "'");
}

bool to_bool(std::string_view key, const std::string& value) {
    const std::string v = to_lower_ascii(trim(value));
    if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
    if (v == "false" || v == "no" || v == "0" || v == "off") return false;
    throw ConfigError(std::string(key) + ": expected a boolean, got '" + value + "'");
}

fs::path to_path(const std::string& value, const fs::path& base) {
    fs::path p(std::string(trim(value)));
    if (p.empty() || p.is_absolute()) return p;
    return base / p;
}

PromptMode to_prompt_mode(const std::string& value) {
    const std::string v = to_lower_ascii(trim(value));
    if (v == "verbatim") return PromptMode::Verbatim;
    if (v == "rerender") return PromptMode::Rerender;
    throw ConfigError("prompt mode must be verbatim or rerender, got '" + value + "'");
}

const std::map<std::string, Setter, std::less<>>& setters() {
    static const std::map<std::string, Setter, std::less<>> table = {
        {"backend.kind",
         [](RunConfig& c, const std::string& v, const fs::path&) {
             c.backend.kind = to_lower_ascii(trim(v));
             if (c.backend.kind != "scripted" && c.backend.kind != "http")
                 throw ConfigError("backend.kind must be scripted or http, got '" + v + "'");
         }},
        {"backend.script", [](RunConfig& c, const std::string& v, const fs::path& b) { c.backend.script = to_path(v, b); }},
        {"backend.endpoint", [](RunConfig& c, const std::string& v, const fs::path&) { c.backend.endpoint = trim(v); }},
        {"backend.model", [](RunConfig& c, const std::string& v, const fs::path&) { c.backend.model = trim(v); }},
        {"backend.identity", [](RunConfig& c, const std::string& v, const fs::path&) { c.backend.identity = trim(v); }},
        {"backend.timeout",
         [](RunConfig& c, const std::string& v, const fs::path&) { c.backend.timeout = to_int("backend.timeout", v); }},
        {"retriever.corpus",
         [](RunConfig& c, const std::string& v, const fs::path& b) { c.retriever.corpus = to_path(v, b); }},
        {"retriever.url", [](RunConfig& c, const std::string& v, const fs::path&) { c.retriever.url = trim(v); }},
        {"retriever.timeout",
         [](RunConfig& c, const std::string& v, const fs::path&) { c.retriever.timeout = to_int("retriever.timeout", v); }},
        {"engine.max_iterations",
         [](RunConfig& c, const std::string& v, const fs::path&) {
             c.engine.max_iterations = to_int("engine.max_iterations", v);
         }},
        {"engine.passages_per_query",
         [](RunConfig& c, const std::string& v, const fs::path&) {
             c.engine.passages_per_query = to_int("engine.passages_per_query", v);
         }},
        {"engine.strategy",
         [](RunConfig& c, const std::string& v, const fs::path&) { c.engine.strategy = parse_render_strategy(v); }},
        {"engine.parse_retries",
         [](RunConfig& c, const std::string& v, const fs::path&) {
             c.engine.parse_retries = to_int("engine.parse_retries", v);
         }},
        {"engine.max_output_tokens",
         [](RunConfig& c, const std::string& v, const fs::path&) {
             c.engine.max_output_tokens = to_int("engine.max_output_tokens", v);
         }},
        {"engine.inner_parallelism",
         [](RunConfig& c, const std::string& v, const fs::path&) {
             c.engine.inner_parallelism = to_int("engine.inner_parallelism", v);
         }},
        {"templates.dir", [](RunConfig& c, const std::string& v, const fs::path& b) { c.templates_dir = to_path(v, b); }},
        {"output.dir", [](RunConfig& c, const std::string& v, const fs::path& b) { c.output_dir = to_path(v, b); }},
        {"run.parallel", [](RunConfig& c, const std::string& v, const fs::path&) { c.parallel = to_int("run.parallel", v); }},
        {"data.kind",
         [](RunConfig& c, const std::string& v, const fs::path&) {
             c.data.kind = std::string(to_string(parse_dataset_kind(v)));
         }},
        {"data.path", [](RunConfig& c, const std::string& v, const fs::path& b) { c.data.path = to_path(v, b); }},
        {"bootstrap.rounds",
         [](RunConfig& c, const std::string& v, const fs::path&) { c.bootstrap.rounds = to_int("bootstrap.rounds", v); }},
        {"bootstrap.hook",
         [](RunConfig& c, const std::string& v, const fs::path& b) {
             // a bare command name stays a PATH lookup
             const std::string hook(trim(v));
             c.bootstrap.hook = hook.find('/') == std::string::npos ? hook : to_path(hook, b).string();
         }},
        {"bootstrap.emit_only",
         [](RunConfig& c, const std::string& v, const fs::path&) {
             c.bootstrap.emit_only = to_bool("bootstrap.emit_only", v);
         }},
        {"bootstrap.prompt_mode",
         [](RunConfig& c, const std::string& v, const fs::path&) { c.bootstrap.prompt_mode = to_prompt_mode(v); }},
    };
    return table;
}

}  // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> out;
        for (const auto& [k, _] : setters()) out.push_back(k);
        return out;
    }();
    return keys;
}

void apply_setting(RunConfig& config, std::string_view key, const std::string& value, const fs::path& base_dir) {
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError("unknown config key: " + std::string(key));
    it->second(config, value, base_dir);
}

RunConfig load_run_config(const fs::path& path) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(path.string(), tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(e.what());
    }
    RunConfig config;
    const fs::path base = fs::absolute(path).parent_path();
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw ConfigError(path.string() + ": key '" + section + "' is outside any section");
        for (const auto& [key, value] : body) {
            const std::string full = section + "." + key;
            try {
                apply_setting(config, full, value.get_value<std::string>(), base);
            } catch (const ConfigError& e) {
                throw ConfigError(path.string() + ": " + e.what());
            }
        }
    }
    return config;
}

void validate_run_config(const RunConfig& c) {
    if (c.backend.kind == "scripted") {
        if (c.backend.script.empty()) throw ConfigError("backend.script is required for a scripted backend");
        if (!fs::is_regular_file(c.backend.script))
            throw ConfigError("backend.script not found: " + c.backend.script.string());
    } else {
        if (c.backend.endpoint.empty() || c.backend.model.empty())
            throw ConfigError("backend.endpoint and backend.model are required for an http backend");
    }
    if (c.retriever.corpus.empty() == c.retriever.url.empty())
        throw ConfigError("configure exactly one of retriever.corpus and retriever.url");
    if (!c.retriever.corpus.empty() && !fs::is_regular_file(c.retriever.corpus))
        throw ConfigError("retriever.corpus not found: " + c.retriever.corpus.string());
    if (!fs::is_directory(c.templates_dir))
        throw ConfigError("templates.dir not found: " + c.templates_dir.string());
    if (c.parallel < 1) throw ConfigError("run.parallel must be positive");
    c.engine.validate();
}

std::unique_ptr<GenerationBackend> make_backend(const RunConfig& config, const std::string& identity) {
    if (config.backend.kind == "http")
        return std::make_unique<HttpBackend>(config.backend.endpoint, identity, config.backend.timeout);
    return std::make_unique<ScriptedBackend>(ScriptedBackend::from_file(config.backend.script, identity));
}

std::unique_ptr<Retriever> make_retriever(const RunConfig& config) {
    if (!config.retriever.url.empty())
        return std::make_unique<RemoteRetriever>(config.retriever.url, config.retriever.timeout);
    return std::make_unique<Bm25Retriever>(CorpusIndex::build(load_corpus(config.retriever.corpus)));
}

namespace {

/// --config plus one override flag per config key, with short aliases.
struct ConfigFlags {
    std::string config_path;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
    bool emit_only = false;
    CLI::Option* emit_only_flag = nullptr;

    void attach(CLI::App* app) {
        static const std::map<std::string, std::string> aliases = {
            {"engine.strategy", "--strategy"}, {"run.parallel", "--parallel"},
            {"output.dir", "--out"},           {"data.path", "--dataset"},
            {"data.kind", "--dataset-kind"},   {"bootstrap.rounds", "--rounds"},
            {"bootstrap.hook", "--hook"},      {"bootstrap.prompt_mode", "--prompt-mode"},
            {"templates.dir", "--templates"},
        };
        app->add_option("--config", config_path, "INI config file");
        for (const auto& key : config_keys()) {
            std::string names = "--" + key;
            if (auto it = aliases.find(key); it != aliases.end()) names += "," + it->second;
            options[key] = app->add_option(names, values[key]);
        }
        emit_only_flag = app->add_flag("--emit-only", emit_only, "write round-1 supervision and stop without training");
    }

    RunConfig resolve() const {
        RunConfig config = config_path.empty() ? RunConfig{} : load_run_config(config_path);
        const fs::path cwd = fs::current_path();
        for (const auto& [key, opt] : options) {
            if (opt->count() > 0) apply_setting(config, key, values.at(key), cwd);
        }
        if (emit_only_flag->count() > 0) config.bootstrap.emit_only = true;
        return config;
    }
};

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

std::string fixed(double v, int digits = 4) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

/// A run directory holds trajectories/; a bare trajectory directory works too.
fs::path trajectory_dir_of(const fs::path& dir) {
    return fs::is_directory(dir / "trajectories") ? dir / "trajectories" : dir;
}

struct RunContext {
    RunConfig config;
    TemplateSet templates;
    std::unique_ptr<GenerationBackend> backend;
    std::unique_ptr<Retriever> retriever;

    explicit RunContext(RunConfig c)
        : config(std::move(c)),
          templates((validate_run_config(config), load_templates(config.templates_dir))),
          backend(make_backend(config, config.base_identity())),
          retriever(make_retriever(config)) {}

    EngineContext engine() const { return {*backend, *retriever, templates, config.engine, nullptr}; }
};

std::vector<QAItem> load_configured_dataset(const RunConfig& config) {
    if (config.data.path.empty()) throw ConfigError("no dataset given (--dataset or data.path)");
    return load_dataset(parse_dataset_kind(config.data.kind), config.data.path);
}

int cmd_ingest(const RunConfig& config, std::ostream& out) {
    const auto items = load_configured_dataset(config);
    const auto corpus = build_corpus(items);
    std::size_t total = 0;
    for (const auto& item : items) total += item.passages.size();
    const std::string bytes = serialize_corpus(corpus);
    write_file(config.output_dir / "corpus.jsonl", bytes);
    const json manifest = {{"kind", config.data.kind},
                           {"source", config.data.path.string()},
                           {"items", items.size()},
                           {"passages", total},
                           {"corpus_size", corpus.size()},
                           {"corpus_hash", fnv1a64_hex(bytes)},
                           {"created_at", utc_timestamp()}};
    write_file(config.output_dir / "manifest.json", manifest.dump(2) + "\n");
    out << "items " << items.size() << ", passages " << total << ", corpus " << corpus.size() << " ("
        << fnv1a64_hex(bytes) << ")\n";
    return 0;
}

int cmd_infer(const RunConfig& config, const std::string& question, const std::string& id, std::ostream& out,
              std::ostream& err) {
    RunContext rc(config);
    const Trajectory traj = run_question({id, question}, rc.engine());
    const fs::path path = write_trajectory(config.output_dir / "trajectories", traj);
    if (traj.final.kind == FinalState::Kind::Failed) {
        err << "failed at " << traj.final.step << ": " << traj.final.reason << "\n";
        err << "trajectory: " << path.string() << "\n";
        return 1;
    }
    out << traj.final.answer << "\n";
    return 0;
}

int write_eval(const EvalSummary& summary, const fs::path& dir, std::ostream& out) {
    write_file(dir / "eval.json", eval_summary_json(summary));
    write_file(dir / "eval.csv", eval_rows_csv(summary));
    std::size_t failed = 0;
    std::size_t missing = 0;
    for (const auto& r : summary.rows) {
        failed += r.status == EvalRow::Status::Failed;
        missing += r.status == EvalRow::Status::Missing;
    }
    out << "count " << summary.count << ", EM " << fixed(summary.em) << ", F1 " << fixed(summary.f1)
        << ", failed " << failed << ", missing " << missing << "\n";
    return failed == 0 ? 0 : 1;
}

int cmd_run(const RunConfig& config, std::ostream& out) {
    const auto items = load_configured_dataset(config);
    RunContext rc(config);
    std::vector<Question> questions;
    for (const auto& item : items) questions.push_back({item.id, item.question});
    const auto trajectories = run_batch(questions, rc.engine(), config.parallel);
    const fs::path traj_dir = config.output_dir / "trajectories";
    for (const auto& t : trajectories) write_trajectory(traj_dir, t);
    return write_eval(evaluate(traj_dir, items), config.output_dir, out);
}

int cmd_eval(const RunConfig& config, const fs::path& trajectories, std::ostream& out) {
    const auto items = load_configured_dataset(config);
    return write_eval(evaluate(trajectory_dir_of(trajectories), items), config.output_dir, out);
}

struct GoldIndex {
    std::map<std::string, std::vector<std::string>> by_id;
    std::map<std::string, std::vector<std::string>> by_question;

    const std::vector<std::string>* find(const Trajectory& t) const {
        if (!t.question_id.empty()) {
            if (auto it = by_id.find(t.question_id); it != by_id.end()) return &it->second;
        }
        auto it = by_question.find(t.question);
        return it == by_question.end() ? nullptr : &it->second;
    }
};

/// {"<question id or text>": "answer" | ["answer", ...]}
void read_golds_file(const fs::path& path, GoldIndex& index) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    if (!doc.is_object()) throw ConfigError(path.string() + ": expected a JSON object");
    for (const auto& [key, value] : doc.items()) {
        std::vector<std::string> answers;
        if (value.is_string()) {
            answers.push_back(value.get<std::string>());
        } else if (value.is_array()) {
            for (const auto& a : value) answers.push_back(a.get<std::string>());
        }
        if (answers.empty()) throw ConfigError(path.string() + ": no answers for '" + key + "'");
        index.by_id[key] = answers;
        index.by_question[key] = answers;
    }
}

int cmd_backtrace(const RunConfig& config, const fs::path& trajectories, const fs::path& golds_path,
                  std::ostream& out, std::ostream& err) {
    GoldIndex golds;
    if (!config.data.path.empty()) {
        for (const auto& item : load_configured_dataset(config)) {
            golds.by_id[item.id] = item.answers;
            golds.by_question[item.question] = item.answers;
        }
    }
    if (!golds_path.empty()) read_golds_file(golds_path, golds);

    std::optional<TemplateSet> templates;
    SynthesisOptions options{config.bootstrap.prompt_mode, nullptr};
    if (options.mode == PromptMode::Rerender) {
        templates = load_templates(config.templates_dir);
        options.templates = &*templates;
    }

    const auto files = list_trajectory_files(trajectory_dir_of(trajectories));
    if (files.empty()) err << "warning: no trajectories in " << trajectories.string() << "\n";

    std::string supervision;
    json per = json::array();
    json excluded = json::array();
    std::size_t n_exploration = 0;
    std::size_t n_completion = 0;
    double fa_sum = 0.0;
    for (const auto& file : files) {
        const Trajectory traj = read_trajectory(file);
        const auto* answers = golds.find(traj);
        std::string reason;
        if (traj.final.kind == FinalState::Kind::Failed) {
            reason = "failed";
        } else if (!answers) {
            reason = "no gold answer";
        } else if (exact_match(traj.prediction(), *answers) != 1) {
            reason = "incorrect answer";
        }
        if (!reason.empty()) {
            excluded.push_back({{"file", file.filename().string()}, {"question", traj.question}, {"reason", reason}});
            continue;
        }
        const SupportSubgraph support = backtrace(traj);
        const FaBreakdown fa = fa_breakdown(traj, support);
        fa_sum += fa.ratio();
        const auto examples = synthesize_supervision(traj, support, options);
        for (const auto& ex : examples) {
            (ex.kind == TemplateKind::Exploration ? n_exploration : n_completion) += 1;
            supervision += serialize_supervision_record(ex);
            supervision += '\n';
        }
        per.push_back({{"file", file.filename().string()},
                       {"question", traj.question},
                       {"support_triplets", support.triplet_indices.size()},
                       {"examples", examples.size()},
                       {"all_tokens", fa.all_tokens},
                       {"filtered_tokens", fa.filtered_tokens},
                       {"fa", fa.ratio()}});
    }
    const double mean_fa = per.empty() ? 0.0 : fa_sum / static_cast<double>(per.size());
    write_file(config.output_dir / "supervision.jsonl", supervision);
    const json report = {{"trajectories", files.size()},
                         {"correct", per.size()},
                         {"examples", {{"exploration", n_exploration}, {"completion", n_completion}}},
                         {"mean_fa", mean_fa},
                         {"per_trajectory", per},
                         {"excluded", excluded}};
    write_file(config.output_dir / "backtrace.json", report.dump(2) + "\n");
    for (const auto& e : excluded)
        err << "excluded " << e["file"].get<std::string>() << ": " << e["reason"].get<std::string>() << "\n";
    out << "trajectories " << files.size() << ", correct " << per.size() << ", examples "
        << n_exploration + n_completion << " (" << n_exploration << " exploration, " << n_completion
        << " completion), mean FA " << fixed(mean_fa) << "\n";
    return 0;
}

void print_round(const RoundReport& r, std::ostream& out) {
    out << "round " << r.round << ": attempted " << r.attempted << ", correct " << r.correct << ", failed "
        << r.failed << ", examples " << r.exploration_examples + r.completion_examples << ", mean FA "
        << fixed(r.mean_fa) << ", " << r.identity_before << " -> " << r.identity_after << "\n";
}

int cmd_bootstrap(const RunConfig& config, std::ostream& out, std::ostream& err) {
    const auto items = load_configured_dataset(config);
    if (config.bootstrap.emit_only == !config.bootstrap.hook.empty())
        throw ConfigError("bootstrap needs exactly one of --hook and --emit-only");
    validate_run_config(config);
    const TemplateSet templates = load_templates(config.templates_dir);
    const auto retriever = make_retriever(config);
    BootstrapOptions options;
    options.rounds = config.bootstrap.rounds;
    options.base_identity = config.base_identity();
    options.out_dir = config.output_dir;
    options.concurrency_width = config.parallel;
    options.synthesis = {config.bootstrap.prompt_mode, &templates};
    const TrainHook hook = config.bootstrap.emit_only ? TrainHook() : command_train_hook(config.bootstrap.hook);
    const BackendFactory factory = [&config](const std::string& identity) { return make_backend(config, identity); };

    std::vector<RoundReport> reports;
    int code = 0;
    try {
        reports = run_bootstrap(labeled_from(items), factory, *retriever, templates, config.engine, options, hook);
    } catch (const BootstrapAborted& e) {
        reports = e.completed();
        err << "bootstrap aborted: " << e.what() << "\n";
        code = 1;
    }
    for (const auto& r : reports) {
        print_round(r, out);
        if (r.failed > 0) code = 1;
    }
    return code;
}

int cmd_stats(const fs::path& dir, std::ostream& out) {
    out << "question\titerations\tpairs\tcompletions\ttriplets\tpassages\tpassage_tokens\tcalls\tfa\n";
    const auto files = list_trajectory_files(trajectory_dir_of(dir));
    if (files.empty()) return 0;
    double sums[7] = {0, 0, 0, 0, 0, 0, 0};
    double fa_sum = 0.0;
    std::size_t fa_count = 0;
    for (const auto& file : files) {
        const Trajectory t = read_trajectory(file);
        std::size_t pairs = 0, completions = 0, passages = 0, tokens = 0, calls = 0;
        for (const auto& it : t.iterations) {
            calls += 1 + it.rejected_attempts.size();
            pairs += it.pair_records.size();
            for (const auto& pr : it.pair_records) {
                if (pr.duplicate) continue;
                ++completions;
                passages += pr.passage_ids.size();
                tokens += pr.passage_tokens;
                calls += 1 + pr.rejected_attempts.size();
            }
        }
        std::string fa_text = "-";
        if (t.final.has_answer()) {
            const double fa = fa_ratio(t, backtrace(t));
            fa_sum += fa;
            ++fa_count;
            fa_text = fixed(fa);
        }
        const double row[7] = {static_cast<double>(t.iterations.size()), static_cast<double>(pairs),
                               static_cast<double>(completions),        static_cast<double>(t.kg.size()),
                               static_cast<double>(passages),           static_cast<double>(tokens),
                               static_cast<double>(calls)};
        out << (t.question_id.empty() ? file.stem().string() : t.question_id);
        for (int i = 0; i < 7; ++i) {
            sums[i] += row[i];
            out << '\t' << static_cast<std::size_t>(row[i]);
        }
        out << '\t' << fa_text << '\n';
    }
    out << "mean";
    for (double s : sums) out << '\t' << fixed(s / static_cast<double>(files.size()), 2);
    out << '\t' << (fa_count ? fixed(fa_sum / static_cast<double>(fa_count)) : std::string("-")) << '\n';
    return 0;
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Iterative knowledge-graph question answering with backtraced self-training"};
    app.require_subcommand(1);

    ConfigFlags ingest_flags, infer_flags, run_flags, backtrace_flags, bootstrap_flags, eval_flags;
    std::string question, question_id, trajectories, golds, stats_dir;

    auto* ingest = app.add_subcommand("ingest", "build a retrieval corpus from a dataset");
    ingest_flags.attach(ingest);
    auto* infer = app.add_subcommand("infer", "answer one question");
    infer_flags.attach(infer);
    infer->add_option("question", question, "question text")->required();
    infer->add_option("--id", question_id, "question id recorded in the trajectory");
    auto* run = app.add_subcommand("run", "answer a dataset and evaluate");
    run_flags.attach(run);
    auto* bt = app.add_subcommand("backtrace", "synthesize supervision from correct trajectories");
    backtrace_flags.attach(bt);
    bt->add_option("--trajectories", trajectories, "trajectory or run directory")->required();
    bt->add_option("--golds", golds, "JSON object mapping question id or text to answers");
    auto* boot = app.add_subcommand("bootstrap", "self-training rounds");
    bootstrap_flags.attach(boot);
    auto* ev = app.add_subcommand("eval", "score stored trajectories");
    eval_flags.attach(ev);
    ev->add_option("--trajectories", trajectories, "trajectory or run directory")->required();
    auto* stats = app.add_subcommand("stats", "per-question counters of a run");
    stats->add_option("dir", stats_dir, "run or trajectory directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*ingest) return cmd_ingest(ingest_flags.resolve(), out);
        if (*infer) return cmd_infer(infer_flags.resolve(), question, question_id, out, err);
        if (*run) return cmd_run(run_flags.resolve(), out);
        if (*bt) return cmd_backtrace(backtrace_flags.resolve(), trajectories, golds, out, err);
        if (*boot) return cmd_bootstrap(bootstrap_flags.resolve(), out, err);
        if (*ev) return cmd_eval(eval_flags.resolve(), trajectories, out);
        if (*stats) return cmd_stats(stats_dir, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<std::string> storage;
    storage.reserve(args.size() + 1);
    storage.emplace_back("knowtrace");
    storage.insert(storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : storage) argv.push_back(s.data());
    argv.push_back(nullptr);
    return run_cli(static_cast<int>(storage.size()), argv.data(), out, err);
}

}  // namespace knowtrace
