#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "knowtrace/backtrace.hpp"
#include "knowtrace/engine.hpp"

namespace knowtrace {

struct RunConfig {
    struct Backend {
        std::string kind = "scripted";  // scripted | http
        std::filesystem::path script;
        std::string endpoint;
        std::string model;
        std::string identity;  // defaults to "scripted" or the model name
        int timeout = 120;
    } backend;
    struct RetrieverSpec {
        std::filesystem::path corpus;
        std::string url;
        int timeout = 60;
    } retriever;
    EngineConfig engine;
    std::filesystem::path templates_dir = default_template_dir();
    std::filesystem::path output_dir = "out";
    int parallel = 1;
    struct Data {
        std::string kind = "hotpotqa";
        std::filesystem::path path;
    } data;
    struct Bootstrap {
        int rounds = 1;
        std::string hook;
        bool emit_only = false;
        PromptMode prompt_mode = PromptMode::Verbatim;
    } bootstrap;

    std::string base_identity() const;
};

/// Every "section.key" accepted in a config file and as a --section.key flag.
const std::vector<std::string>& config_keys();

/// Sets one key. Relative paths are resolved against `base_dir`. Throws
/// ConfigError for unknown keys and bad values.
void apply_setting(RunConfig& config, std::string_view key, const std::string& value,
                   const std::filesystem::path& base_dir);

/// INI file with [backend], [retriever], [engine], [templates], [output],
/// [run], [data] and [bootstrap] sections.
RunConfig load_run_config(const std::filesystem::path& path);

/// Checks the backend and retriever specs and that referenced paths exist.
void validate_run_config(const RunConfig& config);

std::unique_ptr<GenerationBackend> make_backend(const RunConfig& config, const std::string& identity);
std::unique_ptr<Retriever> make_retriever(const RunConfig& config);

/// Subcommands: ingest, infer, run, backtrace, bootstrap, eval, stats.
/// Returns the process exit code.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace knowtrace
