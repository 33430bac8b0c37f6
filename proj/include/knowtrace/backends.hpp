#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "knowtrace/errors.hpp"

namespace knowtrace {

/// A text-in, text-out model. Implementations must be deterministic for a
/// given prompt and callable from several threads at once. Transport
/// failures are reported as TransportError.
class GenerationBackend {
  public:
    virtual ~GenerationBackend() = default;
    virtual std::string generate(const std::string& prompt, int max_output_tokens) = 0;
    virtual std::string identity() const = 0;
};

/// Replays canned responses, either in call order or keyed by the FNV-1a
/// fingerprint of the prompt.
///
/// Script file layout:
///   {"mode": "sequence", "responses": ["...", "..."]}
///   {"mode": "keyed", "responses": {"<16 hex digits>": "...", ...}}
/// A bare object whose keys are all decimal is read as a sequence, any other
/// bare object as a keyed map.
class ScriptedBackend final : public GenerationBackend {
  public:
    enum class Mode { Sequence, Keyed };

    static ScriptedBackend sequence(std::vector<std::string> responses, std::string identity = "scripted");
    static ScriptedBackend keyed(std::map<std::string, std::string> by_fingerprint,
                                 std::string identity = "scripted");
    static ScriptedBackend from_file(const std::filesystem::path& path, std::string identity = "scripted");

    ScriptedBackend(const ScriptedBackend& other);
    ScriptedBackend& operator=(const ScriptedBackend&) = delete;

    /// Throws TransportError when the script has no response for the call.
    std::string generate(const std::string& prompt, int max_output_tokens) override;
    std::string identity() const override { return identity_; }

    Mode mode() const noexcept { return mode_; }
    std::size_t calls() const;

    /// Copy with a different identity label and a rewound cursor.
    ScriptedBackend with_identity(std::string identity) const;

    std::string to_json() const;

  private:
    ScriptedBackend(Mode mode, std::vector<std::string> sequence,
                    std::map<std::string, std::string> keyed, std::string identity);

    Mode mode_;
    std::vector<std::string> sequence_;
    std::map<std::string, std::string> keyed_;
    std::string identity_;
    mutable std::mutex mutex_;
    std::size_t cursor_ = 0;
    std::size_t calls_ = 0;
};

/// Fingerprint used as the key of keyed scripts.
std::string prompt_fingerprint(std::string_view prompt);

/// Plain completion endpoint. Sends
/// {"model", "prompt", "temperature": 0.0, "max_tokens"} and reads
/// choices[0].text. A bearer token is taken from KNOWTRACE_API_KEY if set.
class HttpBackend final : public GenerationBackend {
  public:
    HttpBackend(std::string url, std::string model, int timeout_seconds = 120);

    std::string generate(const std::string& prompt, int max_output_tokens) override;
    std::string identity() const override { return model_; }

  private:
    std::string url_;
    std::string model_;
    int timeout_seconds_;
};

struct GenerationAttempt {
    std::string prompt;
    std::string raw;

    friend bool operator==(const GenerationAttempt&, const GenerationAttempt&) = default;
};

template <typename T>
struct RetriedGeneration {
    T value;
    std::string prompt;  // the prompt that produced the accepted output
    std::string raw;
    std::vector<GenerationAttempt> rejected;
};

inline constexpr std::string_view kCorrectiveSuffix = "Follow the required output format exactly.";

/// Generates and parses; on ParseError re-issues the prompt with
/// kCorrectiveSuffix appended, up to `retries` more times. Throws
/// GenerationFormatError carrying every raw attempt when all fail.
template <typename T>
RetriedGeneration<T> generate_with_retry(GenerationBackend& backend, const std::string& prompt,
                                         const std::function<T(std::string_view)>& parser,
                                         int retries, int max_output_tokens) {
    RetriedGeneration<T> result{};
    const std::string corrected = prompt + "\n\n" + std::string(kCorrectiveSuffix);
    for (int attempt = 0; attempt <= retries; ++attempt) {
        const std::string& p = attempt == 0 ? prompt : corrected;
        std::string raw = backend.generate(p, max_output_tokens);
        try {
            result.value = parser(raw);
            result.prompt = p;
            result.raw = std::move(raw);
            return result;
        } catch (const ParseError&) {
            result.rejected.push_back({p, std::move(raw)});
        }
    }
    std::vector<std::string> raws;
    for (const auto& a : result.rejected) raws.push_back(a.raw);
    throw GenerationFormatError("no parsable output after " + std::to_string(retries + 1) + " attempt(s)",
                                std::move(raws));
}

}  // namespace knowtrace
