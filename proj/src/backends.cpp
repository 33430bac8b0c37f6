#include "knowtrace/backends.hpp"

#include <cstdlib>

#include "httplib.h"
#include "json.hpp"

#include "http_util.hpp"
#include "knowtrace/text_util.hpp"

namespace knowtrace {

using nlohmann::json;

std::string prompt_fingerprint(std::string_view prompt) {
    return fnv1a64_hex(prompt);
}

ScriptedBackend::ScriptedBackend(Mode mode, std::vector<std::string> sequence,
                                 std::map<std::string, std::string> keyed, std::string identity)
    : mode_(mode), sequence_(std::move(sequence)), keyed_(std::move(keyed)), identity_(std::move(identity)) {}

ScriptedBackend::ScriptedBackend(const ScriptedBackend& other)
    : mode_(other.mode_), sequence_(other.sequence_), keyed_(other.keyed_), identity_(other.identity_) {
    std::lock_guard lock(other.mutex_);
    cursor_ = other.cursor_;
    calls_ = other.calls_;
}

ScriptedBackend ScriptedBackend::sequence(std::vector<std::string> responses, std::string identity) {
    return ScriptedBackend(Mode::Sequence, std::move(responses), {}, std::move(identity));
}

ScriptedBackend ScriptedBackend::keyed(std::map<std::string, std::string> by_fingerprint,
                                       std::string identity) {
    return ScriptedBackend(Mode::Keyed, {}, std::move(by_fingerprint), std::move(identity));
}

namespace {

bool all_decimal_keys(const json& obj) {
    for (const auto& [key, _] : obj.items()) {
        if (key.empty() || key.find_first_not_of("0123456789") != std::string::npos) return false;
    }
    return true;
}

/// {"0": "...", "1": "..."} to a dense vector.
std::vector<std::string> sequence_from_object(const json& obj) {
    std::vector<std::string> seq(obj.size());
    for (const auto& [key, value] : obj.items()) {
        const std::size_t idx = std::stoul(key);
        if (idx >= seq.size()) throw ConfigError("sequence script has a gap before index " + key);
        seq[idx] = value.get<std::string>();
    }
    return seq;
}

}  // namespace

ScriptedBackend ScriptedBackend::from_file(const std::filesystem::path& path, std::string identity) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ConfigError("script " + path.string() + " is not valid JSON: " + e.what());
    }
    try {
        if (doc.is_object() && doc.contains("responses")) {
            const std::string mode = doc.value("mode", std::string("sequence"));
            const json& responses = doc.at("responses");
            if (mode == "sequence") {
                if (responses.is_array())
                    return sequence(responses.get<std::vector<std::string>>(), std::move(identity));
                return sequence(sequence_from_object(responses), std::move(identity));
            }
            if (mode == "keyed") return keyed(responses.get<std::map<std::string, std::string>>(), std::move(identity));
            throw ConfigError("unknown script mode '" + mode + "' in " + path.string());
        }
        if (doc.is_array()) return sequence(doc.get<std::vector<std::string>>(), std::move(identity));
        if (doc.is_object() && all_decimal_keys(doc))
            return sequence(sequence_from_object(doc), std::move(identity));
        if (doc.is_object()) return keyed(doc.get<std::map<std::string, std::string>>(), std::move(identity));
    } catch (const json::exception& e) {
        throw ConfigError("script " + path.string() + ": " + e.what());
    }
    throw ConfigError("script " + path.string() + " must be a JSON object or array");
}

std::string ScriptedBackend::generate(const std::string& prompt, int /*max_output_tokens*/) {
    std::lock_guard lock(mutex_);
    ++calls_;
    if (mode_ == Mode::Sequence) {
        if (cursor_ >= sequence_.size())
            throw TransportError("scripted backend exhausted after " + std::to_string(sequence_.size()) +
                                 " responses");
        return sequence_[cursor_++];
    }
    const std::string key = prompt_fingerprint(prompt);
    auto it = keyed_.find(key);
    if (it == keyed_.end()) throw TransportError("scripted backend has no response for prompt " + key);
    return it->second;
}

std::size_t ScriptedBackend::calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
}

ScriptedBackend ScriptedBackend::with_identity(std::string identity) const {
    return ScriptedBackend(mode_, sequence_, keyed_, std::move(identity));
}

std::string ScriptedBackend::to_json() const {
    json doc;
    if (mode_ == Mode::Sequence) {
        doc = {{"mode", "sequence"}, {"responses", sequence_}};
    } else {
        doc = {{"mode", "keyed"}, {"responses", keyed_}};
    }
    return doc.dump(2) + "\n";
}

HttpBackend::HttpBackend(std::string url, std::string model, int timeout_seconds)
    : url_(std::move(url)), model_(std::move(model)), timeout_seconds_(timeout_seconds) {
    detail::split_url(url_);
}

std::string HttpBackend::generate(const std::string& prompt, int max_output_tokens) {
    const auto target = detail::split_url(url_);
    httplib::Client client(target.scheme_host_port);
    client.set_connection_timeout(timeout_seconds_);
    client.set_read_timeout(timeout_seconds_);

    httplib::Headers headers;
    if (const char* key = std::getenv("KNOWTRACE_API_KEY"); key && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    const json body = {
        {"model", model_}, {"prompt", prompt}, {"temperature", 0.0}, {"max_tokens", max_output_tokens}};
    auto res = client.Post(target.path, headers, body.dump(), "application/json");
    if (!res) throw TransportError("completion request failed: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw TransportError("completion endpoint returned HTTP " + std::to_string(res->status) + ": " +
                             res->body.substr(0, 200));
    try {
        const json reply = json::parse(res->body);
        return reply.at("choices").at(0).at("text").get<std::string>();
    } catch (const json::exception& e) {
        throw TransportError(std::string("malformed completion reply: ") + e.what());
    }
}

}  // namespace knowtrace
