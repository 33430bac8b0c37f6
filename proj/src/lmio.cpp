#include "knowtrace/lmio.hpp"

#include <algorithm>
#include <map>
#include <optional>

#include "knowtrace/errors.hpp"
#include "knowtrace/kgstore.hpp"
#include "knowtrace/text_util.hpp"

namespace knowtrace {

namespace {

const std::vector<std::string>& required_placeholders(TemplateKind kind) {
    static const std::vector<std::string> kExploration{"QUESTION", "KNOWLEDGE"};
    static const std::vector<std::string> kCompletion{"ENTITY", "RELATION", "PASSAGES"};
    return kind == TemplateKind::Exploration ? kExploration : kCompletion;
}

std::string_view kind_name(TemplateKind kind) {
    return kind == TemplateKind::Exploration ? "exploration" : "completion";
}

/// Every {{NAME}} occurrence in order. Throws on an unterminated "{{".
std::vector<std::string> scan_placeholders(std::string_view text) {
    std::vector<std::string> names;
    std::size_t pos = 0;
    while ((pos = text.find("{{", pos)) != std::string_view::npos) {
        const std::size_t close = text.find("}}", pos + 2);
        if (close == std::string_view::npos) throw TemplateError("unterminated placeholder");
        names.emplace_back(text.substr(pos + 2, close - pos - 2));
        pos = close + 2;
    }
    return names;
}

/// Single pass, so substituted values are never rescanned.
std::string substitute(std::string_view body, const std::map<std::string, std::string_view>& values) {
    std::string out;
    out.reserve(body.size());
    std::size_t pos = 0;
    for (;;) {
        const std::size_t open = body.find("{{", pos);
        if (open == std::string_view::npos) {
            out.append(body.substr(pos));
            break;
        }
        const std::size_t close = body.find("}}", open + 2);
        if (close == std::string_view::npos) throw TemplateError("unterminated placeholder");
        const std::string name(body.substr(open + 2, close - open - 2));
        auto it = values.find(name);
        if (it == values.end()) throw TemplateError("unresolved placeholder {{" + name + "}}");
        out.append(body.substr(pos, open - pos));
        out.append(it->second);
        pos = close + 2;
    }
    return out;
}

std::string assemble(const PromptTemplate& tmpl, const std::map<std::string, std::string_view>& values) {
    std::string out;
    for (const auto& shot : tmpl.few_shots()) {
        out += shot;
        out += "\n\n";
    }
    out += substitute(tmpl.body(), values);
    return out;
}

std::vector<std::string> split_blocks(std::string_view text) {
    std::vector<std::string> blocks;
    std::string current;
    auto flush = [&] {
        std::string_view block = trim(current);
        if (!block.empty()) blocks.emplace_back(block);
        current.clear();
    };
    for (std::string_view line : split_lines(text)) {
        if (trim(line) == "=====") {
            flush();
            continue;
        }
        current.append(line);
        current.push_back('\n');
    }
    flush();
    return blocks;
}

/// Matches "<keyword> :" at the start of a trimmed line and returns the rest.
std::optional<std::string_view> match_keyword(std::string_view line, std::string_view keyword) {
    line = trim(line);
    if (!starts_with_ci(line, keyword)) return std::nullopt;
    std::string_view rest = trim(line.substr(keyword.size()));
    if (rest.empty() || rest.front() != ':') return std::nullopt;
    return trim(rest.substr(1));
}

}  // namespace

PromptTemplate PromptTemplate::create(TemplateKind kind, std::string body,
                                      std::vector<std::string> few_shots) {
    const auto& required = required_placeholders(kind);
    const auto found = scan_placeholders(body);
    for (const auto& name : found) {
        if (std::find(required.begin(), required.end(), name) == required.end())
            throw TemplateError("unknown placeholder {{" + name + "}} in " +
                                std::string(kind_name(kind)) + " template");
    }
    for (const auto& name : required) {
        const auto n = std::count(found.begin(), found.end(), name);
        if (n != 1)
            throw TemplateError(std::string(kind_name(kind)) + " template must contain {{" + name +
                                "}} exactly once (found " + std::to_string(n) + ")");
    }
    for (const auto& shot : few_shots) {
        if (!scan_placeholders(shot).empty())
            throw TemplateError("few-shot blocks must not contain placeholders");
    }
    return PromptTemplate(kind, std::move(body), std::move(few_shots));
}

TemplateSet load_templates(const std::filesystem::path& dir) {
    auto load_kind = [&](TemplateKind kind) {
        const std::string name(kind_name(kind));
        const auto body_path = dir / (name + ".txt");
        if (!std::filesystem::exists(body_path))
            throw TemplateError("missing template file: " + body_path.string());
        std::string body(trim(read_file(body_path)));
        std::vector<std::string> shots;
        const auto shots_path = dir / (name + "_examples.txt");
        if (std::filesystem::exists(shots_path)) shots = split_blocks(read_file(shots_path));
        return PromptTemplate::create(kind, std::move(body), std::move(shots));
    };
    return TemplateSet{load_kind(TemplateKind::Exploration), load_kind(TemplateKind::Completion)};
}

std::filesystem::path default_template_dir() {
#ifdef KNOWTRACE_DEFAULT_TEMPLATE_DIR
    return KNOWTRACE_DEFAULT_TEMPLATE_DIR;
#else
    return "templates";
#endif
}

std::string build_exploration_prompt(const PromptTemplate& tmpl, std::string_view question,
                                     std::string_view kg_rendering) {
    if (tmpl.kind() != TemplateKind::Exploration)
        throw TemplateError("exploration prompt needs an exploration template");
    return assemble(tmpl, {{"QUESTION", question}, {"KNOWLEDGE", kg_rendering}});
}

std::string render_passages(const std::vector<Passage>& passages) {
    if (passages.empty()) return "No passages.";
    std::string out;
    for (std::size_t k = 0; k < passages.size(); ++k) {
        if (k > 0) out += "\n\n";
        out += '[' + std::to_string(k + 1) + "] " + passages[k].title + '\n' + passages[k].text;
    }
    return out;
}

std::string build_completion_prompt(const PromptTemplate& tmpl, const ExpansionPair& pair,
                                    const std::vector<Passage>& passages) {
    if (tmpl.kind() != TemplateKind::Completion)
        throw TemplateError("completion prompt needs a completion template");
    const std::string block = render_passages(passages);
    return assemble(tmpl, {{"ENTITY", pair.entity}, {"RELATION", pair.relation_hint}, {"PASSAGES", block}});
}

ParsedExploration parse_exploration_detailed(std::string_view raw) {
    const auto lines = split_lines(raw);
    std::size_t i = 0;
    std::optional<std::string_view> flag;
    for (; i < lines.size(); ++i) {
        if ((flag = match_keyword(lines[i], "sufficient"))) break;
    }
    if (!flag) throw ParseError("missing 'Sufficient:' line", std::string(raw));
    ++i;

    const std::string verdict = to_lower_ascii(*flag);
    if (verdict == "yes") {
        Sufficient result;
        bool have_thought = false;
        for (; i < lines.size(); ++i) {
            if (auto answer = match_keyword(lines[i], "answer")) {
                if (answer->empty()) throw ParseError("empty answer", std::string(raw));
                result.answer = std::string(*answer);
                return {std::move(result), {}};
            }
            if (auto thought = match_keyword(lines[i], "thought")) {
                result.thought = std::string(*thought);
                have_thought = true;
            } else if (have_thought && !trim(lines[i]).empty()) {
                result.thought += '\n';
                result.thought += trim(lines[i]);
            }
        }
        throw ParseError("sufficient verdict without an 'Answer:' line", std::string(raw));
    }
    if (verdict != "no")
        throw ParseError("'Sufficient:' must be Yes or No, got '" + std::string(*flag) + "'",
                         std::string(raw));

    while (i < lines.size() && trim(lines[i]).empty()) ++i;
    const auto expand_header = i < lines.size() ? match_keyword(lines[i], "expand") : std::nullopt;
    if (!expand_header || !expand_header->empty())
        throw ParseError("missing 'Expand:' line", std::string(raw));
    ++i;

    ParsedExploration parsed{Expand{}, {}};
    auto& expand = std::get<Expand>(parsed.outcome);
    for (; i < lines.size(); ++i) {
        std::string_view line = trim(lines[i]);
        if (line.empty()) continue;
        if (line.front() != '-') break;
        std::string_view item = trim(line.substr(1));
        const auto colon = item.find(':');
        std::string_view entity = trim(item.substr(0, colon));
        std::string_view hint = colon == std::string_view::npos ? std::string_view{} : trim(item.substr(colon + 1));
        if (entity.empty()) throw ParseError("expansion item without an entity", std::string(raw));
        expand.pairs.push_back({std::string(entity), std::string(hint)});
        parsed.pair_lines.emplace_back(lines[i]);
    }
    if (expand.pairs.empty()) throw ParseError("'Expand:' lists no pairs", std::string(raw));
    return parsed;
}

ExplorationOutcome parse_exploration(std::string_view raw) {
    return parse_exploration_detailed(raw).outcome;
}

ExplorationOutcome parse_forced_answer(std::string_view raw) {
    auto outcome = parse_exploration(raw);
    if (!std::holds_alternative<Sufficient>(outcome))
        throw ParseError("a final answer was required", std::string(raw));
    return outcome;
}

namespace {

std::optional<RawTriple> make_triple(std::string_view s, std::string_view r, std::string_view o) {
    s = trim(s);
    r = trim(r);
    o = trim(o);
    if (s.empty() || r.empty() || o.empty()) return std::nullopt;
    for (auto part : {s, r, o}) {
        if (part.find('|') != std::string_view::npos) return std::nullopt;
    }
    return RawTriple{std::string(s), std::string(r), std::string(o)};
}

std::optional<RawTriple> parse_triple_line(std::string_view line) {
    while (!line.empty() && (line.back() == ';' || line.back() == ',')) {
        line.remove_suffix(1);
        line = trim(line);
    }
    if (line.size() < 2 || line.front() != '(' || line.back() != ')') return std::nullopt;
    const std::string_view inner = line.substr(1, line.size() - 2);

    if (inner.find('|') != std::string_view::npos) {
        std::vector<std::string_view> parts;
        std::size_t start = 0;
        for (;;) {
            const auto bar = inner.find('|', start);
            parts.push_back(inner.substr(start, bar == std::string_view::npos ? bar : bar - start));
            if (bar == std::string_view::npos) break;
            start = bar + 1;
        }
        if (parts.size() != 3) return std::nullopt;
        return make_triple(parts[0], parts[1], parts[2]);
    }

    std::size_t first = std::string_view::npos;
    std::size_t last = std::string_view::npos;
    int depth = 0;
    for (std::size_t k = 0; k < inner.size(); ++k) {
        const char c = inner[k];
        if (c == '(') {
            ++depth;
        } else if (c == ')') {
            if (depth > 0) --depth;
        } else if (c == ',' && depth == 0) {
            if (first == std::string_view::npos) first = k;
            last = k;
        }
    }
    if (first == std::string_view::npos || first == last) return std::nullopt;
    return make_triple(inner.substr(0, first), inner.substr(first + 1, last - first - 1),
                       inner.substr(last + 1));
}

}  // namespace

ParsedCompletion parse_completion_detailed(std::string_view raw) {
    ParsedCompletion parsed;
    for (std::string_view line : split_lines(raw)) {
        const std::string_view t = trim(line);
        if (t.empty() || to_lower_ascii(t) == "none") continue;
        if (auto triple = parse_triple_line(t)) {
            parsed.outcome.triples.push_back(std::move(*triple));
            parsed.triple_lines.emplace_back(line);
        } else {
            parsed.skipped_lines.emplace_back(line);
        }
    }
    return parsed;
}

CompletionOutcome parse_completion(std::string_view raw) {
    return parse_completion_detailed(raw).outcome;
}

std::string render_exploration(const ExplorationOutcome& outcome) {
    if (const auto* s = std::get_if<Sufficient>(&outcome)) {
        return "Sufficient: Yes\nThought: " + s->thought + "\nAnswer: " + s->answer;
    }
    std::string out = "Sufficient: No\nExpand:";
    for (const auto& pair : std::get<Expand>(outcome).pairs) {
        out += "\n- " + pair.entity + ':';
        if (!pair.relation_hint.empty()) out += ' ' + pair.relation_hint;
    }
    return out;
}

std::string render_completion(const CompletionOutcome& outcome) {
    if (outcome.triples.empty()) return "None";
    std::string out;
    for (const auto& t : outcome.triples) {
        if (!out.empty()) out += '\n';
        out += format_triplet_line(t.subject, t.relation, t.object);
    }
    return out;
}

}  // namespace knowtrace
