#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "knowtrace/retrieval.hpp"

namespace knowtrace {

enum class TemplateKind { Exploration, Completion };

/// An instruction prompt with {{PLACEHOLDER}} slots and few-shot blocks that
/// are prepended, in order, ahead of the body.
class PromptTemplate {
  public:
    /// Validates placeholders: exploration bodies need {{QUESTION}} and
    /// {{KNOWLEDGE}} exactly once, completion bodies {{ENTITY}}, {{RELATION}}
    /// and {{PASSAGES}} exactly once. Any other placeholder, or one inside a
    /// few-shot block, is a TemplateError.
    static PromptTemplate create(TemplateKind kind, std::string body,
                                 std::vector<std::string> few_shots = {});

    TemplateKind kind() const noexcept { return kind_; }
    const std::string& body() const noexcept { return body_; }
    const std::vector<std::string>& few_shots() const noexcept { return few_shots_; }

  private:
    PromptTemplate(TemplateKind kind, std::string body, std::vector<std::string> few_shots)
        : kind_(kind), body_(std::move(body)), few_shots_(std::move(few_shots)) {}

    TemplateKind kind_;
    std::string body_;
    std::vector<std::string> few_shots_;
};

struct TemplateSet {
    PromptTemplate exploration;
    PromptTemplate completion;
};

/// Reads exploration.txt, completion.txt and the optional
/// exploration_examples.txt / completion_examples.txt (blocks separated by a
/// line containing only "=====").
TemplateSet load_templates(const std::filesystem::path& dir);

std::filesystem::path default_template_dir();

std::string build_exploration_prompt(const PromptTemplate& tmpl, std::string_view question,
                                     std::string_view kg_rendering);

struct ExpansionPair {
    std::string entity;
    std::string relation_hint;

    friend bool operator==(const ExpansionPair&, const ExpansionPair&) = default;
};

std::string build_completion_prompt(const PromptTemplate& tmpl, const ExpansionPair& pair,
                                    const std::vector<Passage>& passages);

/// "[k] title\ntext" blocks separated by blank lines, or "No passages.".
std::string render_passages(const std::vector<Passage>& passages);

// ---- output grammar -------------------------------------------------------

struct Sufficient {
    std::string thought;
    std::string answer;

    friend bool operator==(const Sufficient&, const Sufficient&) = default;
};

struct Expand {
    std::vector<ExpansionPair> pairs;

    friend bool operator==(const Expand&, const Expand&) = default;
};

using ExplorationOutcome = std::variant<Sufficient, Expand>;

struct RawTriple {
    std::string subject;
    std::string relation;
    std::string object;

    friend bool operator==(const RawTriple&, const RawTriple&) = default;
};

struct CompletionOutcome {
    std::vector<RawTriple> triples;

    friend bool operator==(const CompletionOutcome&, const CompletionOutcome&) = default;
};

/// Parse result plus the raw line each item came from.
struct ParsedExploration {
    ExplorationOutcome outcome;
    std::vector<std::string> pair_lines;  // parallel to Expand::pairs
};

struct ParsedCompletion {
    CompletionOutcome outcome;
    std::vector<std::string> triple_lines;  // parallel to outcome.triples
    std::vector<std::string> skipped_lines;
};

/// Grammar (keywords case-insensitive, surrounding whitespace ignored):
///
///   Sufficient: Yes            Sufficient: No
///   Thought: <text>            Expand:
///   Answer: <text>             - <entity>: <relation hint>
///                              - ...
///
/// Text before the "Sufficient:" line is ignored. Throws ParseError.
ExplorationOutcome parse_exploration(std::string_view raw);
ParsedExploration parse_exploration_detailed(std::string_view raw);

/// Same as parse_exploration but an Expand outcome is a ParseError. Used for
/// the forced final answer.
ExplorationOutcome parse_forced_answer(std::string_view raw);

/// One triple per line, either "(A | B | C)" or the comma form "(A, B, C)"
/// split at the first and last top-level comma. A trailing ';' or ',' after
/// the closing parenthesis is tolerated. "None" and blank lines yield nothing;
/// anything else is skipped and reported. Never throws.
CompletionOutcome parse_completion(std::string_view raw);
ParsedCompletion parse_completion_detailed(std::string_view raw);

std::string render_exploration(const ExplorationOutcome& outcome);
/// Pipe form, one triple per line; "None" when empty.
std::string render_completion(const CompletionOutcome& outcome);

}  // namespace knowtrace
