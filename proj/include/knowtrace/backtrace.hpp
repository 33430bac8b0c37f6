#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "knowtrace/engine.hpp"

namespace knowtrace {

/// Backtraced support of a final answer.
struct SupportSubgraph {
    std::set<std::size_t> triplet_indices;  // into the final KG
    std::set<TripletKey> keys;              // normalized keys of those triplets
    std::set<std::string> target_entities;
    std::set<std::string> anchored_initials;  // initial entities touched by a kept triplet

    bool contains(const TripletKey& key) const { return keys.count(key) > 0; }
};

/// KG entities whose normalized text occurs in normalize(thought + " " +
/// answer) with a non-alphanumeric character (or the string edge) on both
/// sides. Empty for an empty graph.
std::set<std::string> extract_target_entities(const KGContext& kg, std::string_view thought,
                                              std::string_view answer);

/// Triplets are undirected edges between normalized entities; anchored nodes
/// are targets plus initial entities.
///   1. keep edges in components that hold at least one target;
///   2. repeatedly delete edges at degree-1 nodes that are not anchored;
///   3. drop surviving components without an initial entity.
/// Cycles of unanchored nodes survive step 2 and are kept.
SupportSubgraph support_subgraph(const KGContext& kg, const std::set<std::string>& targets);

/// Targets from the trajectory's final thought/answer, then support_subgraph.
SupportSubgraph backtrace(const Trajectory& trajectory);

struct ExplorationFilter {
    enum class Verdict { Keep, Filtered, Drop };

    Verdict verdict = Verdict::Drop;
    ExplorationOutcome outcome;        // what survives (meaningless for Drop)
    std::vector<std::size_t> kept_pairs;  // indices into the Expand pairs
};

/// The final Sufficient step is kept verbatim. An Expand step keeps the pairs
/// whose completion produced at least one triplet of `support`; with none
/// left the whole step is dropped.
ExplorationFilter filter_exploration(const IterationRecord& record, const SupportSubgraph& support);

/// Recorded triplets that lie in `support` (by normalized key), or nullopt
/// when none do. Duplicate pair records always drop.
std::optional<std::vector<Triplet>> filter_completion(const PairRecord& record,
                                                      const SupportSubgraph& support);

/// Counts output tokens for the FA ratio.
using TokenCounter = std::function<std::size_t(std::string_view)>;

struct FaBreakdown {
    std::size_t all_tokens = 0;
    std::size_t filtered_tokens = 0;

    double ratio() const {
        return all_tokens == 0 ? 0.0 : static_cast<double>(filtered_tokens) / static_cast<double>(all_tokens);
    }
};

/// Token accounting over every accepted exploration and completion output.
/// Filtered tokens are the removed pair lines, removed triplet lines, and
/// whole outputs of dropped steps. Default counter splits on whitespace.
FaBreakdown fa_breakdown(const Trajectory& trajectory, const SupportSubgraph& support,
                         const TokenCounter& count_tokens = nullptr);

double fa_ratio(const Trajectory& trajectory, const SupportSubgraph& support,
                const TokenCounter& count_tokens = nullptr);

struct SupervisionExample {
    TemplateKind kind = TemplateKind::Exploration;
    std::string prompt;
    std::string target;
    std::string question;  // question id, or the question text when there is no id
    int iteration = 0;
    std::optional<int> pair;  // 1-based; completion examples only

    friend bool operator==(const SupervisionExample&, const SupervisionExample&) = default;
};

enum class PromptMode {
    Verbatim,  // the prompt the model saw
    Rerender,  // exploration prompts rebuilt from the support-filtered graph
};

struct SynthesisOptions {
    PromptMode mode = PromptMode::Verbatim;
    /// Needed for Rerender; the graph is rendered as triplets.
    const TemplateSet* templates = nullptr;
};

/// One exploration example per kept or filtered exploration step and one
/// completion example per kept pair, in trajectory order.
std::vector<SupervisionExample> synthesize_supervision(const Trajectory& trajectory,
                                                       const SupportSubgraph& support,
                                                       const SynthesisOptions& options = {});

/// {"kind", "prompt", "target", "origin": {"question", "iteration", "pair"}}
std::string serialize_supervision_record(const SupervisionExample& example);
SupervisionExample parse_supervision_record(std::string_view line);
std::string serialize_supervision(const std::vector<SupervisionExample>& examples);
std::vector<SupervisionExample> parse_supervision(std::string_view jsonl);

}  // namespace knowtrace
