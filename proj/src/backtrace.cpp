#include "knowtrace/backtrace.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "json.hpp"

#include "knowtrace/errors.hpp"
#include "knowtrace/text_util.hpp"

namespace knowtrace {

using nlohmann::json;

namespace {

bool bounded_occurrence(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return false;
    for (std::size_t pos = haystack.find(needle); pos != std::string_view::npos;
         pos = haystack.find(needle, pos + 1)) {
        const bool left_ok = pos == 0 || !is_ascii_alnum(haystack[pos - 1]);
        const std::size_t end = pos + needle.size();
        const bool right_ok = end == haystack.size() || !is_ascii_alnum(haystack[end]);
        if (left_ok && right_ok) return true;
    }
    return false;
}

class DisjointSets {
  public:
    explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
        return x;
    }

    void unite(std::size_t a, std::size_t b) { parent_[find(a)] = find(b); }

  private:
    std::vector<std::size_t> parent_;
};

TripletKey key_of(const RawTriple& t) {
    return {normalize_text(t.subject), normalize_text(t.relation), normalize_text(t.object)};
}

std::size_t default_count(std::string_view text) {
    return whitespace_token_count(text);
}

}  // namespace

std::set<std::string> extract_target_entities(const KGContext& kg, std::string_view thought,
                                              std::string_view answer) {
    std::set<std::string> targets;
    if (kg.empty()) return targets;
    const std::string haystack = normalize_text(std::string(thought) + " " + std::string(answer));
    for (const auto& key : kg.entity_order()) {
        if (bounded_occurrence(haystack, key)) targets.insert(key);
    }
    return targets;
}

SupportSubgraph support_subgraph(const KGContext& kg, const std::set<std::string>& targets) {
    SupportSubgraph result;
    result.target_entities = targets;
    const auto& triplets = kg.triplets();
    if (triplets.empty()) return result;

    std::map<std::string, std::size_t> node_of;
    std::vector<std::string> names;
    auto node = [&](const std::string& key) {
        auto [it, inserted] = node_of.emplace(key, names.size());
        if (inserted) names.push_back(key);
        return it->second;
    };
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    edges.reserve(triplets.size());
    for (const auto& t : triplets) {
        const auto k = t.key();
        edges.emplace_back(node(k.subject), node(k.object));
    }
    const std::size_t n = names.size();
    std::vector<bool> is_target(n), is_anchor(n), is_initial(n);
    for (std::size_t v = 0; v < n; ++v) {
        is_target[v] = targets.count(names[v]) > 0;
        is_initial[v] = kg.is_initial(names[v]);
        is_anchor[v] = is_target[v] || is_initial[v];
    }

    // 1. components that contain a target
    std::vector<bool> alive(edges.size(), false);
    {
        DisjointSets sets(n);
        for (const auto& [a, b] : edges) sets.unite(a, b);
        std::vector<bool> has_target(n, false);
        for (std::size_t v = 0; v < n; ++v) {
            if (is_target[v]) has_target[sets.find(v)] = true;
        }
        for (std::size_t e = 0; e < edges.size(); ++e) alive[e] = has_target[sets.find(edges[e].first)];
    }

    // 2. peel unanchored leaves
    std::vector<std::size_t> degree(n, 0);
    std::vector<std::vector<std::size_t>> incident(n);
    for (std::size_t e = 0; e < edges.size(); ++e) {
        if (!alive[e]) continue;
        const auto [a, b] = edges[e];
        ++degree[a];
        ++degree[b];
        incident[a].push_back(e);
        if (b != a) incident[b].push_back(e);
    }
    std::vector<std::size_t> queue;
    for (std::size_t v = 0; v < n; ++v) {
        if (degree[v] == 1 && !is_anchor[v]) queue.push_back(v);
    }
    while (!queue.empty()) {
        const std::size_t v = queue.back();
        queue.pop_back();
        if (degree[v] != 1) continue;
        for (std::size_t e : incident[v]) {
            if (!alive[e]) continue;
            alive[e] = false;
            const auto [a, b] = edges[e];
            --degree[a];
            --degree[b];
            const std::size_t other = a == v ? b : a;
            if (degree[other] == 1 && !is_anchor[other]) queue.push_back(other);
            break;
        }
    }

    // 3. components that also reach an initial entity
    DisjointSets sets(n);
    for (std::size_t e = 0; e < edges.size(); ++e) {
        if (alive[e]) sets.unite(edges[e].first, edges[e].second);
    }
    std::vector<bool> has_initial(n, false);
    for (std::size_t v = 0; v < n; ++v) {
        if (is_initial[v] && degree[v] > 0) has_initial[sets.find(v)] = true;
    }
    for (std::size_t e = 0; e < edges.size(); ++e) {
        if (!alive[e] || !has_initial[sets.find(edges[e].first)]) continue;
        result.triplet_indices.insert(e);
        result.keys.insert(triplets[e].key());
        for (std::size_t v : {edges[e].first, edges[e].second}) {
            if (is_initial[v]) result.anchored_initials.insert(names[v]);
        }
    }
    return result;
}

SupportSubgraph backtrace(const Trajectory& trajectory) {
    const auto targets =
        extract_target_entities(trajectory.kg, trajectory.final.thought, trajectory.final.answer);
    return support_subgraph(trajectory.kg, targets);
}

ExplorationFilter filter_exploration(const IterationRecord& record, const SupportSubgraph& support) {
    ExplorationFilter result;
    if (!record.outcome) return result;
    if (std::holds_alternative<Sufficient>(*record.outcome)) {
        result.verdict = ExplorationFilter::Verdict::Keep;
        result.outcome = *record.outcome;
        return result;
    }
    const auto& pairs = std::get<Expand>(*record.outcome).pairs;
    Expand kept;
    for (std::size_t i = 0; i < pairs.size() && i < record.pair_records.size(); ++i) {
        const PairRecord& pr = record.pair_records[i];
        if (pr.duplicate) continue;
        bool supportive = false;
        for (const auto& t : pr.completion_triplets) {
            if (support.contains(t.key())) {
                supportive = true;
                break;
            }
        }
        if (!supportive) continue;
        kept.pairs.push_back(pairs[i]);
        result.kept_pairs.push_back(i);
    }
    if (kept.pairs.empty()) return result;
    result.verdict = kept.pairs.size() == pairs.size() ? ExplorationFilter::Verdict::Keep
                                                       : ExplorationFilter::Verdict::Filtered;
    result.outcome = std::move(kept);
    return result;
}

std::optional<std::vector<Triplet>> filter_completion(const PairRecord& record, const SupportSubgraph& support) {
    if (record.duplicate) return std::nullopt;
    std::vector<Triplet> kept;
    for (const auto& t : record.completion_triplets) {
        if (support.contains(t.key())) kept.push_back(t);
    }
    if (kept.empty()) return std::nullopt;
    return kept;
}

FaBreakdown fa_breakdown(const Trajectory& trajectory, const SupportSubgraph& support,
                         const TokenCounter& count_tokens) {
    const TokenCounter count = count_tokens ? count_tokens : TokenCounter(default_count);
    FaBreakdown fa;
    for (const auto& rec : trajectory.iterations) {
        if (!rec.outcome) continue;
        fa.all_tokens += count(rec.exploration_raw);
        if (std::holds_alternative<Sufficient>(*rec.outcome)) continue;

        const auto filtered = filter_exploration(rec, support);
        if (filtered.verdict == ExplorationFilter::Verdict::Drop) {
            fa.filtered_tokens += count(rec.exploration_raw);
        } else {
            const auto lines = parse_exploration_detailed(rec.exploration_raw).pair_lines;
            std::size_t k = 0;
            for (std::size_t i = 0; i < lines.size(); ++i) {
                if (k < filtered.kept_pairs.size() && filtered.kept_pairs[k] == i) {
                    ++k;
                    continue;
                }
                fa.filtered_tokens += count(lines[i]);
            }
        }

        for (const auto& pr : rec.pair_records) {
            if (pr.duplicate) continue;
            fa.all_tokens += count(pr.completion_raw);
            if (!filter_completion(pr, support)) {
                fa.filtered_tokens += count(pr.completion_raw);
                continue;
            }
            const auto parsed = parse_completion_detailed(pr.completion_raw);
            for (std::size_t j = 0; j < parsed.outcome.triples.size(); ++j) {
                if (!support.contains(key_of(parsed.outcome.triples[j])))
                    fa.filtered_tokens += count(parsed.triple_lines[j]);
            }
        }
    }
    return fa;
}

double fa_ratio(const Trajectory& trajectory, const SupportSubgraph& support, const TokenCounter& count_tokens) {
    return fa_breakdown(trajectory, support, count_tokens).ratio();
}

namespace {

/// Exploration prompt for iteration `rec` as if the graph had held only
/// supporting triplets acquired before it.
std::string rerender_prompt(const Trajectory& trajectory, const IterationRecord& rec,
                            const SupportSubgraph& support, const TemplateSet& templates) {
    std::vector<Triplet> earlier;
    for (std::size_t idx : support.triplet_indices) {
        const Triplet& t = trajectory.kg.triplets()[idx];
        if (t.provenance.iteration < rec.index) earlier.push_back(t);
    }
    std::sort(earlier.begin(), earlier.end(), [&](const Triplet& a, const Triplet& b) {
        return *trajectory.kg.find(a.key()) < *trajectory.kg.find(b.key());
    });
    KGContext filtered;
    filtered.merge(earlier);
    std::string prompt = build_exploration_prompt(templates.exploration, trajectory.question,
                                                  render(filtered, RenderStrategy::Triplets));
    if (rec.forced) prompt += "\n\n" + std::string(kForcedAnswerSuffix);
    return prompt;
}

}  // namespace

std::vector<SupervisionExample> synthesize_supervision(const Trajectory& trajectory, const SupportSubgraph& support,
                                                       const SynthesisOptions& options) {
    if (options.mode == PromptMode::Rerender && !options.templates)
        throw ConfigError("re-render mode needs templates");
    const std::string origin = trajectory.question_id.empty() ? trajectory.question : trajectory.question_id;

    std::vector<SupervisionExample> out;
    for (const auto& rec : trajectory.iterations) {
        if (!rec.outcome) continue;
        const auto filtered = filter_exploration(rec, support);
        if (filtered.verdict == ExplorationFilter::Verdict::Drop) continue;

        SupervisionExample ex;
        ex.kind = TemplateKind::Exploration;
        ex.prompt = options.mode == PromptMode::Rerender
                        ? rerender_prompt(trajectory, rec, support, *options.templates)
                        : rec.exploration_prompt;
        ex.target = render_exploration(filtered.outcome);
        ex.question = origin;
        ex.iteration = rec.index;
        out.push_back(std::move(ex));

        for (std::size_t i = 0; i < rec.pair_records.size(); ++i) {
            const auto kept = filter_completion(rec.pair_records[i], support);
            if (!kept) continue;
            CompletionOutcome target;
            for (const auto& t : *kept) target.triples.push_back({t.subject, t.relation, t.object});
            out.push_back({TemplateKind::Completion, rec.pair_records[i].completion_prompt,
                           render_completion(target), origin, rec.index, static_cast<int>(i) + 1});
        }
    }
    return out;
}

std::string serialize_supervision_record(const SupervisionExample& ex) {
    const json doc = {
        {"kind", ex.kind == TemplateKind::Exploration ? "exploration" : "completion"},
        {"prompt", ex.prompt},
        {"target", ex.target},
        {"origin",
         {{"question", ex.question},
          {"iteration", ex.iteration},
          {"pair", ex.pair ? json(*ex.pair) : json(nullptr)}}}};
    return doc.dump();
}

SupervisionExample parse_supervision_record(std::string_view line) {
    try {
        const json doc = json::parse(line);
        SupervisionExample ex;
        const std::string kind = doc.at("kind").get<std::string>();
        if (kind == "exploration") {
            ex.kind = TemplateKind::Exploration;
        } else if (kind == "completion") {
            ex.kind = TemplateKind::Completion;
        } else {
            throw Error("unknown supervision kind: " + kind);
        }
        ex.prompt = doc.at("prompt").get<std::string>();
        ex.target = doc.at("target").get<std::string>();
        const json& origin = doc.at("origin");
        ex.question = origin.at("question").get<std::string>();
        ex.iteration = origin.at("iteration").get<int>();
        if (!origin.at("pair").is_null()) ex.pair = origin.at("pair").get<int>();
        return ex;
    } catch (const json::exception& e) {
        throw Error(std::string("malformed supervision record: ") + e.what());
    }
}

std::string serialize_supervision(const std::vector<SupervisionExample>& examples) {
    std::string out;
    for (const auto& ex : examples) {
        out += serialize_supervision_record(ex);
        out += '\n';
    }
    return out;
}

std::vector<SupervisionExample> parse_supervision(std::string_view jsonl) {
    std::vector<SupervisionExample> out;
    for (std::string_view line : split_lines(jsonl)) {
        if (!trim(line).empty()) out.push_back(parse_supervision_record(line));
    }
    return out;
}

}  // namespace knowtrace
