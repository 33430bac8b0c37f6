#include "knowtrace/engine.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <set>
#include <thread>
#include <utility>

#include "knowtrace/errors.hpp"
#include "knowtrace/text_util.hpp"

namespace knowtrace {

void EngineConfig::validate() const {
    if (max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
    if (passages_per_query < 1) throw ConfigError("passages_per_query must be >= 1");
    if (parse_retries < 0) throw ConfigError("parse_retries must be >= 0");
    if (max_output_tokens < 1) throw ConfigError("max_output_tokens must be >= 1");
    if (inner_parallelism < 1) throw ConfigError("inner_parallelism must be >= 1");
}

FinalState FinalState::answered(std::string thought, std::string answer) {
    return {Kind::Answered, std::move(thought), std::move(answer), {}, {}};
}

FinalState FinalState::exhausted(std::string thought, std::string answer) {
    return {Kind::Exhausted, std::move(thought), std::move(answer), {}, {}};
}

FinalState FinalState::failed(std::string reason, std::string step) {
    return {Kind::Failed, {}, {}, std::move(reason), std::move(step)};
}

std::string_view to_string(FinalState::Kind kind) {
    switch (kind) {
        case FinalState::Kind::Answered: return "answered";
        case FinalState::Kind::Exhausted: return "exhausted";
        case FinalState::Kind::Failed: return "failed";
    }
    return "failed";
}

namespace {

/// Runs fn(0..count-1) on up to `width` threads. Exceptions are captured per
/// index rather than propagated.
std::vector<std::exception_ptr> parallel_for(std::size_t count, int width,
                                             const std::function<void(std::size_t)>& fn) {
    std::vector<std::exception_ptr> errors(count);
    auto guarded = [&](std::size_t i) {
        try {
            fn(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    const std::size_t threads = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(width, 1)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) guarded(i);
        return errors;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) guarded(i);
        });
    }
    for (auto& th : pool) th.join();
    return errors;
}

std::vector<GenerationAttempt> attempts_from(const std::string& prompt,
                                             const GenerationFormatError& e) {
    std::vector<GenerationAttempt> out;
    const std::string corrected = prompt + "\n\n" + std::string(kCorrectiveSuffix);
    for (std::size_t i = 0; i < e.raw_attempts().size(); ++i) {
        out.push_back({i == 0 ? prompt : corrected, e.raw_attempts()[i]});
    }
    return out;
}

/// Maps a caught exception to a Failed final state.
FinalState failure_from(std::exception_ptr error, const std::string& step) {
    try {
        std::rethrow_exception(error);
    } catch (const GenerationFormatError& e) {
        return FinalState::failed(std::string("format: ") + e.what(), step);
    } catch (const TransportError& e) {
        return FinalState::failed(std::string("transport: ") + e.what(), step);
    } catch (const std::exception& e) {
        return FinalState::failed(std::string("error: ") + e.what(), step);
    }
}

class QuestionRun {
  public:
    QuestionRun(const Question& question, const EngineContext& ctx) : ctx_(ctx) {
        traj_.question_id = question.id;
        traj_.question = question.text;
        traj_.config = ctx.config;
        traj_.backend_identity = ctx.backend.identity();
    }

    Trajectory run() {
        const int L = ctx_.config.max_iterations;
        for (int l = 1; l <= L; ++l) {
            if (!explore(l, false)) return std::move(traj_);
        }
        explore(L + 1, true);
        return std::move(traj_);
    }

  private:
    /// One exploration step plus, for Expand, its inner loop and merge.
    /// Returns false once the trajectory is finished.
    bool explore(int l, bool forced) {
        IterationRecord rec;
        rec.index = l;
        rec.forced = forced;
        const std::string step = forced ? "forced answer" : "iteration " + std::to_string(l) + " exploration";

        try {
            rec.exploration_prompt = build_exploration_prompt(ctx_.templates.exploration, traj_.question,
                                                              render_knowledge());
            if (forced) rec.exploration_prompt += "\n\n" + std::string(kForcedAnswerSuffix);
            auto gen = generate_with_retry<ExplorationOutcome>(
                ctx_.backend, rec.exploration_prompt,
                forced ? std::function<ExplorationOutcome(std::string_view)>(parse_forced_answer)
                       : std::function<ExplorationOutcome(std::string_view)>(parse_exploration),
                ctx_.config.parse_retries, ctx_.config.max_output_tokens);
            rec.exploration_prompt = std::move(gen.prompt);
            rec.exploration_raw = std::move(gen.raw);
            rec.rejected_attempts = std::move(gen.rejected);
            rec.outcome = std::move(gen.value);
        } catch (const GenerationFormatError& e) {
            rec.rejected_attempts = attempts_from(rec.exploration_prompt, e);
            traj_.iterations.push_back(std::move(rec));
            traj_.final = failure_from(std::current_exception(), step);
            return false;
        } catch (...) {
            traj_.iterations.push_back(std::move(rec));
            traj_.final = failure_from(std::current_exception(), step);
            return false;
        }

        if (const auto* done = std::get_if<Sufficient>(&*rec.outcome)) {
            traj_.final = forced ? FinalState::exhausted(done->thought, done->answer)
                                 : FinalState::answered(done->thought, done->answer);
            traj_.iterations.push_back(std::move(rec));
            return false;
        }

        const auto& pairs = std::get<Expand>(*rec.outcome).pairs;
        rec.pair_records.resize(pairs.size());
        std::vector<std::size_t> tasks;
        std::set<std::pair<std::string, std::string>> seen;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            PairRecord& pr = rec.pair_records[i];
            pr.pair = pairs[i];
            if (!seen.emplace(normalize_text(pairs[i].entity), pairs[i].relation_hint).second) {
                pr.duplicate = true;
                continue;
            }
            pr.is_initial_entity = traj_.kg.register_expansion_point(pairs[i].entity);
            tasks.push_back(i);
        }

        const auto errors = parallel_for(tasks.size(), ctx_.config.inner_parallelism, [&](std::size_t t) {
            complete_pair(l, tasks[t], rec.pair_records[tasks[t]]);
        });
        for (std::size_t t = 0; t < tasks.size(); ++t) {
            if (!errors[t]) continue;
            traj_.iterations.push_back(std::move(rec));
            traj_.final = failure_from(errors[t], "iteration " + std::to_string(l) + " pair " +
                                                      std::to_string(tasks[t] + 1) + " completion");
            return false;
        }

        for (const PairRecord& pr : rec.pair_records) traj_.kg.merge(pr.completion_triplets);
        traj_.iterations.push_back(std::move(rec));
        return true;
    }

    std::string render_knowledge() {
        if (ctx_.config.strategy != RenderStrategy::Texts) return render(traj_.kg, ctx_.config.strategy);
        GenerationBackend& rewriter = ctx_.rewrite_backend ? *ctx_.rewrite_backend : ctx_.backend;
        const int max_tokens = ctx_.config.max_output_tokens;
        return render(traj_.kg, RenderStrategy::Texts,
                      [&](const std::string& prompt) { return rewriter.generate(prompt, max_tokens); });
    }

    /// Retrieval and completion for one pair. Touches only `pr`, so calls for
    /// different pairs may run concurrently.
    void complete_pair(int l, std::size_t index, PairRecord& pr) const {
        pr.query = form_query(pr.pair.entity, pr.pair.relation_hint);
        const auto passages =
            ctx_.retriever.retrieve(pr.query, static_cast<std::size_t>(ctx_.config.passages_per_query));
        for (const Passage& p : passages) {
            pr.passage_ids.push_back(p.id);
            pr.passage_tokens += whitespace_token_count(p.title) + whitespace_token_count(p.text);
        }
        pr.completion_prompt = build_completion_prompt(ctx_.templates.completion, pr.pair, passages);
        try {
            auto gen = generate_with_retry<ParsedCompletion>(ctx_.backend, pr.completion_prompt,
                                                             parse_completion_detailed, ctx_.config.parse_retries,
                                                             ctx_.config.max_output_tokens);
            pr.completion_prompt = std::move(gen.prompt);
            pr.completion_raw = std::move(gen.raw);
            pr.rejected_attempts = std::move(gen.rejected);
            pr.skipped_lines = std::move(gen.value.skipped_lines);
            for (const RawTriple& t : gen.value.outcome.triples) {
                TripletProvenance prov{l, static_cast<int>(index) + 1, pr.pair.entity, pr.pair.relation_hint,
                                       pr.passage_ids};
                pr.completion_triplets.push_back({t.subject, t.relation, t.object, std::move(prov)});
            }
        } catch (const GenerationFormatError& e) {
            pr.rejected_attempts = attempts_from(pr.completion_prompt, e);
            throw;
        }
    }

    const EngineContext& ctx_;
    Trajectory traj_;
};

}  // namespace

Trajectory run_question(const Question& question, const EngineContext& ctx) {
    ctx.config.validate();
    return QuestionRun(question, ctx).run();
}

std::vector<Trajectory> run_batch(const std::vector<Question>& questions, const EngineContext& ctx,
                                  int concurrency_width) {
    if (concurrency_width < 1) throw ConfigError("concurrency width must be >= 1");
    ctx.config.validate();
    std::vector<Trajectory> out(questions.size());
    const auto errors = parallel_for(questions.size(), concurrency_width,
                                     [&](std::size_t i) { out[i] = run_question(questions[i], ctx); });
    for (std::size_t i = 0; i < questions.size(); ++i) {
        if (!errors[i]) continue;
        out[i] = Trajectory{};
        out[i].question_id = questions[i].id;
        out[i].question = questions[i].text;
        out[i].config = ctx.config;
        out[i].backend_identity = ctx.backend.identity();
        out[i].final = failure_from(errors[i], "setup");
    }
    return out;
}

}  // namespace knowtrace
