#include "knowtrace/trajectory_io.hpp"

#include <algorithm>

#include "json.hpp"

#include "knowtrace/errors.hpp"
#include "knowtrace/text_util.hpp"

namespace knowtrace {

using nlohmann::json;

namespace {

json triplet_to_json(const Triplet& t) {
    return {{"subject", t.subject},
            {"relation", t.relation},
            {"object", t.object},
            {"provenance",
             {{"iteration", t.provenance.iteration},
              {"pair_index", t.provenance.pair_index},
              {"source_pair", json::array({t.provenance.source_entity, t.provenance.source_relation})},
              {"passage_ids", t.provenance.passage_ids}}}};
}

Triplet triplet_from_json(const json& j) {
    Triplet t;
    t.subject = j.at("subject").get<std::string>();
    t.relation = j.at("relation").get<std::string>();
    t.object = j.at("object").get<std::string>();
    const json& p = j.at("provenance");
    t.provenance.iteration = p.at("iteration").get<int>();
    t.provenance.pair_index = p.at("pair_index").get<int>();
    t.provenance.source_entity = p.at("source_pair").at(0).get<std::string>();
    t.provenance.source_relation = p.at("source_pair").at(1).get<std::string>();
    t.provenance.passage_ids = p.at("passage_ids").get<std::vector<std::string>>();
    return t;
}

json attempts_to_json(const std::vector<GenerationAttempt>& attempts) {
    json arr = json::array();
    for (const auto& a : attempts) arr.push_back({{"prompt", a.prompt}, {"raw", a.raw}});
    return arr;
}

std::vector<GenerationAttempt> attempts_from_json(const json& arr) {
    std::vector<GenerationAttempt> out;
    for (const auto& a : arr) out.push_back({a.at("prompt").get<std::string>(), a.at("raw").get<std::string>()});
    return out;
}

json outcome_to_json(const std::optional<ExplorationOutcome>& outcome) {
    if (!outcome) return nullptr;
    if (const auto* s = std::get_if<Sufficient>(&*outcome))
        return {{"type", "sufficient"}, {"thought", s->thought}, {"answer", s->answer}};
    json pairs = json::array();
    for (const auto& p : std::get<Expand>(*outcome).pairs)
        pairs.push_back({{"entity", p.entity}, {"relation", p.relation_hint}});
    return {{"type", "expand"}, {"pairs", pairs}};
}

std::optional<ExplorationOutcome> outcome_from_json(const json& j) {
    if (j.is_null()) return std::nullopt;
    const std::string type = j.at("type").get<std::string>();
    if (type == "sufficient")
        return Sufficient{j.at("thought").get<std::string>(), j.at("answer").get<std::string>()};
    if (type != "expand") throw Error("unknown outcome type: " + type);
    Expand e;
    for (const auto& p : j.at("pairs"))
        e.pairs.push_back({p.at("entity").get<std::string>(), p.at("relation").get<std::string>()});
    return e;
}

json pair_to_json(const PairRecord& pr) {
    json triplets = json::array();
    for (const auto& t : pr.completion_triplets) triplets.push_back(triplet_to_json(t));
    return {{"pair", {{"entity", pr.pair.entity}, {"relation", pr.pair.relation_hint}}},
            {"is_initial_entity", pr.is_initial_entity},
            {"duplicate", pr.duplicate},
            {"query", pr.query},
            {"passage_ids", pr.passage_ids},
            {"passage_tokens", pr.passage_tokens},
            {"completion_prompt", pr.completion_prompt},
            {"completion_raw", pr.completion_raw},
            {"rejected_attempts", attempts_to_json(pr.rejected_attempts)},
            {"completion_triplets", triplets},
            {"skipped_lines", pr.skipped_lines}};
}

PairRecord pair_from_json(const json& j) {
    PairRecord pr;
    pr.pair = {j.at("pair").at("entity").get<std::string>(), j.at("pair").at("relation").get<std::string>()};
    pr.is_initial_entity = j.at("is_initial_entity").get<bool>();
    pr.duplicate = j.at("duplicate").get<bool>();
    pr.query = j.at("query").get<std::string>();
    pr.passage_ids = j.at("passage_ids").get<std::vector<std::string>>();
    pr.passage_tokens = j.at("passage_tokens").get<std::size_t>();
    pr.completion_prompt = j.at("completion_prompt").get<std::string>();
    pr.completion_raw = j.at("completion_raw").get<std::string>();
    pr.rejected_attempts = attempts_from_json(j.at("rejected_attempts"));
    for (const auto& t : j.at("completion_triplets")) pr.completion_triplets.push_back(triplet_from_json(t));
    pr.skipped_lines = j.at("skipped_lines").get<std::vector<std::string>>();
    return pr;
}

FinalState::Kind kind_from_string(const std::string& s) {
    if (s == "answered") return FinalState::Kind::Answered;
    if (s == "exhausted") return FinalState::Kind::Exhausted;
    if (s == "failed") return FinalState::Kind::Failed;
    throw Error("unknown final status: " + s);
}

json kg_to_json(const KGContext& kg) {
    json entities = json::array();
    for (const auto& e : kg.entity_snapshot()) entities.push_back({{"surface", e.surface}, {"initial", e.initial}});
    json triplets = json::array();
    for (const auto& t : kg.triplets()) triplets.push_back(triplet_to_json(t));
    return {{"entities", entities}, {"triplets", triplets}};
}

KGContext kg_from_json(const json& j) {
    std::vector<EntitySnapshot> entities;
    for (const auto& e : j.at("entities"))
        entities.push_back({e.at("surface").get<std::string>(), e.at("initial").get<bool>()});
    std::vector<Triplet> triplets;
    for (const auto& t : j.at("triplets")) triplets.push_back(triplet_from_json(t));
    return KGContext::restore(entities, triplets);
}

}  // namespace

std::string serialize_trajectory(const Trajectory& traj) {
    json iterations = json::array();
    for (const auto& it : traj.iterations) {
        json pairs = json::array();
        for (const auto& pr : it.pair_records) pairs.push_back(pair_to_json(pr));
        iterations.push_back({{"index", it.index},
                              {"forced", it.forced},
                              {"exploration_prompt", it.exploration_prompt},
                              {"exploration_raw", it.exploration_raw},
                              {"rejected_attempts", attempts_to_json(it.rejected_attempts)},
                              {"outcome", outcome_to_json(it.outcome)},
                              {"pair_records", pairs}});
    }
    // inner_parallelism is not serialized; the bytes must not depend on it.
    const json doc = {
        {"question_id", traj.question_id},
        {"question", traj.question},
        {"backend_identity", traj.backend_identity},
        {"config",
         {{"max_iterations", traj.config.max_iterations},
          {"passages_per_query", traj.config.passages_per_query},
          {"strategy", std::string(to_string(traj.config.strategy))},
          {"parse_retries", traj.config.parse_retries},
          {"max_output_tokens", traj.config.max_output_tokens}}},
        {"iterations", iterations},
        {"final",
         {{"status", std::string(to_string(traj.final.kind))},
          {"thought", traj.final.thought},
          {"answer", traj.final.answer},
          {"reason", traj.final.reason},
          {"step", traj.final.step}}},
        {"kg", kg_to_json(traj.kg)}};
    return doc.dump(2) + "\n";
}

Trajectory parse_trajectory(const std::string& json_text) {
    try {
        const json doc = json::parse(json_text);
        Trajectory traj;
        traj.question_id = doc.value("question_id", std::string());
        traj.question = doc.at("question").get<std::string>();
        traj.backend_identity = doc.at("backend_identity").get<std::string>();
        const json& cfg = doc.at("config");
        traj.config.max_iterations = cfg.at("max_iterations").get<int>();
        traj.config.passages_per_query = cfg.at("passages_per_query").get<int>();
        traj.config.strategy = parse_render_strategy(cfg.at("strategy").get<std::string>());
        traj.config.parse_retries = cfg.at("parse_retries").get<int>();
        traj.config.max_output_tokens = cfg.at("max_output_tokens").get<int>();
        for (const auto& it : doc.at("iterations")) {
            IterationRecord rec;
            rec.index = it.at("index").get<int>();
            rec.forced = it.at("forced").get<bool>();
            rec.exploration_prompt = it.at("exploration_prompt").get<std::string>();
            rec.exploration_raw = it.at("exploration_raw").get<std::string>();
            rec.rejected_attempts = attempts_from_json(it.at("rejected_attempts"));
            rec.outcome = outcome_from_json(it.at("outcome"));
            for (const auto& pr : it.at("pair_records")) rec.pair_records.push_back(pair_from_json(pr));
            traj.iterations.push_back(std::move(rec));
        }
        const json& fin = doc.at("final");
        traj.final.kind = kind_from_string(fin.at("status").get<std::string>());
        traj.final.thought = fin.at("thought").get<std::string>();
        traj.final.answer = fin.at("answer").get<std::string>();
        traj.final.reason = fin.at("reason").get<std::string>();
        traj.final.step = fin.at("step").get<std::string>();
        traj.kg = kg_from_json(doc.at("kg"));
        return traj;
    } catch (const json::exception& e) {
        throw Error(std::string("malformed trajectory: ") + e.what());
    }
}

std::string trajectory_file_name(const std::string& question) {
    return fnv1a64_hex(question) + ".json";
}

std::filesystem::path write_trajectory(const std::filesystem::path& dir, const Trajectory& trajectory) {
    const auto path = dir / trajectory_file_name(trajectory.question);
    write_file(path, serialize_trajectory(trajectory));
    return path;
}

Trajectory read_trajectory(const std::filesystem::path& path) {
    try {
        return parse_trajectory(read_file(path));
    } catch (const Error& e) {
        throw Error(path.string() + ": " + e.what());
    }
}

std::vector<std::filesystem::path> list_trajectory_files(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    if (!std::filesystem::is_directory(dir)) return files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json" &&
            entry.path().stem().string().size() == 16)
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

std::string serialize_kg_records(const KGContext& kg) {
    std::string out;
    for (const auto& t : kg.triplets()) {
        out += triplet_to_json(t).dump();
        out += '\n';
    }
    return out;
}

KGContext parse_kg_records(const std::string& text) {
    std::vector<Triplet> triplets;
    for (std::string_view line : split_lines(text)) {
        if (trim(line).empty()) continue;
        try {
            triplets.push_back(triplet_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw Error(std::string("malformed KG record: ") + e.what());
        }
    }
    KGContext kg;
    std::vector<std::string> rejected;
    kg.merge(triplets, &rejected);
    if (!rejected.empty()) throw MalformedTriplet(rejected.front());
    return kg;
}

}  // namespace knowtrace
