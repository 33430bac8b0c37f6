#include "knowtrace/kgstore.hpp"

#include <sstream>

#include "knowtrace/errors.hpp"
#include "knowtrace/text_util.hpp"

namespace knowtrace {

std::string normalize_entity(std::string_view raw) {
    std::string key = normalize_text(raw);
    if (key.empty()) throw InvalidEntity("entity is empty after trimming");
    return key;
}

namespace {

void check_part(std::string_view part, const char* name) {
    if (trim(part).empty())
        throw MalformedTriplet(std::string("triplet ") + name + " is empty");
    if (part.find_first_of("|\n\r") != std::string_view::npos)
        throw MalformedTriplet(std::string("triplet ") + name +
                               " contains '|' or a line break: " + std::string(part));
}

}  // namespace

void Triplet::validate() const {
    check_part(subject, "subject");
    check_part(relation, "relation");
    check_part(object, "object");
}

TripletKey Triplet::key() const {
    return {normalize_text(subject), normalize_text(relation), normalize_text(object)};
}

std::size_t KGContext::merge(const std::vector<Triplet>& new_triplets,
                             std::vector<std::string>* rejected) {
    std::size_t inserted = 0;
    for (const Triplet& t : new_triplets) {
        try {
            t.validate();
        } catch (const MalformedTriplet& e) {
            if (rejected) rejected->emplace_back(e.what());
            continue;
        }
        TripletKey key = t.key();
        if (key_index_.count(key)) continue;
        const std::size_t index = triplets_.size();
        triplets_.push_back(t);
        key_index_.emplace(std::move(key), index);
        touch_entity(t.subject, index);
        if (normalize_text(t.object) != normalize_text(t.subject)) touch_entity(t.object, index);
        ++inserted;
    }
    return inserted;
}

void KGContext::touch_entity(const std::string& surface, std::size_t triplet_index) {
    std::string key = normalize_text(surface);
    auto it = entity_index_.find(key);
    if (it == entity_index_.end()) {
        entity_order_.push_back(key);
        it = entity_index_.emplace(std::move(key), EntityEntry{std::string(trim(surface)), {}}).first;
    }
    it->second.incident.push_back(triplet_index);
}

bool KGContext::register_expansion_point(std::string_view entity) {
    std::string key = normalize_entity(entity);
    if (entity_index_.count(key)) return false;
    entity_order_.push_back(key);
    initial_entities_.insert(key);
    entity_index_.emplace(std::move(key), EntityEntry{std::string(trim(entity)), {}});
    return true;
}

std::vector<EntitySnapshot> KGContext::entity_snapshot() const {
    std::vector<EntitySnapshot> out;
    out.reserve(entity_order_.size());
    for (const auto& key : entity_order_) {
        out.push_back({entity_index_.find(key)->second.surface, initial_entities_.count(key) > 0});
    }
    return out;
}

KGContext KGContext::restore(const std::vector<EntitySnapshot>& entities,
                             const std::vector<Triplet>& triplets) {
    KGContext kg;
    for (const auto& e : entities) {
        std::string key = normalize_entity(e.surface);
        if (kg.entity_index_.count(key)) continue;
        kg.entity_order_.push_back(key);
        if (e.initial) kg.initial_entities_.insert(key);
        kg.entity_index_.emplace(std::move(key), EntityEntry{e.surface, {}});
    }
    std::vector<std::string> rejected;
    kg.merge(triplets, &rejected);
    if (!rejected.empty()) throw MalformedTriplet(rejected.front());
    return kg;
}

std::optional<std::size_t> KGContext::find(const TripletKey& key) const {
    auto it = key_index_.find(key);
    if (it == key_index_.end()) return std::nullopt;
    return it->second;
}

bool KGContext::contains_entity(std::string_view normalized_key) const {
    return entity_index_.find(normalized_key) != entity_index_.end();
}

const EntityEntry* KGContext::entity(std::string_view normalized_key) const {
    auto it = entity_index_.find(normalized_key);
    return it == entity_index_.end() ? nullptr : &it->second;
}

bool KGContext::is_initial(std::string_view normalized_key) const {
    return initial_entities_.count(std::string(normalized_key)) > 0;
}

std::string_view to_string(RenderStrategy strategy) {
    switch (strategy) {
        case RenderStrategy::Triplets: return "triplets";
        case RenderStrategy::Paths: return "paths";
        case RenderStrategy::Texts: return "texts";
    }
    return "triplets";
}

RenderStrategy parse_render_strategy(std::string_view name) {
    const std::string lowered = to_lower_ascii(trim(name));
    if (lowered == "triplets") return RenderStrategy::Triplets;
    if (lowered == "paths") return RenderStrategy::Paths;
    if (lowered == "texts") return RenderStrategy::Texts;
    throw ConfigError("unknown rendering strategy: " + std::string(name));
}

const std::string_view kRewriteInstruction =
    "Rewrite the following knowledge triplets into fluent natural-language sentences. "
    "Keep every fact, add nothing, and output only the sentences.";

std::string format_triplet_line(std::string_view subject, std::string_view relation,
                                std::string_view object) {
    std::string line;
    line.reserve(subject.size() + relation.size() + object.size() + 8);
    line += '(';
    line += subject;
    line += " | ";
    line += relation;
    line += " | ";
    line += object;
    line += ')';
    return line;
}

namespace {

std::string render_triplets(const KGContext& kg) {
    std::string out;
    for (const Triplet& t : kg.triplets()) {
        if (!out.empty()) out += '\n';
        out += format_triplet_line(t.subject, t.relation, t.object);
    }
    return out;
}

std::string render_paths(const KGContext& kg) {
    std::vector<std::string> lines;
    std::vector<std::string> singles;
    for (const PathChain& chain : assemble_paths(kg)) {
        const auto& ts = kg.triplets();
        if (chain.triplet_indices.size() == 1) {
            const Triplet& t = ts[chain.triplet_indices.front()];
            singles.push_back(format_triplet_line(t.subject, t.relation, t.object));
            continue;
        }
        std::string line = ts[chain.triplet_indices.front()].subject;
        for (std::size_t idx : chain.triplet_indices) {
            line += " --" + ts[idx].relation + "--> " + ts[idx].object;
        }
        lines.push_back(std::move(line));
    }
    lines.insert(lines.end(), singles.begin(), singles.end());
    std::string out;
    for (const auto& line : lines) {
        if (!out.empty()) out += '\n';
        out += line;
    }
    return out;
}

}  // namespace

std::string render(const KGContext& kg, RenderStrategy strategy, const RewriteFn& rewrite) {
    if (strategy == RenderStrategy::Texts && !rewrite) throw MissingRewriteBackend();
    if (kg.empty()) return "None";
    switch (strategy) {
        case RenderStrategy::Triplets: return render_triplets(kg);
        case RenderStrategy::Paths: return render_paths(kg);
        case RenderStrategy::Texts: {
            std::string prompt(kRewriteInstruction);
            prompt += "\n\n";
            prompt += render_triplets(kg);
            return rewrite(prompt);
        }
    }
    return render_triplets(kg);
}

std::vector<std::string> PathChain::sequence(const KGContext& kg) const {
    std::vector<std::string> seq;
    if (triplet_indices.empty()) return seq;
    const auto& ts = kg.triplets();
    seq.push_back(ts[triplet_indices.front()].subject);
    for (std::size_t idx : triplet_indices) {
        seq.push_back(ts[idx].relation);
        seq.push_back(ts[idx].object);
    }
    return seq;
}

std::vector<PathChain> assemble_paths(const KGContext& kg) {
    const auto& ts = kg.triplets();
    std::vector<std::string> subject_keys;
    std::vector<std::string> object_keys;
    subject_keys.reserve(ts.size());
    object_keys.reserve(ts.size());
    for (const Triplet& t : ts) {
        subject_keys.push_back(normalize_text(t.subject));
        object_keys.push_back(normalize_text(t.object));
    }

    std::vector<bool> used(ts.size(), false);
    std::vector<PathChain> chains;
    for (std::size_t start = 0; start < ts.size(); ++start) {
        if (used[start]) continue;
        PathChain chain;
        chain.triplet_indices.push_back(start);
        used[start] = true;
        for (;;) {
            const std::string& tail = object_keys[chain.triplet_indices.back()];
            std::size_t candidate = ts.size();
            int count = 0;
            for (std::size_t j = 0; j < ts.size() && count < 2; ++j) {
                if (!used[j] && subject_keys[j] == tail) {
                    candidate = j;
                    ++count;
                }
            }
            if (count != 1) break;
            chain.triplet_indices.push_back(candidate);
            used[candidate] = true;
        }
        chains.push_back(std::move(chain));
    }
    return chains;
}

}  // namespace knowtrace
