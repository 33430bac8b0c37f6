#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace knowtrace {

/// Normalized entity identity: lowercase, trimmed, internal whitespace
/// collapsed. Throws InvalidEntity when nothing is left after trimming.
std::string normalize_entity(std::string_view raw);

struct TripletProvenance {
    int iteration = 0;
    int pair_index = 0;
    std::string source_entity;
    std::string source_relation;
    std::vector<std::string> passage_ids;

    friend bool operator==(const TripletProvenance&, const TripletProvenance&) = default;
};

struct TripletKey {
    std::string subject;
    std::string relation;
    std::string object;

    friend auto operator<=>(const TripletKey&, const TripletKey&) = default;
};

struct Triplet {
    std::string subject;
    std::string relation;
    std::string object;
    TripletProvenance provenance;

    /// Throws MalformedTriplet if any part is blank or contains a character
    /// that would break the line grammar ('|' or a line break).
    void validate() const;

    TripletKey key() const;

    friend bool operator==(const Triplet&, const Triplet&) = default;
};

struct EntitySnapshot {
    std::string surface;
    bool initial = false;
};

struct EntityEntry {
    std::string surface;  // first-seen spelling
    std::vector<std::size_t> incident;  // indices into KGContext::triplets()
};

/// The question-specific knowledge graph grown during one inference run.
///
/// Triplets keep acquisition order and are deduplicated by normalized
/// (subject, relation, object). Entities are indexed by normalized key; an
/// expansion point can be registered before any triplet mentions it.
/// Plain value type: copies are independent snapshots, and const access is
/// safe from several threads at once.
class KGContext {
  public:
    /// Inserts triplets in order, skipping normalized duplicates. Malformed
    /// triplets are skipped too and, if `rejected` is given, reported there.
    /// Returns the number actually inserted.
    std::size_t merge(const std::vector<Triplet>& new_triplets,
                      std::vector<std::string>* rejected = nullptr);

    /// True (and the entity becomes an initial entity) iff the normalized
    /// entity was unknown at call time. Otherwise nothing changes.
    bool register_expansion_point(std::string_view entity);

    const std::vector<Triplet>& triplets() const noexcept { return triplets_; }
    bool empty() const noexcept { return triplets_.empty(); }
    std::size_t size() const noexcept { return triplets_.size(); }

    std::optional<std::size_t> find(const TripletKey& key) const;
    bool contains_entity(std::string_view normalized_key) const;
    const EntityEntry* entity(std::string_view normalized_key) const;

    /// Normalized entity keys in first-seen order.
    const std::vector<std::string>& entity_order() const noexcept { return entity_order_; }
    const std::set<std::string>& initial_entities() const noexcept { return initial_entities_; }
    bool is_initial(std::string_view normalized_key) const;

    /// Entities in first-seen order, for serialization.
    std::vector<EntitySnapshot> entity_snapshot() const;

    /// Inverse of entity_snapshot() + triplets(). Throws MalformedTriplet.
    static KGContext restore(const std::vector<EntitySnapshot>& entities,
                             const std::vector<Triplet>& triplets);

    friend bool operator==(const KGContext& a, const KGContext& b) {
        return a.triplets_ == b.triplets_ && a.entity_order_ == b.entity_order_ &&
               a.initial_entities_ == b.initial_entities_;
    }

  private:
    void touch_entity(const std::string& surface, std::size_t triplet_index);

    std::vector<Triplet> triplets_;
    std::map<TripletKey, std::size_t> key_index_;
    std::map<std::string, EntityEntry, std::less<>> entity_index_;
    std::vector<std::string> entity_order_;
    std::set<std::string> initial_entities_;
};

enum class RenderStrategy { Triplets, Paths, Texts };

std::string_view to_string(RenderStrategy strategy);
/// Accepts "triplets", "paths", "texts" (any case).
RenderStrategy parse_render_strategy(std::string_view name);

/// Maps a rewrite prompt to generated text. Used by the Texts strategy.
using RewriteFn = std::function<std::string(const std::string& prompt)>;

/// Instruction placed before the triplet listing when asking for a rewrite.
extern const std::string_view kRewriteInstruction;

/// "(subject | relation | object)". No trailing newline.
std::string format_triplet_line(std::string_view subject, std::string_view relation,
                                std::string_view object);

/// Renders the graph for an exploration prompt. An empty graph is the line
/// "None" regardless of strategy. Texts without `rewrite` throws
/// MissingRewriteBackend.
std::string render(const KGContext& kg, RenderStrategy strategy,
                   const RewriteFn& rewrite = nullptr);

/// One greedy chain of triplets, each subject equal to the previous object.
struct PathChain {
    std::vector<std::size_t> triplet_indices;

    /// entity, relation, entity, relation, ..., entity
    std::vector<std::string> sequence(const KGContext& kg) const;
};

/// Chains triplets in insertion order. A chain grows from its tail only while
/// exactly one unused triplet starts at the tail's object. Every triplet ends
/// up in exactly one chain.
std::vector<PathChain> assemble_paths(const KGContext& kg);

}  // namespace knowtrace
