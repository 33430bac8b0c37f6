#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "knowtrace/engine.hpp"

namespace knowtrace {

/// Pretty-printed JSON with sorted keys; byte-identical for equal trajectories.
std::string serialize_trajectory(const Trajectory& trajectory);
/// Throws Error on malformed input.
Trajectory parse_trajectory(const std::string& json_text);

/// "<fnv1a64 of the question>.json"
std::string trajectory_file_name(const std::string& question);

/// Writes into `dir` and returns the file path.
std::filesystem::path write_trajectory(const std::filesystem::path& dir, const Trajectory& trajectory);
Trajectory read_trajectory(const std::filesystem::path& path);

/// Every *.json trajectory in `dir`, sorted by file name. A missing directory
/// yields an empty list.
std::vector<std::filesystem::path> list_trajectory_files(const std::filesystem::path& dir);

/// One JSON record per line: subject, relation, object, provenance
/// {iteration, pair_index, source_pair: [entity, relation], passage_ids}.
std::string serialize_kg_records(const KGContext& kg);
/// Rebuilds the triplet list (initial entities are not part of this format).
KGContext parse_kg_records(const std::string& text);

}  // namespace knowtrace
