#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "knowtrace/retrieval.hpp"

namespace knowtrace {

/// Lowercase, strip ASCII punctuation, drop the articles a/an/the, collapse
/// whitespace.
std::string normalize_answer(std::string_view text);

/// 1 iff the normalized prediction equals some normalized gold.
int exact_match(std::string_view prediction, const std::vector<std::string>& golds);

/// Token-overlap F1, maximized over golds.
double f1(std::string_view prediction, const std::vector<std::string>& golds);

struct QAItem {
    std::string id;
    std::string question;
    std::vector<std::string> answers;
    std::vector<Passage> passages;  // ids "<item id>#<ordinal>", ordinal from 0
};

enum class DatasetKind { HotpotQA, TwoWiki, MuSiQue };

/// "hotpotqa", "2wiki", "musique"
DatasetKind parse_dataset_kind(std::string_view name);
std::string_view to_string(DatasetKind kind);

/// Reads a JSON array or JSON lines. Throws DatasetFormatError naming the
/// missing or mistyped field.
std::vector<QAItem> load_dataset(DatasetKind kind, const std::filesystem::path& path);

/// Every candidate passage with non-blank text; the first occurrence wins
/// for equal (title, text).
std::vector<Passage> build_corpus(const std::vector<QAItem>& items);

struct EvalRow {
    enum class Status { Ok, Failed, Missing };

    std::string id;
    int em = 0;
    double f1 = 0.0;
    std::string prediction;
    Status status = Status::Ok;
};

std::string_view to_string(EvalRow::Status status);

struct EvalSummary {
    std::size_t count = 0;
    double em = 0.0;
    double f1 = 0.0;
    std::vector<EvalRow> rows;
};

/// Scores one row per item, in item order, from the trajectory stored under
/// trajectory_file_name(item.question) in `trajectory_dir`.
EvalSummary evaluate(const std::filesystem::path& trajectory_dir, const std::vector<QAItem>& items);

EvalSummary summarize(std::vector<EvalRow> rows);

std::string eval_summary_json(const EvalSummary& summary);
/// Header "id,em,f1,prediction", RFC 4180 quoting.
std::string eval_rows_csv(const EvalSummary& summary);

}  // namespace knowtrace
