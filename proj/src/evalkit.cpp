#include "knowtrace/evalkit.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

#include "knowtrace/errors.hpp"
#include "knowtrace/text_util.hpp"
#include "knowtrace/trajectory_io.hpp"

namespace knowtrace {

using nlohmann::json;

namespace {

bool is_ascii_punct(unsigned char c) {
    return (c >= 0x21 && c <= 0x2f) || (c >= 0x3a && c <= 0x40) || (c >= 0x5b && c <= 0x60) ||
           (c >= 0x7b && c <= 0x7e);
}

std::vector<std::string> answer_tokens(std::string_view text) {
    std::istringstream in(normalize_answer(text));
    std::vector<std::string> tokens;
    for (std::string tok; in >> tok;) tokens.push_back(std::move(tok));
    return tokens;
}

double f1_single(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
    if (pred.empty() && gold.empty()) return 1.0;
    if (pred.empty() || gold.empty()) return 0.0;
    std::map<std::string, int> counts;
    for (const auto& t : gold) ++counts[t];
    int overlap = 0;
    for (const auto& t : pred) {
        auto it = counts.find(t);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    if (overlap == 0) return 0.0;
    const double precision = static_cast<double>(overlap) / static_cast<double>(pred.size());
    const double recall = static_cast<double>(overlap) / static_cast<double>(gold.size());
    return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

std::string normalize_answer(std::string_view text) {
    std::string stripped;
    stripped.reserve(text.size());
    for (char c : text) {
        const auto u = static_cast<unsigned char>(c);
        if (is_ascii_punct(u)) continue;
        stripped += (u >= 'A' && u <= 'Z') ? static_cast<char>(u - 'A' + 'a') : c;
    }
    std::istringstream in(stripped);
    std::string out;
    for (std::string tok; in >> tok;) {
        if (tok == "a" || tok == "an" || tok == "the") continue;
        if (!out.empty()) out += ' ';
        out += tok;
    }
    return out;
}

int exact_match(std::string_view prediction, const std::vector<std::string>& golds) {
    const std::string pred = normalize_answer(prediction);
    for (const auto& g : golds) {
        if (normalize_answer(g) == pred) return 1;
    }
    return 0;
}

double f1(std::string_view prediction, const std::vector<std::string>& golds) {
    const auto pred = answer_tokens(prediction);
    double best = 0.0;
    for (const auto& g : golds) best = std::max(best, f1_single(pred, answer_tokens(g)));
    return best;
}

DatasetKind parse_dataset_kind(std::string_view name) {
    const std::string lowered = to_lower_ascii(trim(name));
    if (lowered == "hotpotqa") return DatasetKind::HotpotQA;
    if (lowered == "2wiki" || lowered == "2wikimultihopqa") return DatasetKind::TwoWiki;
    if (lowered == "musique") return DatasetKind::MuSiQue;
    throw ConfigError("unknown dataset kind: " + std::string(name));
}

std::string_view to_string(DatasetKind kind) {
    switch (kind) {
        case DatasetKind::HotpotQA: return "hotpotqa";
        case DatasetKind::TwoWiki: return "2wiki";
        case DatasetKind::MuSiQue: return "musique";
    }
    return "hotpotqa";
}

namespace {

const json& field(const json& obj, const char* name, std::size_t record) {
    if (!obj.is_object() || !obj.contains(name))
        throw DatasetFormatError("record " + std::to_string(record) + ": missing field '" + name + "'");
    return obj.at(name);
}

std::string string_field(const json& obj, const char* name, std::size_t record) {
    const json& v = field(obj, name, record);
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    throw DatasetFormatError("record " + std::to_string(record) + ": field '" + name + "' is not a string");
}

std::string id_field(const json& obj, std::size_t record) {
    if (obj.is_object() && obj.contains("_id")) return string_field(obj, "_id", record);
    return string_field(obj, "id", record);
}

// hotpotqa and 2wiki share the [[title, [sentence, ...]], ...] context layout.
QAItem wiki_item(const json& rec, std::size_t record) {
    QAItem item;
    item.id = id_field(rec, record);
    item.question = string_field(rec, "question", record);
    item.answers.push_back(string_field(rec, "answer", record));
    const json& context = field(rec, "context", record);
    if (!context.is_array())
        throw DatasetFormatError("record " + std::to_string(record) + ": field 'context' is not a list");
    for (const json& para : context) {
        if (!para.is_array() || para.size() != 2 || !para[0].is_string() || !para[1].is_array())
            throw DatasetFormatError("record " + std::to_string(record) +
                                     ": field 'context' entries must be [title, [sentences]]");
        std::string text;
        for (const json& sentence : para[1]) {
            const std::string raw = sentence.get<std::string>();
            const std::string_view s = trim(raw);
            if (s.empty()) continue;
            if (!text.empty()) text += ' ';
            text += s;
        }
        item.passages.push_back({item.id + "#" + std::to_string(item.passages.size()),
                                 para[0].get<std::string>(), std::move(text)});
    }
    return item;
}

QAItem musique_item(const json& rec, std::size_t record) {
    QAItem item;
    item.id = id_field(rec, record);
    item.question = string_field(rec, "question", record);
    item.answers.push_back(string_field(rec, "answer", record));
    if (rec.contains("answer_aliases")) {
        for (const json& alias : rec.at("answer_aliases")) {
            if (alias.is_string() &&
                std::find(item.answers.begin(), item.answers.end(), alias.get<std::string>()) == item.answers.end())
                item.answers.push_back(alias.get<std::string>());
        }
    }
    const json& paragraphs = field(rec, "paragraphs", record);
    if (!paragraphs.is_array())
        throw DatasetFormatError("record " + std::to_string(record) + ": field 'paragraphs' is not a list");
    for (const json& para : paragraphs) {
        item.passages.push_back({item.id + "#" + std::to_string(item.passages.size()),
                                 string_field(para, "title", record),
                                 string_field(para, "paragraph_text", record)});
    }
    return item;
}

std::vector<json> read_records(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const Error& e) {
        throw DatasetFormatError(e.what());
    }
    if (trim(text).empty()) throw DatasetFormatError(path.string() + ": empty dataset file");
    std::vector<json> records;
    if (trim(text).front() == '[') {
        try {
            for (auto& r : json::parse(text)) records.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw DatasetFormatError(path.string() + ": " + e.what());
        }
        return records;
    }
    std::size_t line_no = 0;
    for (std::string_view line : split_lines(text)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            records.push_back(json::parse(line));
        } catch (const json::exception& e) {
            throw DatasetFormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return records;
}

}  // namespace

std::vector<QAItem> load_dataset(DatasetKind kind, const std::filesystem::path& path) {
    const auto records = read_records(path);
    if (records.empty()) throw DatasetFormatError(path.string() + ": no records");
    std::vector<QAItem> items;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < records.size(); ++i) {
        QAItem item;
        try {
            item = kind == DatasetKind::MuSiQue ? musique_item(records[i], i) : wiki_item(records[i], i);
        } catch (const json::exception& e) {
            throw DatasetFormatError(path.string() + ": record " + std::to_string(i) + ": " + e.what());
        }
        if (!seen.insert(item.id).second)
            throw DatasetFormatError(path.string() + ": duplicate item id " + item.id);
        items.push_back(std::move(item));
    }
    return items;
}

std::vector<Passage> build_corpus(const std::vector<QAItem>& items) {
    std::vector<Passage> corpus;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& item : items) {
        for (const auto& p : item.passages) {
            if (trim(p.text).empty()) continue;
            if (seen.emplace(p.title, p.text).second) corpus.push_back(p);
        }
    }
    return corpus;
}

std::string_view to_string(EvalRow::Status status) {
    switch (status) {
        case EvalRow::Status::Ok: return "ok";
        case EvalRow::Status::Failed: return "failed";
        case EvalRow::Status::Missing: return "missing";
    }
    return "ok";
}

EvalSummary summarize(std::vector<EvalRow> rows) {
    EvalSummary s;
    s.count = rows.size();
    double em_sum = 0.0;
    double f1_sum = 0.0;
    for (const auto& r : rows) {
        em_sum += r.em;
        f1_sum += r.f1;
    }
    if (s.count > 0) {
        s.em = em_sum / static_cast<double>(s.count);
        s.f1 = f1_sum / static_cast<double>(s.count);
    }
    s.rows = std::move(rows);
    return s;
}

EvalSummary evaluate(const std::filesystem::path& trajectory_dir, const std::vector<QAItem>& items) {
    std::vector<EvalRow> rows;
    rows.reserve(items.size());
    for (const auto& item : items) {
        EvalRow row;
        row.id = item.id;
        const auto path = trajectory_dir / trajectory_file_name(item.question);
        if (!std::filesystem::is_regular_file(path)) {
            row.status = EvalRow::Status::Missing;
            rows.push_back(std::move(row));
            continue;
        }
        const Trajectory traj = read_trajectory(path);
        if (traj.final.kind == FinalState::Kind::Failed) {
            row.status = EvalRow::Status::Failed;
        } else {
            row.prediction = traj.prediction();
            row.em = exact_match(row.prediction, item.answers);
            row.f1 = f1(row.prediction, item.answers);
        }
        rows.push_back(std::move(row));
    }
    return summarize(std::move(rows));
}

std::string eval_summary_json(const EvalSummary& summary) {
    json rows = json::array();
    for (const auto& r : summary.rows) {
        rows.push_back({{"id", r.id},
                        {"em", r.em},
                        {"f1", r.f1},
                        {"prediction", r.prediction},
                        {"status", std::string(to_string(r.status))}});
    }
    const json doc = {{"count", summary.count}, {"em", summary.em}, {"f1", summary.f1}, {"rows", rows}};
    return doc.dump(2) + "\n";
}

namespace {

std::string csv_field(std::string_view v) {
    if (v.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(v);
    std::string out = "\"";
    for (char c : v) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace

std::string eval_rows_csv(const EvalSummary& summary) {
    std::string out = "id,em,f1,prediction\r\n";
    for (const auto& r : summary.rows) {
        std::ostringstream f1_text;
        f1_text.precision(17);
        f1_text << r.f1;
        out += csv_field(r.id) + "," + std::to_string(r.em) + "," + f1_text.str() + "," +
               csv_field(r.prediction) + "\r\n";
    }
    return out;
}

}  // namespace knowtrace
