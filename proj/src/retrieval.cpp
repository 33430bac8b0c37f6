#include "knowtrace/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "httplib.h"
#include "json.hpp"

#include "http_util.hpp"
#include "knowtrace/errors.hpp"
#include "knowtrace/text_util.hpp"

namespace knowtrace {

using nlohmann::json;

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> terms;
    std::string current;
    for (char c : text) {
        if (is_ascii_alnum(c)) {
            current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!current.empty()) {
            terms.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) terms.push_back(std::move(current));
    return terms;
}

CorpusIndex CorpusIndex::build(std::vector<Passage> passages, Bm25Params params) {
    std::sort(passages.begin(), passages.end(),
              [](const Passage& a, const Passage& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < passages.size(); ++i) {
        if (i > 0 && passages[i].id == passages[i - 1].id)
            throw IngestError("duplicate passage id: " + passages[i].id);
        if (trim(passages[i].text).empty())
            throw IngestError("passage has empty text: " + passages[i].id);
    }

    CorpusIndex index;
    index.params_ = params;
    index.doc_lengths_.reserve(passages.size());
    double total = 0.0;
    for (std::size_t ord = 0; ord < passages.size(); ++ord) {
        const Passage& p = passages[ord];
        std::map<std::string, std::uint32_t> counts;
        std::uint32_t length = 0;
        for (const auto& field : {std::string_view(p.title), std::string_view(p.text)}) {
            for (auto& term : tokenize(field)) {
                ++counts[std::move(term)];
                ++length;
            }
        }
        for (auto& [term, tf] : counts) {
            index.postings_[term].push_back({static_cast<std::uint32_t>(ord), tf});
        }
        index.doc_lengths_.push_back(length);
        total += length;
    }
    index.avg_doc_length_ = passages.empty() ? 0.0 : total / static_cast<double>(passages.size());
    index.passages_ = std::move(passages);
    return index;
}

const std::vector<Posting>& CorpusIndex::postings(const std::string& term) const {
    static const std::vector<Posting> kEmpty;
    auto it = postings_.find(term);
    return it == postings_.end() ? kEmpty : it->second;
}

std::size_t CorpusIndex::document_frequency(const std::string& term) const {
    return postings(term).size();
}

std::uint32_t CorpusIndex::term_frequency(const std::string& term, std::size_t ordinal) const {
    const auto& list = postings(term);
    auto it = std::lower_bound(list.begin(), list.end(), ordinal,
                               [](const Posting& p, std::size_t ord) { return p.doc < ord; });
    if (it == list.end() || it->doc != ordinal) return 0;
    return it->tf;
}

double CorpusIndex::idf(const std::string& term) const {
    const double docs = static_cast<double>(passages_.size());
    const double df = static_cast<double>(document_frequency(term));
    return std::log((docs - df + 0.5) / (df + 0.5) + 1.0);
}

double CorpusIndex::term_weight(double idf, std::uint32_t tf, std::uint32_t doc_length) const {
    const double f = static_cast<double>(tf);
    const double norm = 1.0 - params_.b + params_.b * (static_cast<double>(doc_length) / avg_doc_length_);
    return idf * (f * (params_.k1 + 1.0)) / (f + params_.k1 * norm);
}

double CorpusIndex::bm25_score(const std::vector<std::string>& query_terms,
                               std::size_t ordinal) const {
    double score = 0.0;
    for (const auto& term : query_terms) {
        const std::uint32_t tf = term_frequency(term, ordinal);
        if (tf == 0) continue;
        score += term_weight(idf(term), tf, doc_lengths_[ordinal]);
    }
    return score;
}

double CorpusIndex::bm25_score(const std::vector<std::string>& query_terms,
                               std::string_view id) const {
    auto it = std::lower_bound(passages_.begin(), passages_.end(), id,
                               [](const Passage& p, std::string_view v) { return p.id < v; });
    if (it == passages_.end() || it->id != id) return 0.0;
    return bm25_score(query_terms, static_cast<std::size_t>(it - passages_.begin()));
}

std::vector<ScoredPassage> Bm25Retriever::search(std::string_view query, std::size_t n) const {
    const std::vector<std::string> terms = tokenize(query);
    std::set<std::size_t> candidates;
    for (const auto& term : terms) {
        for (const Posting& p : index_.postings(term)) candidates.insert(p.doc);
    }
    std::vector<ScoredPassage> hits;
    hits.reserve(candidates.size());
    for (std::size_t ord : candidates) {
        const double s = index_.bm25_score(terms, ord);
        if (s > 0.0) hits.push_back({ord, s});
    }
    // Ordinal order is id order, so the tie rule is "smaller ordinal first".
    std::sort(hits.begin(), hits.end(), [](const ScoredPassage& a, const ScoredPassage& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.ordinal < b.ordinal;
    });
    if (hits.size() > n) hits.resize(n);
    return hits;
}

std::vector<Passage> Bm25Retriever::retrieve(std::string_view query, std::size_t n) const {
    std::vector<Passage> out;
    for (const auto& hit : search(query, n)) out.push_back(index_.passages()[hit.ordinal]);
    return out;
}

RemoteRetriever::RemoteRetriever(std::string url, int timeout_seconds)
    : url_(std::move(url)), timeout_seconds_(timeout_seconds) {
    detail::split_url(url_);
}

std::vector<Passage> RemoteRetriever::retrieve(std::string_view query, std::size_t n) const {
    const auto target = detail::split_url(url_);
    httplib::Client client(target.scheme_host_port);
    client.set_connection_timeout(timeout_seconds_);
    client.set_read_timeout(timeout_seconds_);

    const json body = {{"query", std::string(query)}, {"n", n}};
    auto res = client.Post(target.path, body.dump(), "application/json");
    if (!res) throw TransportError("retriever request failed: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw TransportError("retriever returned HTTP " + std::to_string(res->status));

    std::vector<Passage> out;
    try {
        const json reply = json::parse(res->body);
        for (const auto& p : reply.at("passages")) {
            out.push_back({p.at("id").get<std::string>(), p.value("title", std::string()),
                           p.at("text").get<std::string>()});
        }
    } catch (const json::exception& e) {
        throw TransportError(std::string("malformed retriever reply: ") + e.what());
    }
    if (out.size() > n) out.resize(n);
    return out;
}

std::string form_query(std::string_view entity, std::string_view relation_hint) {
    std::string query(trim(entity));
    query += ' ';
    query += trim(relation_hint);
    return std::string(trim(query));
}

std::vector<Passage> load_corpus(const std::filesystem::path& path) {
    const std::string contents = read_file(path);
    std::vector<Passage> passages;
    std::size_t line_no = 0;
    for (std::string_view line : split_lines(contents)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            const json rec = json::parse(line);
            passages.push_back({rec.at("id").get<std::string>(), rec.value("title", std::string()),
                                rec.at("text").get<std::string>()});
        } catch (const json::exception& e) {
            throw IngestError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return passages;
}

std::string serialize_corpus(const std::vector<Passage>& passages) {
    std::string out;
    for (const Passage& p : passages) {
        out += json{{"id", p.id}, {"title", p.title}, {"text", p.text}}.dump();
        out += '\n';
    }
    return out;
}

void write_corpus(const std::filesystem::path& path, const std::vector<Passage>& passages) {
    write_file(path, serialize_corpus(passages));
}

}  // namespace knowtrace
