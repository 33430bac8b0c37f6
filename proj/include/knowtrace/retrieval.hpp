#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace knowtrace {

struct Passage {
    std::string id;
    std::string title;
    std::string text;

    friend bool operator==(const Passage&, const Passage&) = default;
};

/// Lowercase ASCII terms separated by any non-alphanumeric byte.
std::vector<std::string> tokenize(std::string_view text);

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

struct Posting {
    std::uint32_t doc = 0;  // ordinal into CorpusIndex::passages()
    std::uint32_t tf = 0;
};

/// Immutable in-memory inverted index over title + text. Passages are held
/// sorted by id, so ordinal order is id order.
class CorpusIndex {
  public:
    CorpusIndex() = default;

    /// Throws IngestError on duplicate ids or empty text.
    static CorpusIndex build(std::vector<Passage> passages, Bm25Params params = {});

    const std::vector<Passage>& passages() const noexcept { return passages_; }
    const std::vector<std::uint32_t>& doc_lengths() const noexcept { return doc_lengths_; }
    double avg_doc_length() const noexcept { return avg_doc_length_; }
    const Bm25Params& params() const noexcept { return params_; }
    std::size_t size() const noexcept { return passages_.size(); }

    /// Postings sorted by ordinal; empty for unknown terms.
    const std::vector<Posting>& postings(const std::string& term) const;
    std::size_t document_frequency(const std::string& term) const;
    std::uint32_t term_frequency(const std::string& term, std::size_t ordinal) const;

    double idf(const std::string& term) const;

    /// Okapi BM25 of one passage (by ordinal) for a tokenized query.
    double bm25_score(const std::vector<std::string>& query_terms, std::size_t ordinal) const;

    /// BM25 of the passage with the given id; 0 if the id is unknown.
    double bm25_score(const std::vector<std::string>& query_terms, std::string_view id) const;

  private:
    double term_weight(double idf, std::uint32_t tf, std::uint32_t doc_length) const;

    std::vector<Passage> passages_;
    std::vector<std::uint32_t> doc_lengths_;
    double avg_doc_length_ = 0.0;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
    Bm25Params params_;

    friend class Bm25Retriever;
};

struct ScoredPassage {
    std::size_t ordinal = 0;
    double score = 0.0;
};

/// Anything that turns a query into ranked passages.
class Retriever {
  public:
    virtual ~Retriever() = default;
    /// At most n passages, deterministic for a fixed corpus.
    virtual std::vector<Passage> retrieve(std::string_view query, std::size_t n) const = 0;
};

class Bm25Retriever final : public Retriever {
  public:
    explicit Bm25Retriever(CorpusIndex index) : index_(std::move(index)) {}

    /// Descending score, ties by ascending id, zero scores excluded.
    std::vector<ScoredPassage> search(std::string_view query, std::size_t n) const;
    std::vector<Passage> retrieve(std::string_view query, std::size_t n) const override;

    const CorpusIndex& index() const noexcept { return index_; }

  private:
    CorpusIndex index_;
};

/// POSTs {"query", "n"} to a URL and reads {"passages": [{id, title, text}]}.
class RemoteRetriever final : public Retriever {
  public:
    explicit RemoteRetriever(std::string url, int timeout_seconds = 60);
    std::vector<Passage> retrieve(std::string_view query, std::size_t n) const override;

  private:
    std::string url_;
    int timeout_seconds_;
};

/// Entity text, one space, relation hint; trimmed.
std::string form_query(std::string_view entity, std::string_view relation_hint);

/// Line-delimited JSON {"id","title","text"}. Blank lines are ignored.
std::vector<Passage> load_corpus(const std::filesystem::path& path);
std::string serialize_corpus(const std::vector<Passage>& passages);
void write_corpus(const std::filesystem::path& path, const std::vector<Passage>& passages);

}  // namespace knowtrace
