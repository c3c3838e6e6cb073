#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ttr/corpus.hpp"
#include "ttr/retrieval.hpp"

namespace ttr {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;

  /// Throws std::invalid_argument unless k1 > 0 and 0 <= b <= 1.
  void validate() const;
  bool operator==(const Bm25Params&) const = default;
};

struct Posting {
  std::uint32_t doc = 0;  // ordinal
  std::uint32_t tf = 0;

  bool operator==(const Posting&) const = default;
};

/// Immutable BM25 inverted index (Lucene idf variant) over linearized
/// documents. Terms come from split_terms(), so stopwords stay indexed.
///
/// Score of a document for a set of distinct query terms:
///   sum_t idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avgdl))
///   idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5))
/// Terms are summed in ascending byte order so that every code path that
/// scores the same document produces the same bits.
class Bm25Index {
 public:
  static Bm25Index build(std::span<const Document> corpus, Bm25Params params = {});
  static Bm25Index build(const Corpus& corpus, Bm25Params params = {}) {
    return build(corpus.documents(), params);
  }

  static Bm25Index read(std::istream& in);
  static Bm25Index load(const std::filesystem::path& path);
  void write(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;

  const Bm25Params& params() const noexcept { return params_; }
  std::size_t doc_count() const noexcept { return doc_ids_.size(); }
  std::size_t vocabulary_size() const noexcept { return terms_.size(); }
  double avgdl() const noexcept { return avgdl_; }
  std::uint32_t doc_length(std::uint32_t ordinal) const { return doc_lengths_.at(ordinal); }
  const std::string& doc_id(std::uint32_t ordinal) const { return doc_ids_.at(ordinal); }
  std::optional<std::uint32_t> ordinal(std::string_view doc_id) const;

  /// Empty span for unknown terms.
  std::span<const Posting> postings(std::string_view term) const;
  std::size_t document_frequency(std::string_view term) const { return postings(term).size(); }
  /// Lucene idf; only meaningful for indexed terms.
  double idf(std::size_t df) const;

  /// BM25 score of one document. Duplicate query terms count once; terms
  /// absent from the index contribute nothing.
  double score(std::span<const std::string> query_terms, std::uint32_t ordinal) const;

  /// Document-at-a-time top-k over documents matching at least one query
  /// term. Throws std::invalid_argument when k == 0.
  std::vector<RetrievalHit> search(std::string_view query, std::size_t k) const;
  std::vector<RetrievalHit> search_terms(std::span<const std::string> query_terms,
                                         std::size_t k) const;

 private:
  struct QueryTerm {
    double idf;
    std::span<const Posting> postings;
  };

  std::vector<QueryTerm> prepare(std::span<const std::string> query_terms) const;
  double term_weight(double idf, std::uint32_t tf, std::uint32_t dl) const;
  void index_terms();

  Bm25Params params_;
  std::vector<std::string> doc_ids_;
  std::vector<std::uint32_t> doc_lengths_;
  double avgdl_ = 0.0;
  std::vector<std::string> terms_;  // sorted
  std::vector<std::vector<Posting>> postings_;
  std::unordered_map<std::string, std::uint32_t> term_index_;
  std::unordered_map<std::string, std::uint32_t> doc_index_;
};

Bm25Index build_sparse(std::span<const Document> corpus, Bm25Params params = {});
double bm25_score(const Bm25Index& index, std::span<const std::string> query_tokens,
                  std::uint32_t doc_ordinal);
std::vector<RetrievalHit> sparse_search(const Bm25Index& index, std::string_view query,
                                        std::size_t k);

}  // namespace ttr
