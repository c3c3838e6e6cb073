#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ttr/corpus.hpp"
#include "ttr/retrieval.hpp"
#include "ttr/text_analysis.hpp"

namespace ttr {

enum class RetrievalSource { Sparse, Dense };

struct EvalConfig {
  std::vector<std::size_t> ks{10, 20, 100};
  std::optional<std::size_t> sample_n = 1000;
  std::uint64_t seed = 0;
  RetrievalSource metric_source = RetrievalSource::Sparse;

  /// ks non-empty, strictly ascending, all >= 1.
  void validate() const;
};

/// Uniform sample without replacement, returned in original order. An empty
/// `n` takes every query; n > queries.size() throws std::invalid_argument.
std::vector<QueryRecord> sample_queries(std::span<const QueryRecord> queries,
                                        std::optional<std::size_t> n, std::uint64_t seed);

/// Lowercases and collapses whitespace runs to one space, trimming the ends.
std::string normalize_answer_text(std::string_view s);

/// True iff some non-empty normalized answer is a substring of the
/// normalized text.
bool contains_answer(std::string_view text, std::span<const std::string> answers);

/// Answer-string protocol; std::invalid_argument for gold-id queries.
bool answer_match(const Document& doc, const QueryRecord& query);
/// Gold-id protocol; std::invalid_argument for answer-string queries.
bool gold_match(std::string_view doc_id, const QueryRecord& query);

struct QueryRun {
  std::string query_id;
  std::vector<RetrievalHit> hits;  // rank order
};

/// Run file JSONL: {"query_id": str, "hits": [{"doc_id": str, "score": float}]}.
void write_run(std::ostream& out, std::span<const QueryRun> runs);
std::vector<QueryRun> read_run(std::istream& in);
std::vector<QueryRun> read_run(const std::filesystem::path& path);

/// 1-based rank of the first correct hit within the top `depth`, if any.
/// Hits whose id is absent from the corpus never match under the
/// answer-string protocol; `unknown` counts them.
std::optional<std::size_t> first_correct_rank(std::span<const RetrievalHit> hits,
                                              const QueryRecord& query, const Corpus& corpus,
                                              std::size_t depth, std::size_t* unknown = nullptr);

inline constexpr std::string_view kAllDatasets = "all";

struct RecallRow {
  std::string dataset;
  std::size_t queries = 0;
  std::vector<std::size_t> correct;  // aligned with RecallTable::ks
  std::vector<double> recall;        // aligned with RecallTable::ks
};

struct RecallTable {
  std::vector<std::size_t> ks;
  std::vector<RecallRow> rows;  // datasets in enum order, then "all"
  std::size_t unknown_doc_hits = 0;

  const RecallRow* row(std::string_view dataset) const;
};

/// Queries without a run entry are scored as an empty hit list.
RecallTable recall_at_k(std::span<const QueryRun> runs, std::span<const QueryRecord> queries,
                        const Corpus& corpus, std::span<const std::size_t> ks);

nlohmann::json to_json(const RecallTable& table);
std::string format_recall_table(const RecallTable& table);

/// Lexical overlap of a question with its gold documents: the maximum
/// token_set_overlap over gold ids present in the corpus, or nullopt when
/// none is present.
std::optional<double> gold_overlap(const QueryRecord& query, const Corpus& corpus);

struct StratumRecall {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t queries = 0;
  std::size_t correct = 0;
  std::optional<double> recall;  // nullopt for an empty bin
};

struct StratifiedRecall {
  std::size_t k = 0;
  std::vector<StratumRecall> bins;
  OverlapReport overlaps;
  std::size_t skipped_no_gold = 0;
};

StratifiedRecall stratified_recall(std::span<const QueryRun> runs,
                                   std::span<const QueryRecord> queries, const Corpus& corpus,
                                   std::size_t k, std::span<const double> edges = kQuintileEdges);

nlohmann::json to_json(const StratifiedRecall& s);
/// Plot data: "lo\thi\tqueries\trecall" per bin, "null" for empty bins.
std::string to_tsv(const StratifiedRecall& s);

}  // namespace ttr
