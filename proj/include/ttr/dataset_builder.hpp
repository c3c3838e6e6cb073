#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ttr/corpus.hpp"
#include "ttr/error.hpp"
#include "ttr/sparse_index.hpp"

namespace ttr {

/// Mixed retrieval corpus: every required passage, a uniform sample of the
/// remaining passages up to `sample_size` passages in total, then all
/// tables. Passages keep their input order.
///
/// Throws DataError for a required id found in neither input and
/// std::invalid_argument when sample_size exceeds the passage count or is
/// smaller than the number of required passages.
std::vector<Document> build_mixed_corpus(std::span<const Passage> passages,
                                         std::span<const Table> tables, std::size_t sample_size,
                                         const std::set<std::string>& required_ids,
                                         std::uint64_t seed);

enum class ContextLabel { ContextIndependent, UnderSpecified };

std::unordered_map<std::string, ContextLabel> read_context_labels(std::istream& in);
std::unordered_map<std::string, ContextLabel> read_context_labels(
    const std::filesystem::path& path);

/// Keeps context-independent queries in their original order. A query
/// without a label raises DataError.
std::vector<QueryRecord> apply_context_filter(
    std::span<const QueryRecord> queries,
    const std::unordered_map<std::string, ContextLabel>& labels);
std::vector<QueryRecord> apply_context_filter(std::span<const QueryRecord> queries,
                                              const std::filesystem::path& labels);

class NoNegativeFound : public DataError {
 public:
  explicit NoNegativeFound(const std::string& query_id)
      : DataError("no hard negative found for query \"" + query_id + "\"") {}
};

inline constexpr std::size_t kDefaultMaxCandidates = 100;

/// Highest-ranked BM25 hit for the question that is not gold and contains
/// none of the answer strings. Any modality qualifies.
std::string mine_hard_negative(const QueryRecord& query, const Bm25Index& index,
                               const Corpus& corpus,
                               std::size_t max_candidates = kDefaultMaxCandidates);

struct TrainingSample {
  std::string query_id;
  std::string question;
  std::string positive_id;
  std::string hard_negative_id;
  Modality positive_modality = Modality::Text;
  Modality negative_modality = Modality::Text;
};

struct MiningResult {
  std::vector<TrainingSample> samples;  // input query order
  std::size_t no_negative = 0;
  std::size_t no_positive = 0;  // no gold id present in the corpus
};

/// Mines one hard negative per query. The positive is the first gold id (in
/// sorted order) present in the corpus. Queries without a positive or
/// without a qualifying negative are dropped and counted.
MiningResult build_training_samples(std::span<const QueryRecord> queries, const Bm25Index& index,
                                    const Corpus& corpus,
                                    std::size_t max_candidates = kDefaultMaxCandidates,
                                    unsigned threads = 1);

void write_training_samples(std::ostream& out, std::span<const TrainingSample> samples);

}  // namespace ttr
