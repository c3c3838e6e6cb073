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
#include <unordered_map>
#include <vector>

#include "ttr/retrieval.hpp"

namespace ttr {

enum class SimilarityMetric { Dot, Cosine };

std::string_view to_string(SimilarityMetric m);
std::optional<SimilarityMetric> parse_metric(std::string_view s);

/// Id-aligned row-major float32 vectors of one fixed dimension.
/// Construction validates: dim > 0, unique ids, values.size() == ids * dim,
/// all values finite (DataError otherwise).
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t dim, std::vector<std::string> ids, std::vector<float> values);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t rows() const noexcept { return ids_.size(); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const std::string& id(std::size_t row) const { return ids_.at(row); }
  std::span<const float> row(std::size_t r) const {
    return std::span<const float>(values_).subspan(r * dim_, dim_);
  }
  std::span<const float> values() const noexcept { return values_; }
  /// L2 norm of a row, computed once at construction.
  double norm(std::size_t r) const { return norms_.at(r); }
  std::optional<std::size_t> find(std::string_view id) const;

  bool operator==(const EmbeddingMatrix& o) const {
    return dim_ == o.dim_ && ids_ == o.ids_ && values_ == o.values_;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<float> values_;
  std::vector<double> norms_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// EMB1 container: "EMB1", u32 version (1), u32 dim, u64 count, then per
/// record u16 id byte length, id bytes, dim x f32. Little-endian, unpadded.
void write_embeddings(const EmbeddingMatrix& m, std::ostream& out);
void write_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path);
/// Throws FormatError with kind BadMagic, UnsupportedVersion, Truncated,
/// NonFinite (message names the row) or Corrupt.
EmbeddingMatrix read_embeddings(std::istream& in);
EmbeddingMatrix read_embeddings(const std::filesystem::path& path);

double dot(std::span<const float> a, std::span<const float> b);
double l2_norm(std::span<const float> v);

/// Exact top-k scan. Cosine divides the dot product by both L2 norms; a zero
/// query or zero row under Cosine raises DataError. `threads` > 1 splits the
/// scan over row ranges; results do not depend on the thread count.
std::vector<RetrievalHit> dense_search(const EmbeddingMatrix& docs, std::span<const float> query,
                                       std::size_t k,
                                       SimilarityMetric metric = SimilarityMetric::Dot,
                                       unsigned threads = 1);

/// FNV-1a over the 8 little-endian seed bytes followed by `data`, finished
/// with the murmur3 64-bit avalanche.
std::uint64_t seeded_hash64(std::string_view data, std::uint64_t seed);

/// Feature-hashing embedder: each distinct token (stopwords kept) adds +1 or
/// -1 at index hash % dim, sign from hash bit 63; the sum is L2-normalized.
/// Throws std::invalid_argument for dim < 8 and DataError when the text has
/// no tokens or the hashed features cancel to a zero vector.
std::vector<float> hash_embed(std::string_view text, std::size_t dim, std::uint64_t seed);

}  // namespace ttr
