#include "ttr/dense_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "ttr/error.hpp"
#include "ttr/io.hpp"
#include "ttr/text_analysis.hpp"

namespace ttr {

namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', '1'};
constexpr std::uint32_t kVersion = 1;

std::vector<RetrievalHit> scan_range(const EmbeddingMatrix& docs, std::span<const float> query,
                                     double query_norm, std::size_t begin, std::size_t end,
                                     std::size_t k, SimilarityMetric metric) {
  auto id_of = [&docs](std::size_t r) -> const std::string& { return docs.ids()[r]; };
  TopK<decltype(id_of)> top(k, id_of);
  for (std::size_t r = begin; r < end; ++r) {
    double s = dot(query, docs.row(r));
    if (metric == SimilarityMetric::Cosine) s /= query_norm * docs.norm(r);
    top.offer(s, r);
  }
  return top.take();
}

}  // namespace

std::string_view to_string(SimilarityMetric m) {
  return m == SimilarityMetric::Dot ? "dot" : "cosine";
}

std::optional<SimilarityMetric> parse_metric(std::string_view s) {
  if (s == "dot") return SimilarityMetric::Dot;
  if (s == "cosine") return SimilarityMetric::Cosine;
  return std::nullopt;
}

EmbeddingMatrix::EmbeddingMatrix(std::size_t dim, std::vector<std::string> ids,
                                 std::vector<float> values)
    : dim_(dim), ids_(std::move(ids)), values_(std::move(values)) {
  if (dim_ == 0) throw DataError("embedding dimension must be positive");
  if (values_.size() != ids_.size() * dim_) {
    throw DataError("embedding payload has " + std::to_string(values_.size()) +
                    " values, expected " + std::to_string(ids_.size() * dim_));
  }
  index_.reserve(ids_.size());
  norms_.reserve(ids_.size());
  for (std::size_t r = 0; r < ids_.size(); ++r) {
    if (!index_.emplace(ids_[r], r).second) {
      throw DataError("duplicate embedding id \"" + ids_[r] + "\"");
    }
    const auto v = row(r);
    if (!std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); })) {
      throw DataError("non-finite value in row " + std::to_string(r) + " (\"" + ids_[r] + "\")");
    }
    norms_.push_back(l2_norm(v));
  }
}

std::optional<std::size_t> EmbeddingMatrix::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void write_embeddings(const EmbeddingMatrix& m, std::ostream& out) {
  out.write(kMagic, sizeof kMagic);
  le::put_u32(out, kVersion);
  le::put_u32(out, static_cast<std::uint32_t>(m.dim()));
  le::put_u64(out, m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto& id = m.id(r);
    if (id.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw DataError("embedding id longer than 65535 bytes in row " + std::to_string(r));
    }
    le::put_u16(out, static_cast<std::uint16_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
    for (float x : m.row(r)) le::put_f32(out, x);
  }
}

void write_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path) {
  if (m.dim() > std::numeric_limits<std::uint32_t>::max()) {
    throw DataError("embedding dimension does not fit in u32");
  }
  AtomicFile file(path, true);
  write_embeddings(m, file.stream());
  file.commit();
}

EmbeddingMatrix read_embeddings(std::istream& in) {
  le::expect_magic(in, kMagic, "EMB1");
  const auto version = le::get_u32(in, "version");
  if (version != kVersion) {
    throw FormatError(FormatErrorKind::UnsupportedVersion,
                      "unsupported EMB1 version " + std::to_string(version));
  }
  const auto dim = le::get_u32(in, "dim");
  if (dim == 0) throw FormatError(FormatErrorKind::Corrupt, "EMB1 dim is zero");
  const auto count = le::get_u64(in, "count");

  std::vector<std::string> ids;
  std::vector<float> values;
  std::unordered_map<std::string, std::uint64_t> seen;
  for (std::uint64_t r = 0; r < count; ++r) {
    const auto len = le::get_u16(in, "id length");
    std::string id(len, '\0');
    le::get_bytes(in, id.data(), len, "id of row " + std::to_string(r));
    for (std::uint32_t d = 0; d < dim; ++d) {
      const float x = le::get_f32(in, "row " + std::to_string(r));
      if (!std::isfinite(x)) {
        throw FormatError(FormatErrorKind::NonFinite, "non-finite value in row " +
                                                          std::to_string(r) + " (\"" + id +
                                                          "\"), dimension " + std::to_string(d));
      }
      values.push_back(x);
    }
    if (!seen.emplace(id, r).second) {
      throw FormatError(FormatErrorKind::Corrupt, "duplicate id \"" + id + "\" in row " +
                                                      std::to_string(r));
    }
    ids.push_back(std::move(id));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError(FormatErrorKind::Corrupt, "trailing bytes after EMB1 records");
  }
  return EmbeddingMatrix(dim, std::move(ids), std::move(values));
}

EmbeddingMatrix read_embeddings(const std::filesystem::path& path) {
  auto in = open_input(path, true);
  return read_embeddings(in);
}

double dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return s;
}

double l2_norm(std::span<const float> v) { return std::sqrt(dot(v, v)); }

std::vector<RetrievalHit> dense_search(const EmbeddingMatrix& docs, std::span<const float> query,
                                       std::size_t k, SimilarityMetric metric,
                                       unsigned threads) {
  if (k == 0) throw std::invalid_argument("k must be >= 1");
  if (query.size() != docs.dim()) {
    throw std::invalid_argument("query dimension " + std::to_string(query.size()) +
                                " does not match index dimension " +
                                std::to_string(docs.dim()));
  }
  double query_norm = 1.0;
  if (metric == SimilarityMetric::Cosine) {
    query_norm = l2_norm(query);
    if (query_norm == 0.0) throw DataError("zero query vector under cosine similarity");
    for (std::size_t r = 0; r < docs.rows(); ++r) {
      if (docs.norm(r) == 0.0) {
        throw DataError("zero vector in row " + std::to_string(r) + " (\"" + docs.id(r) +
                        "\") under cosine similarity");
      }
    }
  }

  const std::size_t rows = docs.rows();
  threads = std::max(1u, threads);
  constexpr std::size_t kMinRowsPerThread = 4096;
  const std::size_t shards =
      std::min<std::size_t>(threads, std::max<std::size_t>(1, rows / kMinRowsPerThread));
  if (shards <= 1) return scan_range(docs, query, query_norm, 0, rows, k, metric);

  std::vector<std::vector<RetrievalHit>> partial(shards);
  {
    std::vector<std::jthread> workers;
    for (std::size_t s = 0; s < shards; ++s) {
      const std::size_t begin = rows * s / shards;
      const std::size_t end = rows * (s + 1) / shards;
      workers.emplace_back([&, s, begin, end] {
        partial[s] = scan_range(docs, query, query_norm, begin, end, k, metric);
      });
    }
  }
  std::vector<RetrievalHit> merged;
  for (auto& p : partial) std::move(p.begin(), p.end(), std::back_inserter(merged));
  std::sort(merged.begin(), merged.end(), [](const RetrievalHit& a, const RetrievalHit& b) {
    return ranks_before(a.score, a.doc_id, b.score, b.doc_id);
  });
  if (merged.size() > k) merged.resize(k);
  for (std::size_t i = 0; i < merged.size(); ++i) merged[i].rank = i + 1;
  return merged;
}

std::uint64_t seeded_hash64(std::string_view data, std::uint64_t seed) {
  constexpr std::uint64_t kOffset = 0xcbf29ce484222325ULL;
  constexpr std::uint64_t kPrime = 0x100000001b3ULL;
  std::uint64_t h = kOffset;
  for (int i = 0; i < 8; ++i) {
    h ^= (seed >> (8 * i)) & 0xFF;
    h *= kPrime;
  }
  for (unsigned char c : data) {
    h ^= c;
    h *= kPrime;
  }
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  h *= 0xc4ceb9fe1a85ec53ULL;
  h ^= h >> 33;
  return h;
}

std::vector<float> hash_embed(std::string_view text, std::size_t dim, std::uint64_t seed) {
  if (dim < 8) throw std::invalid_argument("hash_embed dimension must be >= 8");
  const TokenSet tokens = tokenize(text, false);
  if (tokens.empty()) throw DataError("cannot embed text without tokens");

  std::vector<double> acc(dim, 0.0);
  for (const auto& t : tokens) {
    const std::uint64_t h = seeded_hash64(t, seed);
    acc[h % dim] += (h >> 63) ? -1.0 : 1.0;
  }
  double sq = 0.0;
  for (double x : acc) sq += x * x;
  if (sq == 0.0) throw DataError("hashed features cancel to a zero vector");
  const double inv = 1.0 / std::sqrt(sq);

  std::vector<float> out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(acc[i] * inv);
  return out;
}

}  // namespace ttr
