#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "oracles/oracles.hpp"
#include "ttr/dense_index.hpp"
#include "ttr/error.hpp"

using namespace ttr;

namespace {

EmbeddingMatrix random_matrix(std::size_t rows, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0.0f, 1.0f);
  std::vector<std::string> ids;
  std::vector<float> values;
  for (std::size_t r = 0; r < rows; ++r) {
    ids.push_back("doc" + std::to_string(r));
    for (std::size_t d = 0; d < dim; ++d) values.push_back(g(rng));
  }
  return EmbeddingMatrix(dim, std::move(ids), std::move(values));
}

std::string serialize(const EmbeddingMatrix& m) {
  std::ostringstream out(std::ios::binary);
  write_embeddings(m, out);
  return out.str();
}

double cosine(const std::vector<float>& a, const std::vector<float>& b) {
  return dot(a, b) / (l2_norm(a) * l2_norm(b));
}

}  // namespace

TEST(EmbeddingMatrix, ValidatesInvariants) {
  EXPECT_THROW(EmbeddingMatrix(0, {}, {}), DataError);
  EXPECT_THROW(EmbeddingMatrix(2, {"a"}, {1.0f}), DataError);
  EXPECT_THROW(EmbeddingMatrix(1, {"a", "a"}, {1.0f, 2.0f}), DataError);
  EXPECT_THROW(EmbeddingMatrix(1, {"a"}, {std::numeric_limits<float>::infinity()}), DataError);
}

TEST(Emb1, RoundTripBitIdentical) {
  const auto m = random_matrix(3, 4, 1);
  const auto bytes = serialize(m);
  EXPECT_EQ(bytes.size(), 4 + 4 + 4 + 8 + 3 * (2 + 4 + 4 * 4));
  std::istringstream in(bytes, std::ios::binary);
  const auto back = read_embeddings(in);
  EXPECT_EQ(back.ids(), m.ids());
  EXPECT_EQ(std::memcmp(back.values().data(), m.values().data(), m.values().size() * 4), 0);
  EXPECT_EQ(serialize(back), bytes);
}

TEST(Emb1, HeaderLayout) {
  const EmbeddingMatrix m(2, {"ab"}, {1.0f, -2.0f});
  const auto bytes = serialize(m);
  const std::string expected_prefix("EMB1\x01\x00\x00\x00\x02\x00\x00\x00\x01\x00\x00\x00\x00\x00\x00\x00\x02\x00"
                                    "ab",
                                    24);
  EXPECT_EQ(bytes.substr(0, 24), expected_prefix);
  // 1.0f = 0x3F800000 little-endian.
  EXPECT_EQ(bytes.substr(24, 4), std::string("\x00\x00\x80\x3F", 4));
}

TEST(Emb1, BadMagic) {
  auto bytes = serialize(random_matrix(2, 3, 2));
  bytes[3] = '2';
  std::istringstream in(bytes, std::ios::binary);
  try {
    read_embeddings(in);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.kind(), FormatErrorKind::BadMagic);
    EXPECT_NE(std::string(e.what()).find("bad magic"), std::string::npos);
  }
}

TEST(Emb1, Truncated) {
  const auto bytes = serialize(random_matrix(2, 3, 3));
  for (std::size_t cut : {std::size_t{10}, std::size_t{21}, bytes.size() - 1}) {
    std::istringstream in(bytes.substr(0, cut), std::ios::binary);
    try {
      read_embeddings(in);
      FAIL() << cut;
    } catch (const FormatError& e) {
      EXPECT_EQ(e.kind(), FormatErrorKind::Truncated);
    }
  }
}

TEST(Emb1, NonFiniteNamesRow) {
  auto bytes = serialize(EmbeddingMatrix(2, {"a", "b"}, {1, 2, 3, 4}));
  // Row 1 starts after header (20) + row 0 (2 + 1 + 8); its floats follow 2 + 1 id bytes.
  const std::size_t offset = 20 + 11 + 3;
  const float nan = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(bytes.data() + offset, &nan, 4);
  std::istringstream in(bytes, std::ios::binary);
  try {
    read_embeddings(in);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.kind(), FormatErrorKind::NonFinite);
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos) << e.what();
  }
}

TEST(DenseSearch, SelfQueryRanksFirst) {
  auto m = random_matrix(50, 16, 4);
  std::vector<std::string> ids = m.ids();
  std::vector<float> unit;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double n = m.norm(r);
    for (float x : m.row(r)) unit.push_back(static_cast<float>(x / n));
  }
  const EmbeddingMatrix normed(16, ids, unit);
  for (std::size_t r : {0u, 17u, 49u}) {
    const auto q = normed.row(r);
    const auto hits = dense_search(normed, q, 1, SimilarityMetric::Dot);
    ASSERT_EQ(hits.size(), 1u);
    EXPECT_EQ(hits[0].doc_id, normed.id(r));
  }
}

TEST(DenseSearch, CosineScaleInvariant) {
  const auto m = random_matrix(100, 8, 5);
  std::vector<float> q(8, 0.3f);
  q[2] = -1.0f;
  auto scaled = q;
  for (auto& x : scaled) x *= 7.0f;
  const auto a = dense_search(m, q, 20, SimilarityMetric::Cosine);
  const auto b = dense_search(m, scaled, 20, SimilarityMetric::Cosine);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].doc_id, b[i].doc_id);
}

TEST(DenseSearch, MatchesArgsortOracle) {
  const auto m = random_matrix(100, 12, 6);
  std::mt19937_64 rng(9);
  std::normal_distribution<float> g;
  std::vector<float> q(12);
  for (auto& x : q) x = g(rng);
  for (auto metric : {SimilarityMetric::Dot, SimilarityMetric::Cosine}) {
    EXPECT_EQ(dense_search(m, q, 10, metric), oracle::dense_rank(m, q, 10, metric));
  }
}

TEST(DenseSearch, FullKIsPermutationAndThreadInvariant) {
  const auto m = random_matrix(10000, 8, 7);
  std::vector<float> q(8, 1.0f);
  const auto one = dense_search(m, q, m.rows(), SimilarityMetric::Dot, 1);
  const auto many = dense_search(m, q, m.rows(), SimilarityMetric::Dot, 4);
  EXPECT_EQ(one, many);
  std::set<std::string> ids;
  for (const auto& h : one) ids.insert(h.doc_id);
  EXPECT_EQ(ids.size(), m.rows());
}

TEST(DenseSearch, ZeroPaddingKeepsDotRanking) {
  const auto m = random_matrix(60, 6, 8);
  std::vector<float> padded;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (float x : m.row(r)) padded.push_back(x);
    padded.insert(padded.end(), 3, 0.0f);
  }
  const EmbeddingMatrix p(9, m.ids(), padded);
  std::vector<float> q{0.1f, -0.4f, 2.0f, 0.7f, 0.0f, 1.5f};
  auto qp = q;
  qp.insert(qp.end(), 3, 0.0f);
  EXPECT_EQ(dense_search(m, q, 60), dense_search(p, qp, 60));
}

TEST(DenseSearch, Errors) {
  const auto m = random_matrix(5, 4, 9);
  std::vector<float> q(3, 1.0f);
  EXPECT_THROW(dense_search(m, q, 1), std::invalid_argument);
  std::vector<float> zero(4, 0.0f);
  EXPECT_THROW(dense_search(m, zero, 1, SimilarityMetric::Cosine), DataError);
  EXPECT_NO_THROW(dense_search(m, zero, 1, SimilarityMetric::Dot));
  const EmbeddingMatrix with_zero(2, {"a", "b"}, {0, 0, 1, 1});
  std::vector<float> q2{1.0f, 0.0f};
  EXPECT_THROW(dense_search(with_zero, q2, 1, SimilarityMetric::Cosine), DataError);
  EXPECT_THROW(dense_search(m, std::vector<float>(4, 1.0f), 0), std::invalid_argument);
}

TEST(HashEmbed, DeterministicBagOfWordsUnitNorm) {
  const auto a = hash_embed("the red fox jumps", 64, 3);
  EXPECT_EQ(a, hash_embed("the red fox jumps", 64, 3));
  EXPECT_EQ(a, hash_embed("jumps fox RED the", 64, 3));
  EXPECT_NEAR(l2_norm(a), 1.0, 1e-6);
  EXPECT_NE(a, hash_embed("the red fox jumps", 64, 4));
}

TEST(HashEmbed, Errors) {
  EXPECT_THROW(hash_embed("x", 4, 0), std::invalid_argument);
  EXPECT_THROW(hash_embed("  ,, ", 64, 0), DataError);
}

TEST(HashEmbed, PinnedHashValues) {
  // Values from an independent Python implementation of the same hash.
  EXPECT_EQ(seeded_hash64("", 0), 0x7bd3144f29c0cc9eULL);
  EXPECT_EQ(seeded_hash64("table", 42), 0xa9053c6e88001234ULL);
}

TEST(HashEmbed, DisjointVocabulariesNearlyOrthogonal) {
  // Disjoint token sets collide rarely at dim 1024.
  const std::pair<const char*, const char*> pairs[] = {
      {"alpha beta gamma delta epsilon", "river mountain forest valley lake"},
      {"football world cup final goal", "piano violin orchestra symphony"},
      {"population census city county", "protein enzyme molecule cell"},
  };
  for (auto [x, y] : pairs) {
    const double c = cosine(hash_embed(x, 1024, 0), hash_embed(y, 1024, 0));
    EXPECT_LT(std::abs(c), 0.2) << x << " / " << y;
  }
}
