#pragma once

// Reference implementations used only by tests. They are deliberately naive
// and share no code path with the library routines they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "ttr/dense_index.hpp"
#include "ttr/retrieval.hpp"
#include "ttr/text_analysis.hpp"

namespace ttr::oracle {

// --- Ratcliff-Obershelp -----------------------------------------------------

inline std::u32string to_u32(const std::string& s) {
  std::u32string out;
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    int len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : 4;
    char32_t cp = len == 1 ? c : len == 2 ? (c & 0x1F) : len == 3 ? (c & 0x0F) : (c & 0x07);
    for (int k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
    out.push_back(cp);
    i += len;
  }
  return out;
}

/// Enumerates every (i, j) start pair and extends; keeps the first maximum
/// in (i, j) order.
inline std::size_t matched(const std::u32string& a, std::size_t alo, std::size_t ahi,
                           const std::u32string& b, std::size_t blo, std::size_t bhi) {
  std::size_t best = 0, bi = alo, bj = blo;
  for (std::size_t i = alo; i < ahi; ++i) {
    for (std::size_t j = blo; j < bhi; ++j) {
      std::size_t k = 0;
      while (i + k < ahi && j + k < bhi && a[i + k] == b[j + k]) ++k;
      if (k > best) {
        best = k;
        bi = i;
        bj = j;
      }
    }
  }
  if (best == 0) return 0;
  return best + matched(a, alo, bi, b, blo, bj) + matched(a, bi + best, ahi, b, bj + best, bhi);
}

inline double gestalt(const std::string& s1, const std::string& s2) {
  const auto a = to_u32(s1);
  const auto b = to_u32(s2);
  if (a.empty() && b.empty()) return 100.0;
  return 200.0 * static_cast<double>(matched(a, 0, a.size(), b, 0, b.size())) /
         static_cast<double>(a.size() + b.size());
}

inline double token_set_ratio(const std::set<std::string>& q, const std::set<std::string>& d) {
  if (q.empty() || d.empty()) return 0.0;
  std::string t0, only_q, only_d;
  auto add = [](std::string& s, const std::string& t) { s += s.empty() ? t : " " + t; };
  for (const auto& t : q) add(d.count(t) ? t0 : only_q, t);
  for (const auto& t : d) {
    if (!q.count(t)) add(only_d, t);
  }
  std::string t1 = t0, t2 = t0;
  if (!only_q.empty()) add(t1, only_q);
  if (!only_d.empty()) add(t2, only_d);
  return std::max({gestalt(t0, t1), gestalt(t0, t2), gestalt(t1, t2)});
}

// --- BM25 -------------------------------------------------------------------

struct Bm25Doc {
  std::string id;
  std::vector<std::string> tokens;
};

/// Exhaustive Lucene-variant BM25 straight from token lists.
inline double bm25(const std::vector<Bm25Doc>& docs, std::vector<std::string> query,
                   std::size_t doc, double k1, double b) {
  std::sort(query.begin(), query.end());
  query.erase(std::unique(query.begin(), query.end()), query.end());
  double total_len = 0;
  for (const auto& d : docs) total_len += static_cast<double>(d.tokens.size());
  const double avgdl = total_len / static_cast<double>(docs.size());
  const double n = static_cast<double>(docs.size());
  double score = 0.0;
  for (const auto& t : query) {
    std::size_t df = 0;
    for (const auto& d : docs) df += std::count(d.tokens.begin(), d.tokens.end(), t) > 0;
    const auto tf = std::count(docs[doc].tokens.begin(), docs[doc].tokens.end(), t);
    if (tf == 0) continue;
    const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
    const double f = static_cast<double>(tf);
    const double norm = 1.0 - b + b * static_cast<double>(docs[doc].tokens.size()) / avgdl;
    score += idf * (f * (k1 + 1.0)) / (f + k1 * norm);
  }
  return score;
}

inline std::vector<RetrievalHit> bm25_rank(const std::vector<Bm25Doc>& docs,
                                           const std::vector<std::string>& query, double k1,
                                           double b, std::size_t k) {
  std::vector<RetrievalHit> all;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    bool any = false;
    for (const auto& t : query) {
      any = any || std::find(docs[i].tokens.begin(), docs[i].tokens.end(), t) != docs[i].tokens.end();
    }
    if (any) all.push_back({docs[i].id, bm25(docs, query, i, k1, b), 0});
  }
  std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) {
    return x.score != y.score ? x.score > y.score : x.doc_id < y.doc_id;
  });
  if (all.size() > k) all.resize(k);
  for (std::size_t i = 0; i < all.size(); ++i) all[i].rank = i + 1;
  return all;
}

// --- dense argsort ----------------------------------------------------------

inline std::vector<RetrievalHit> dense_rank(const EmbeddingMatrix& m, const std::vector<float>& q,
                                            std::size_t k, SimilarityMetric metric) {
  std::vector<double> scores(m.rows());
  double qn = 0;
  for (float x : q) qn += static_cast<double>(x) * x;
  qn = std::sqrt(qn);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double s = 0, rn = 0;
    const auto row = m.row(r);
    for (std::size_t i = 0; i < q.size(); ++i) {
      s += static_cast<double>(q[i]) * static_cast<double>(row[i]);
      rn += static_cast<double>(row[i]) * row[i];
    }
    scores[r] = metric == SimilarityMetric::Cosine ? s / (qn * std::sqrt(rn)) : s;
  }
  std::vector<std::size_t> order(m.rows());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return scores[x] != scores[y] ? scores[x] > scores[y] : m.id(x) < m.id(y);
  });
  std::vector<RetrievalHit> out;
  for (std::size_t i = 0; i < std::min(k, order.size()); ++i) {
    out.push_back({m.id(order[i]), scores[order[i]], i + 1});
  }
  return out;
}

}  // namespace ttr::oracle
