#include "ttr/text_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <tuple>

#include "ttr/error.hpp"
#include "ttr/io.hpp"
#include "utf8.hpp"

namespace ttr {

namespace {

constexpr std::array<std::string_view, 33> kEnglishStopwords{
    "a",    "an",   "and",   "are",  "as",    "at",   "be",   "but",   "by",
    "for",  "if",   "in",    "into", "is",    "it",   "no",   "not",   "of",
    "on",   "or",   "such",  "that", "the",   "their", "then", "there", "these",
    "they", "this", "to",    "was",  "will",  "with"};

template <typename Fn>
void for_each_term(std::string_view text, Fn&& fn) {
  std::string current;
  for (std::size_t pos = 0; pos < text.size();) {
    const char32_t cp = utf8::next(text, pos);
    if (utf8::is_alnum(cp)) {
      utf8::append(current, utf8::to_lower(cp));
    } else if (!current.empty()) {
      fn(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) fn(std::move(current));
}

struct Match {
  std::size_t a = 0;
  std::size_t b = 0;
  std::size_t size = 0;
};

// Longest common substring of a[alo, ahi) and b[blo, bhi). Scanning in
// (i, j) order and replacing only on a strictly longer run keeps the match
// that ends (hence starts) earliest in a, then earliest in b.
Match longest_match(const std::u32string& a, std::size_t alo, std::size_t ahi,
                    const std::u32string& b, std::size_t blo, std::size_t bhi,
                    std::vector<std::size_t>& prev, std::vector<std::size_t>& cur) {
  Match best{alo, blo, 0};
  const std::size_t width = bhi - blo;
  std::fill(prev.begin(), prev.begin() + width + 1, 0);
  for (std::size_t i = alo; i < ahi; ++i) {
    cur[0] = 0;
    for (std::size_t j = blo; j < bhi; ++j) {
      const std::size_t col = j - blo + 1;
      if (a[i] == b[j]) {
        cur[col] = prev[col - 1] + 1;
        if (cur[col] > best.size) {
          best.size = cur[col];
          best.a = i + 1 - best.size;
          best.b = j + 1 - best.size;
        }
      } else {
        cur[col] = 0;
      }
    }
    std::swap(prev, cur);
  }
  return best;
}

std::size_t matched_characters(const std::u32string& a, const std::u32string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  std::size_t total = 0;
  std::vector<std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>> pending;
  pending.emplace_back(0, a.size(), 0, b.size());
  while (!pending.empty()) {
    auto [alo, ahi, blo, bhi] = pending.back();
    pending.pop_back();
    if (alo >= ahi || blo >= bhi) continue;
    const Match m = longest_match(a, alo, ahi, b, blo, bhi, prev, cur);
    if (m.size == 0) continue;
    total += m.size;
    pending.emplace_back(alo, m.a, blo, m.b);
    pending.emplace_back(m.a + m.size, ahi, m.b + m.size, bhi);
  }
  return total;
}

std::string join_sorted(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

std::string concat(const std::string& head, const std::string& tail) {
  if (head.empty()) return tail;
  if (tail.empty()) return head;
  return head + " " + tail;
}

}  // namespace

const StopwordList& StopwordList::english() {
  static const StopwordList list = [] {
    std::unordered_set<std::string> words;
    for (auto w : kEnglishStopwords) words.emplace(w);
    return StopwordList(std::move(words));
  }();
  return list;
}

StopwordList StopwordList::load(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t");
    for (auto& t : split_terms(std::string_view(line).substr(first, last - first + 1))) {
      words.insert(std::move(t));
    }
  }
  return StopwordList(std::move(words));
}

std::vector<std::string> split_terms(std::string_view text) {
  std::vector<std::string> out;
  for_each_term(text, [&](std::string&& t) { out.push_back(std::move(t)); });
  return out;
}

TokenSet tokenize(std::string_view text, const StopwordList& stopwords) {
  std::set<std::string> tokens;
  for_each_term(text, [&](std::string&& t) {
    if (!stopwords.contains(t)) tokens.insert(std::move(t));
  });
  return TokenSet(std::move(tokens));
}

TokenSet tokenize(std::string_view text, bool remove_stopwords) {
  static const StopwordList none;
  return tokenize(text, remove_stopwords ? StopwordList::english() : none);
}

double jaccard(const TokenSet& a, const TokenSet& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t common = 0;
  for (const auto& t : a) common += b.contains(t) ? 1 : 0;
  const std::size_t uni = a.size() + b.size() - common;
  return static_cast<double>(common) / static_cast<double>(uni);
}

double gestalt_ratio(std::string_view s1, std::string_view s2) {
  const auto a = utf8::decode(s1);
  const auto b = utf8::decode(s2);
  const std::size_t total = a.size() + b.size();
  if (total == 0) return 100.0;
  const std::size_t m = matched_characters(a, b);
  return 100.0 * 2.0 * static_cast<double>(m) / static_cast<double>(total);
}

double token_set_overlap(const TokenSet& question, const TokenSet& doc) {
  if (question.empty() || doc.empty()) return 0.0;
  std::vector<std::string> common, only_q, only_d;
  std::set_intersection(question.begin(), question.end(), doc.begin(), doc.end(),
                        std::back_inserter(common));
  std::set_difference(question.begin(), question.end(), doc.begin(), doc.end(),
                      std::back_inserter(only_q));
  std::set_difference(doc.begin(), doc.end(), question.begin(), question.end(),
                      std::back_inserter(only_d));

  const std::string t0 = join_sorted(common);
  const std::string t1 = concat(t0, join_sorted(only_q));
  const std::string t2 = concat(t0, join_sorted(only_d));
  return std::max({gestalt_ratio(t0, t1), gestalt_ratio(t0, t2), gestalt_ratio(t1, t2)});
}

double token_set_overlap(std::string_view question, std::string_view doc_text) {
  return token_set_overlap(tokenize(question, true), tokenize(doc_text, true));
}

void validate_edges(std::span<const double> edges) {
  if (edges.size() < 2) throw std::invalid_argument("need at least two bin edges");
  if (edges.front() != 0.0 || edges.back() != 100.0) {
    throw std::invalid_argument("bin edges must start at 0 and end at 100");
  }
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) {
      throw std::invalid_argument("bin edges must be strictly increasing");
    }
  }
}

std::size_t bin_index(double score, std::span<const double> edges) {
  if (!(score >= 0.0 && score <= 100.0)) {
    throw std::invalid_argument("overlap score outside [0, 100]: " + std::to_string(score));
  }
  // First edge strictly greater than score closes the bin; 100 lands in the last bin.
  auto it = std::upper_bound(edges.begin(), edges.end(), score);
  const auto idx = static_cast<std::size_t>(it - edges.begin());
  return std::min(idx, edges.size() - 1) - 1;
}

OverlapReport bucketize(std::span<const QueryOverlap> overlaps, std::span<const double> edges) {
  validate_edges(edges);
  OverlapReport report;
  report.per_query.assign(overlaps.begin(), overlaps.end());
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    report.bins.push_back({edges[i], edges[i + 1], 0});
  }
  for (const auto& q : overlaps) ++report.bins[bin_index(q.overlap, edges)].count;
  return report;
}

nlohmann::json to_json(const OverlapReport& report) {
  nlohmann::json per_query = nlohmann::json::array();
  for (const auto& q : report.per_query) per_query.push_back({{"id", q.id}, {"overlap", q.overlap}});
  nlohmann::json bins = nlohmann::json::array();
  for (const auto& b : report.bins) bins.push_back({{"lo", b.lo}, {"hi", b.hi}, {"count", b.count}});
  return {{"per_query", per_query}, {"bins", bins}};
}

}  // namespace ttr
