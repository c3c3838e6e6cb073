#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

namespace ttr {

/// A fixed stopword list. The built-in English list is the 33-word Lucene
/// core, identical to data/stopwords.txt.
class StopwordList {
 public:
  StopwordList() = default;
  explicit StopwordList(std::unordered_set<std::string> words) : words_(std::move(words)) {}

  static const StopwordList& english();
  /// One token per line; blank lines and lines starting with '#' are ignored.
  static StopwordList load(const std::filesystem::path& path);

  bool contains(std::string_view token) const { return words_.contains(std::string(token)); }
  std::size_t size() const noexcept { return words_.size(); }
  const std::unordered_set<std::string>& words() const noexcept { return words_; }

 private:
  std::unordered_set<std::string> words_;
};

/// Deduplicated lowercase tokens, iterated in byte (= code point) order.
class TokenSet {
 public:
  TokenSet() = default;
  explicit TokenSet(std::set<std::string> tokens) : tokens_(std::move(tokens)) {}

  const std::set<std::string>& tokens() const noexcept { return tokens_; }
  std::size_t size() const noexcept { return tokens_.size(); }
  bool empty() const noexcept { return tokens_.empty(); }
  bool contains(std::string_view t) const { return tokens_.contains(std::string(t)); }
  auto begin() const { return tokens_.begin(); }
  auto end() const { return tokens_.end(); }

  bool operator==(const TokenSet&) const = default;

 private:
  std::set<std::string> tokens_;
};

/// Lowercased tokens in text order, duplicates kept. Tokens are maximal runs
/// of alphanumeric code points; everything else separates. This is the
/// analyzer used for indexing.
std::vector<std::string> split_terms(std::string_view text);

TokenSet tokenize(std::string_view text, bool remove_stopwords);
TokenSet tokenize(std::string_view text, const StopwordList& stopwords);

/// |a ∩ b| / |a ∪ b|; 1.0 when both are empty.
double jaccard(const TokenSet& a, const TokenSet& b);

/// Ratcliff-Obershelp similarity on code points, scaled to [0, 100]:
/// 100 * 2M / (|s1| + |s2|), where M is the number of characters matched by
/// recursively taking the longest common substring and recursing on both
/// sides. Ties between equally long substrings go to the one that starts
/// first in s1, then first in s2. Returns 100 when both strings are empty.
double gestalt_ratio(std::string_view s1, std::string_view s2);

/// Token-set ratio of stopword-filtered token sets, in [0, 100]. Returns 0
/// when either side has no tokens.
double token_set_overlap(std::string_view question, std::string_view doc_text);
double token_set_overlap(const TokenSet& question, const TokenSet& doc);

struct QueryOverlap {
  std::string id;
  double overlap = 0.0;
};

struct OverlapBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
};

struct OverlapReport {
  std::vector<QueryOverlap> per_query;
  std::vector<OverlapBin> bins;
};

inline constexpr std::array<double, 6> kQuintileEdges{0.0, 20.0, 40.0, 60.0, 80.0, 100.0};

/// Throws std::invalid_argument unless edges are strictly increasing from 0
/// to 100 with at least two entries.
void validate_edges(std::span<const double> edges);

/// Bin [lo, hi) for every bin but the last, which is [lo, 100].
std::size_t bin_index(double score, std::span<const double> edges);

OverlapReport bucketize(std::span<const QueryOverlap> overlaps,
                        std::span<const double> edges = kQuintileEdges);

nlohmann::json to_json(const OverlapReport& report);

}  // namespace ttr
