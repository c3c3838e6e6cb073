#include "ttr/sparse_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ttr/error.hpp"
#include "ttr/io.hpp"
#include "ttr/text_analysis.hpp"

namespace ttr {

namespace {

constexpr char kMagic[4] = {'B', 'M', 'I', '1'};
constexpr std::uint32_t kVersion = 1;

std::vector<std::string> distinct_sorted(std::span<const std::string> terms) {
  std::vector<std::string> out(terms.begin(), terms.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void put_string(std::ostream& out, const std::string& s) {
  le::put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in, std::string_view what) {
  const auto len = le::get_u32(in, what);
  std::string s;
  // Grow in bounded steps so a corrupt length cannot force a huge allocation.
  constexpr std::size_t kChunk = 1 << 16;
  std::size_t remaining = len;
  while (remaining > 0) {
    const std::size_t n = std::min(remaining, kChunk);
    const std::size_t old = s.size();
    s.resize(old + n);
    le::get_bytes(in, s.data() + old, n, what);
    remaining -= n;
  }
  return s;
}

[[noreturn]] void corrupt(const std::string& what) {
  throw FormatError(FormatErrorKind::Corrupt, "corrupt BMI1 index: " + what);
}

}  // namespace

void Bm25Params::validate() const {
  if (!(k1 > 0.0) || !std::isfinite(k1)) throw std::invalid_argument("BM25 k1 must be > 0");
  if (!(b >= 0.0 && b <= 1.0)) throw std::invalid_argument("BM25 b must be in [0, 1]");
}

Bm25Index Bm25Index::build(std::span<const Document> corpus, Bm25Params params) {
  params.validate();
  if (corpus.empty()) throw std::invalid_argument("cannot build a BM25 index over an empty corpus");
  if (corpus.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw std::invalid_argument("corpus too large for 32-bit ordinals");
  }

  Bm25Index index;
  index.params_ = params;
  index.doc_ids_.reserve(corpus.size());
  index.doc_lengths_.reserve(corpus.size());

  std::unordered_map<std::string, std::vector<Posting>> postings;
  std::unordered_map<std::string, std::uint32_t> tf;
  double total_length = 0.0;
  for (std::size_t ord = 0; ord < corpus.size(); ++ord) {
    const auto& doc = corpus[ord];
    if (!index.doc_index_.emplace(doc.id(), static_cast<std::uint32_t>(ord)).second) {
      throw DataError("duplicate document id \"" + doc.id() + "\"");
    }
    index.doc_ids_.push_back(doc.id());

    tf.clear();
    const auto terms = split_terms(doc.linearized());
    for (const auto& t : terms) ++tf[t];
    index.doc_lengths_.push_back(static_cast<std::uint32_t>(terms.size()));
    total_length += static_cast<double>(terms.size());
    for (const auto& [term, count] : tf) {
      postings[term].push_back({static_cast<std::uint32_t>(ord), count});
    }
  }
  index.avgdl_ = total_length / static_cast<double>(corpus.size());

  index.terms_.reserve(postings.size());
  for (const auto& entry : postings) index.terms_.push_back(entry.first);
  std::sort(index.terms_.begin(), index.terms_.end());
  index.postings_.reserve(index.terms_.size());
  for (const auto& term : index.terms_) index.postings_.push_back(std::move(postings[term]));
  index.index_terms();
  return index;
}

void Bm25Index::index_terms() {
  term_index_.clear();
  term_index_.reserve(terms_.size());
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    term_index_.emplace(terms_[i], static_cast<std::uint32_t>(i));
  }
}

std::optional<std::uint32_t> Bm25Index::ordinal(std::string_view doc_id) const {
  auto it = doc_index_.find(std::string(doc_id));
  if (it == doc_index_.end()) return std::nullopt;
  return it->second;
}

std::span<const Posting> Bm25Index::postings(std::string_view term) const {
  auto it = term_index_.find(std::string(term));
  if (it == term_index_.end()) return {};
  return postings_[it->second];
}

double Bm25Index::idf(std::size_t df) const {
  const double n = static_cast<double>(doc_count());
  const double d = static_cast<double>(df);
  return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

double Bm25Index::term_weight(double term_idf, std::uint32_t tf, std::uint32_t dl) const {
  const double f = static_cast<double>(tf);
  const double norm = 1.0 - params_.b + params_.b * static_cast<double>(dl) / avgdl_;
  return term_idf * (f * (params_.k1 + 1.0)) / (f + params_.k1 * norm);
}

std::vector<Bm25Index::QueryTerm> Bm25Index::prepare(
    std::span<const std::string> query_terms) const {
  std::vector<QueryTerm> out;
  for (const auto& term : distinct_sorted(query_terms)) {
    auto plist = postings(term);
    if (plist.empty()) continue;
    out.push_back({idf(plist.size()), plist});
  }
  return out;
}

double Bm25Index::score(std::span<const std::string> query_terms, std::uint32_t ordinal) const {
  if (ordinal >= doc_count()) throw std::out_of_range("document ordinal out of range");
  const std::uint32_t dl = doc_lengths_[ordinal];
  double total = 0.0;
  for (const auto& qt : prepare(query_terms)) {
    auto it = std::lower_bound(qt.postings.begin(), qt.postings.end(), ordinal,
                               [](const Posting& p, std::uint32_t o) { return p.doc < o; });
    if (it != qt.postings.end() && it->doc == ordinal) total += term_weight(qt.idf, it->tf, dl);
  }
  return total;
}

std::vector<RetrievalHit> Bm25Index::search(std::string_view query, std::size_t k) const {
  const auto terms = split_terms(query);
  return search_terms(terms, k);
}

std::vector<RetrievalHit> Bm25Index::search_terms(std::span<const std::string> query_terms,
                                                  std::size_t k) const {
  if (k == 0) throw std::invalid_argument("k must be >= 1");
  const auto terms = prepare(query_terms);
  std::vector<std::size_t> cursor(terms.size(), 0);

  auto id_of = [this](std::size_t ord) -> const std::string& { return doc_ids_[ord]; };
  TopK<decltype(id_of)> top(k, id_of);

  constexpr auto kDone = std::numeric_limits<std::uint32_t>::max();
  while (true) {
    std::uint32_t doc = kDone;
    for (std::size_t t = 0; t < terms.size(); ++t) {
      if (cursor[t] < terms[t].postings.size()) {
        doc = std::min(doc, terms[t].postings[cursor[t]].doc);
      }
    }
    if (doc == kDone) break;

    const std::uint32_t dl = doc_lengths_[doc];
    double total = 0.0;
    for (std::size_t t = 0; t < terms.size(); ++t) {
      if (cursor[t] < terms[t].postings.size() && terms[t].postings[cursor[t]].doc == doc) {
        total += term_weight(terms[t].idf, terms[t].postings[cursor[t]].tf, dl);
        ++cursor[t];
      }
    }
    top.offer(total, doc);
  }
  return top.take();
}

// Layout (all integers little-endian):
//   "BMI1" u32 version
//   f64 k1, f64 b
//   u64 N, then N x (u32 len, id bytes), then N x u32 doc length
//   u64 T, then T x (u32 len, term bytes, u32 df, df x (u32 ordinal, u32 tf))
// Terms are stored in ascending byte order; avgdl is recomputed on load.
void Bm25Index::write(std::ostream& out) const {
  out.write(kMagic, sizeof kMagic);
  le::put_u32(out, kVersion);
  le::put_f64(out, params_.k1);
  le::put_f64(out, params_.b);
  le::put_u64(out, doc_ids_.size());
  for (const auto& id : doc_ids_) put_string(out, id);
  for (auto dl : doc_lengths_) le::put_u32(out, dl);
  le::put_u64(out, terms_.size());
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    put_string(out, terms_[i]);
    le::put_u32(out, static_cast<std::uint32_t>(postings_[i].size()));
    for (const auto& p : postings_[i]) {
      le::put_u32(out, p.doc);
      le::put_u32(out, p.tf);
    }
  }
}

void Bm25Index::save(const std::filesystem::path& path) const {
  AtomicFile file(path, true);
  write(file.stream());
  file.commit();
}

Bm25Index Bm25Index::read(std::istream& in) {
  le::expect_magic(in, kMagic, "BMI1");
  const auto version = le::get_u32(in, "version");
  if (version != kVersion) {
    throw FormatError(FormatErrorKind::UnsupportedVersion,
                      "unsupported BMI1 version " + std::to_string(version));
  }

  Bm25Index index;
  index.params_.k1 = le::get_f64(in, "k1");
  index.params_.b = le::get_f64(in, "b");
  try {
    index.params_.validate();
  } catch (const std::invalid_argument& e) {
    corrupt(e.what());
  }

  const auto n = le::get_u64(in, "document count");
  if (n == 0 || n > std::numeric_limits<std::uint32_t>::max()) corrupt("invalid document count");
  for (std::uint64_t i = 0; i < n; ++i) {
    auto id = get_string(in, "document id");
    if (!index.doc_index_.emplace(id, static_cast<std::uint32_t>(i)).second) {
      corrupt("duplicate document id \"" + id + "\"");
    }
    index.doc_ids_.push_back(std::move(id));
  }
  double total_length = 0.0;
  for (std::uint64_t i = 0; i < n; ++i) {
    index.doc_lengths_.push_back(le::get_u32(in, "document lengths"));
    total_length += static_cast<double>(index.doc_lengths_.back());
  }
  index.avgdl_ = total_length / static_cast<double>(n);

  const auto term_count = le::get_u64(in, "term count");
  for (std::uint64_t t = 0; t < term_count; ++t) {
    auto term = get_string(in, "term");
    if (term.empty()) corrupt("empty term");
    if (!index.terms_.empty() && !(index.terms_.back() < term)) corrupt("terms out of order");
    const auto df = le::get_u32(in, "document frequency");
    if (df == 0 || df > n) corrupt("invalid document frequency for \"" + term + "\"");
    std::vector<Posting> plist;
    plist.reserve(df);
    for (std::uint32_t i = 0; i < df; ++i) {
      Posting p{le::get_u32(in, "posting"), le::get_u32(in, "posting")};
      if (p.doc >= n) corrupt("posting ordinal out of range");
      if (!plist.empty() && p.doc <= plist.back().doc) corrupt("postings out of order");
      if (p.tf == 0 || p.tf > index.doc_lengths_[p.doc]) corrupt("invalid term frequency");
      plist.push_back(p);
    }
    index.terms_.push_back(std::move(term));
    index.postings_.push_back(std::move(plist));
  }
  if (in.peek() != std::char_traits<char>::eof()) corrupt("trailing bytes");
  index.index_terms();
  return index;
}

Bm25Index Bm25Index::load(const std::filesystem::path& path) {
  auto in = open_input(path, true);
  return read(in);
}

Bm25Index build_sparse(std::span<const Document> corpus, Bm25Params params) {
  return Bm25Index::build(corpus, params);
}

double bm25_score(const Bm25Index& index, std::span<const std::string> query_tokens,
                  std::uint32_t doc_ordinal) {
  return index.score(query_tokens, doc_ordinal);
}

std::vector<RetrievalHit> sparse_search(const Bm25Index& index, std::string_view query,
                                        std::size_t k) {
  return index.search(query, k);
}

}  // namespace ttr
