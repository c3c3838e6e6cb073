#include "ttr/eval.hpp"

#include <algorithm>
#include <array>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "ttr/error.hpp"
#include "ttr/io.hpp"
#include "ttr/random.hpp"
#include "utf8.hpp"

namespace ttr {

using nlohmann::json;

namespace {

bool is_space(char32_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v' ||
         c == 0xA0;
}

constexpr std::array<Dataset, 6> kDatasets{Dataset::NQ,         Dataset::NQTables,
                                           Dataset::WikiSQL,    Dataset::WikiSQLCtx,
                                           Dataset::OTTQA,      Dataset::MultiModal};

std::unordered_map<std::string, const QueryRun*> index_runs(std::span<const QueryRun> runs) {
  std::unordered_map<std::string, const QueryRun*> out;
  out.reserve(runs.size());
  for (const auto& r : runs) out.emplace(r.query_id, &r);
  return out;
}

std::span<const RetrievalHit> hits_for(
    const std::unordered_map<std::string, const QueryRun*>& by_query, const std::string& id) {
  auto it = by_query.find(id);
  if (it == by_query.end()) return {};
  return it->second->hits;
}

json nullable(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

void EvalConfig::validate() const {
  if (ks.empty()) throw std::invalid_argument("ks must not be empty");
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] == 0) throw std::invalid_argument("every k must be >= 1");
    if (i > 0 && ks[i] <= ks[i - 1]) throw std::invalid_argument("ks must be strictly ascending");
  }
}

std::vector<QueryRecord> sample_queries(std::span<const QueryRecord> queries,
                                        std::optional<std::size_t> n, std::uint64_t seed) {
  if (!n) return {queries.begin(), queries.end()};
  if (*n > queries.size()) {
    throw std::invalid_argument("cannot sample " + std::to_string(*n) + " of " +
                                std::to_string(queries.size()) + " queries");
  }
  Rng rng(seed);
  std::vector<QueryRecord> out;
  out.reserve(*n);
  for (auto i : sample_indices(queries.size(), *n, rng)) out.push_back(queries[i]);
  return out;
}

std::string normalize_answer_text(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (std::size_t pos = 0; pos < s.size();) {
    const char32_t cp = utf8::next(s, pos);
    if (is_space(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    utf8::append(out, utf8::to_lower(cp));
  }
  return out;
}

bool contains_answer(std::string_view text, std::span<const std::string> answers) {
  std::string haystack;
  bool normalized = false;
  for (const auto& a : answers) {
    const auto needle = normalize_answer_text(a);
    if (needle.empty()) continue;
    if (!normalized) {
      haystack = normalize_answer_text(text);
      normalized = true;
    }
    if (haystack.find(needle) != std::string::npos) return true;
  }
  return false;
}

bool answer_match(const Document& doc, const QueryRecord& query) {
  if (query.protocol != MatchProtocol::AnswerString) {
    throw std::invalid_argument("answer_match on gold-id query \"" + query.id + "\"");
  }
  return contains_answer(doc.linearized(), query.answers);
}

bool gold_match(std::string_view doc_id, const QueryRecord& query) {
  if (query.protocol != MatchProtocol::GoldId) {
    throw std::invalid_argument("gold_match on answer-string query \"" + query.id + "\"");
  }
  return query.gold_ids.contains(std::string(doc_id));
}

void write_run(std::ostream& out, std::span<const QueryRun> runs) {
  for (const auto& r : runs) {
    json hits = json::array();
    for (const auto& h : r.hits) hits.push_back({{"doc_id", h.doc_id}, {"score", h.score}});
    out << json{{"query_id", r.query_id}, {"hits", hits}}.dump() << '\n';
  }
}

std::vector<QueryRun> read_run(std::istream& in) {
  std::vector<QueryRun> out;
  std::unordered_map<std::string, std::size_t> seen;
  for_each_jsonl(in, [&](const json& j, std::size_t line_no) {
    QueryRun run;
    run.query_id = j.at("query_id").get<std::string>();
    if (!seen.emplace(run.query_id, line_no).second) {
      throw DataError("duplicate query_id \"" + run.query_id + "\"");
    }
    const auto& hits = j.at("hits");
    if (!hits.is_array()) throw DataError("\"hits\" must be a list");
    for (const auto& h : hits) {
      run.hits.push_back({h.at("doc_id").get<std::string>(), h.at("score").get<double>(),
                          run.hits.size() + 1});
    }
    out.push_back(std::move(run));
  });
  return out;
}

std::vector<QueryRun> read_run(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_run(in);
}

std::optional<std::size_t> first_correct_rank(std::span<const RetrievalHit> hits,
                                              const QueryRecord& query, const Corpus& corpus,
                                              std::size_t depth, std::size_t* unknown) {
  const std::size_t n = std::min(depth, hits.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (query.protocol == MatchProtocol::GoldId) {
      if (gold_match(hits[i].doc_id, query)) return i + 1;
      continue;
    }
    const Document* doc = corpus.find(hits[i].doc_id);
    if (!doc) {
      if (unknown) ++*unknown;
      continue;
    }
    if (answer_match(*doc, query)) return i + 1;
  }
  return std::nullopt;
}

const RecallRow* RecallTable::row(std::string_view dataset) const {
  for (const auto& r : rows) {
    if (r.dataset == dataset) return &r;
  }
  return nullptr;
}

RecallTable recall_at_k(std::span<const QueryRun> runs, std::span<const QueryRecord> queries,
                        const Corpus& corpus, std::span<const std::size_t> ks) {
  EvalConfig{{ks.begin(), ks.end()}}.validate();
  RecallTable table;
  table.ks.assign(ks.begin(), ks.end());
  const std::size_t depth = ks.back();
  const auto by_query = index_runs(runs);

  std::map<Dataset, RecallRow> per_dataset;
  RecallRow all{std::string(kAllDatasets), 0, std::vector<std::size_t>(ks.size(), 0), {}};
  for (const auto& q : queries) {
    auto [it, _] = per_dataset.try_emplace(
        q.dataset,
        RecallRow{std::string(to_string(q.dataset)), 0, std::vector<std::size_t>(ks.size(), 0), {}});
    auto& row = it->second;
    ++row.queries;
    ++all.queries;
    const auto rank =
        first_correct_rank(hits_for(by_query, q.id), q, corpus, depth, &table.unknown_doc_hits);
    if (!rank) continue;
    for (std::size_t i = 0; i < ks.size(); ++i) {
      if (*rank <= ks[i]) {
        ++row.correct[i];
        ++all.correct[i];
      }
    }
  }

  auto finish = [&](RecallRow row) {
    for (auto c : row.correct) {
      row.recall.push_back(row.queries == 0 ? 0.0
                                            : static_cast<double>(c) /
                                                  static_cast<double>(row.queries));
    }
    table.rows.push_back(std::move(row));
  };
  for (auto d : kDatasets) {
    auto it = per_dataset.find(d);
    if (it != per_dataset.end()) finish(std::move(it->second));
  }
  finish(std::move(all));
  return table;
}

json to_json(const RecallTable& table) {
  json rows = json::array();
  for (const auto& r : table.rows) {
    json recall = json::object();
    for (std::size_t i = 0; i < table.ks.size(); ++i) {
      recall[std::to_string(table.ks[i])] = r.recall[i];
    }
    rows.push_back({{"dataset", r.dataset}, {"queries", r.queries}, {"recall", recall}});
  }
  return {{"ks", table.ks}, {"rows", rows}, {"unknown_doc_hits", table.unknown_doc_hits}};
}

std::string format_recall_table(const RecallTable& table) {
  std::ostringstream out;
  out << std::left << std::setw(12) << "dataset" << std::right << std::setw(8) << "queries";
  for (auto k : table.ks) out << std::setw(12) << ("R@" + std::to_string(k));
  out << '\n';
  out << std::fixed << std::setprecision(4);
  for (const auto& r : table.rows) {
    out << std::left << std::setw(12) << r.dataset << std::right << std::setw(8) << r.queries;
    for (double v : r.recall) out << std::setw(12) << v;
    out << '\n';
  }
  return out.str();
}

std::optional<double> gold_overlap(const QueryRecord& query, const Corpus& corpus) {
  std::optional<double> best;
  const TokenSet question = tokenize(query.question, true);
  for (const auto& id : query.gold_ids) {
    const Document* doc = corpus.find(id);
    if (!doc) continue;
    const double o = token_set_overlap(question, tokenize(doc->linearized(), true));
    if (!best || o > *best) best = o;
  }
  return best;
}

StratifiedRecall stratified_recall(std::span<const QueryRun> runs,
                                   std::span<const QueryRecord> queries, const Corpus& corpus,
                                   std::size_t k, std::span<const double> edges) {
  if (k == 0) throw std::invalid_argument("k must be >= 1");
  validate_edges(edges);
  const auto by_query = index_runs(runs);

  StratifiedRecall out;
  out.k = k;
  std::vector<QueryOverlap> overlaps;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    out.bins.push_back({edges[i], edges[i + 1], 0, 0, std::nullopt});
  }
  for (const auto& q : queries) {
    const auto overlap = gold_overlap(q, corpus);
    if (!overlap) {
      ++out.skipped_no_gold;
      continue;
    }
    overlaps.push_back({q.id, *overlap});
    auto& bin = out.bins[bin_index(*overlap, edges)];
    ++bin.queries;
    if (first_correct_rank(hits_for(by_query, q.id), q, corpus, k)) ++bin.correct;
  }
  for (auto& bin : out.bins) {
    if (bin.queries > 0) {
      bin.recall = static_cast<double>(bin.correct) / static_cast<double>(bin.queries);
    }
  }
  out.overlaps = bucketize(overlaps, edges);
  return out;
}

json to_json(const StratifiedRecall& s) {
  json bins = json::array();
  for (const auto& b : s.bins) {
    bins.push_back({{"lo", b.lo},
                    {"hi", b.hi},
                    {"queries", b.queries},
                    {"correct", b.correct},
                    {"recall", nullable(b.recall)}});
  }
  return {{"k", s.k},
          {"bins", bins},
          {"skipped_no_gold", s.skipped_no_gold},
          {"overlap", to_json(s.overlaps)}};
}

std::string to_tsv(const StratifiedRecall& s) {
  std::ostringstream out;
  out << "lo\thi\tqueries\trecall\n";
  for (const auto& b : s.bins) {
    out << b.lo << '\t' << b.hi << '\t' << b.queries << '\t';
    if (b.recall) {
      out << *b.recall;
    } else {
      out << "null";
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace ttr
