#include "ttr/cli.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <sstream>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ttr/corpus.hpp"
#include "ttr/dataset_builder.hpp"
#include "ttr/dense_index.hpp"
#include "ttr/error.hpp"
#include "ttr/eval.hpp"
#include "ttr/io.hpp"
#include "ttr/parallel.hpp"
#include "ttr/sparse_index.hpp"
#include "ttr/text_analysis.hpp"

namespace ttr::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::string env_name(const std::string& flag) {
  std::string out = "TTR_";
  for (char c : flag) {
    out += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return out;
}

/// Pre-scan for --config so the file can seed defaults before parsing.
std::optional<std::string> find_config_path(std::span<const std::string> args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].starts_with("--config=")) return args[i].substr(9);
  }
  if (const char* env = std::getenv("TTR_CONFIG")) return std::string(env);
  return std::nullopt;
}

// Environment variables beat the config file; explicit flags beat both
// because CLI11 only falls back to the default when a flag is absent.
void seed_defaults(CLI::App& app, const std::string& section,
                   const std::map<std::string, std::string>& config) {
  for (CLI::Option* opt : app.get_options()) {
    const auto& names = opt->get_lnames();
    if (names.empty() || names.front() == "help" || names.front() == "config") continue;
    const std::string& name = names.front();
    if (const char* env = std::getenv(env_name(name).c_str())) {
      opt->default_val(std::string(env));
      continue;
    }
    auto it = config.find(section.empty() ? name : section + "." + name);
    if (it == config.end() && !section.empty()) it = config.find(name);
    if (it != config.end()) opt->default_val(it->second);
  }
}

struct CorpusFiles {
  std::string passages;
  std::string tables;

  void add_to(CLI::App* sub, bool required) {
    auto* p = sub->add_option("--passages", passages, "Passage JSONL file");
    auto* t = sub->add_option("--tables", tables, "Table JSONL file");
    if (required) {
      // At least one of the two; checked at run time.
      p->group("Corpus (at least one)");
      t->group("Corpus (at least one)");
    }
  }

  Corpus load(std::ostream& out) const {
    if (passages.empty() && tables.empty()) {
      throw std::invalid_argument("at least one of --passages / --tables is required");
    }
    std::vector<Passage> ps;
    std::vector<Table> ts;
    if (!passages.empty()) ps = ingest_passages(fs::path(passages));
    if (!tables.empty()) {
      IngestWarnings w;
      ts = ingest_tables(fs::path(tables), &w);
      if (w.truncated_rows > 0) out << "warning: truncated " << w.truncated_rows << " table rows\n";
    }
    out << "loaded " << ps.size() << " passages and " << ts.size() << " tables\n";
    return Corpus::from(ps, ts);
  }
};

template <typename WriteFn>
void write_atomic(const std::string& path, bool binary, WriteFn&& fn) {
  AtomicFile file(path, binary);
  fn(file.stream());
  file.commit();
}

std::vector<std::string> read_id_list(const fs::path& path) {
  auto in = open_input(path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    auto id = trim(line);
    if (!id.empty()) out.push_back(std::move(id));
  }
  return out;
}

struct Options {
  unsigned threads = 0;
  std::string config;
};

unsigned effective_threads(const Options& o) { return o.threads == 0 ? default_threads() : o.threads; }

// --- ingest ---------------------------------------------------------------

struct IngestCmd {
  std::string kind, in, out;

  void attach(CLI::App* sub) {
    sub->add_option("--kind", kind, "Record kind")
        ->required()
        ->check(CLI::IsMember({"passages", "tables", "queries"}));
    sub->add_option("--in", in, "Input JSONL file")->required();
    sub->add_option("--out", out, "Normalized JSONL output")->required();
  }

  void run(std::ostream& log) const {
    if (kind == "passages") {
      auto ps = ingest_passages(fs::path(in));
      write_atomic(out, false, [&](std::ostream& o) { write_passages(o, ps); });
      log << "ingested " << ps.size() << " passages\n";
    } else if (kind == "tables") {
      IngestWarnings w;
      auto ts = ingest_tables(fs::path(in), &w);
      write_atomic(out, false, [&](std::ostream& o) { write_tables(o, ts); });
      log << "ingested " << ts.size() << " tables (" << w.padded_rows << " rows padded, "
          << w.truncated_rows << " rows truncated)\n";
    } else {
      auto qs = ingest_queries(fs::path(in));
      write_atomic(out, false, [&](std::ostream& o) { write_queries(o, qs); });
      log << "ingested " << qs.size() << " queries\n";
    }
  }
};

// --- linearize --------------------------------------------------------------

struct LinearizeCmd {
  CorpusFiles corpus;
  std::string out;

  void attach(CLI::App* sub) {
    corpus.add_to(sub, true);
    sub->add_option("--out", out, "JSONL output {id, modality, text}")->required();
  }

  void run(std::ostream& log) const {
    const Corpus c = corpus.load(log);
    write_atomic(out, false, [&](std::ostream& o) {
      for (const auto& d : c.documents()) {
        o << json{{"id", d.id()}, {"modality", to_string(d.modality())}, {"text", d.linearized()}}
                 .dump()
          << '\n';
      }
    });
  }
};

// --- index-sparse -----------------------------------------------------------

struct IndexSparseCmd {
  CorpusFiles corpus;
  Bm25Params params;
  std::string out;

  void attach(CLI::App* sub) {
    corpus.add_to(sub, true);
    sub->add_option("--k1", params.k1, "BM25 term-frequency saturation")->capture_default_str();
    sub->add_option("--b", params.b, "BM25 length normalization")->capture_default_str();
    sub->add_option("--out", out, "BMI1 index output")->required();
  }

  void run(std::ostream& log) const {
    const Corpus c = corpus.load(log);
    const auto index = Bm25Index::build(c, params);
    index.save(out);
    log << "indexed " << index.doc_count() << " documents, " << index.vocabulary_size()
        << " terms, avgdl " << index.avgdl() << '\n';
  }
};

// --- embed-hash -------------------------------------------------------------

struct EmbedHashCmd {
  CorpusFiles corpus;
  std::string queries;
  std::size_t dim = 256;
  std::uint64_t seed = 0;
  std::string out;

  void attach(CLI::App* sub) {
    corpus.add_to(sub, false);
    sub->add_option("--queries", queries, "Embed query questions instead of documents");
    sub->add_option("--dim", dim, "Embedding dimension (>= 8)")->capture_default_str();
    sub->add_option("--seed", seed, "Hash seed")->capture_default_str();
    sub->add_option("--out", out, "EMB1 output")->required();
  }

  void run(std::ostream& log) const {
    if (dim < 8) throw std::invalid_argument("--dim must be >= 8");
    std::vector<std::string> ids;
    std::vector<float> values;
    auto add = [&](const std::string& id, std::string_view text) {
      auto v = hash_embed(text, dim, seed);
      ids.push_back(id);
      values.insert(values.end(), v.begin(), v.end());
    };
    if (!queries.empty()) {
      if (!corpus.passages.empty() || !corpus.tables.empty()) {
        throw std::invalid_argument("--queries cannot be combined with --passages/--tables");
      }
      for (const auto& q : ingest_queries(fs::path(queries))) add(q.id, q.question);
    } else {
      const Corpus c = corpus.load(log);
      for (const auto& d : c.documents()) add(d.id(), d.linearized());
    }
    const EmbeddingMatrix m(dim, std::move(ids), std::move(values));
    write_embeddings(m, fs::path(out));
    log << "embedded " << m.rows() << " rows at dim " << m.dim() << '\n';
  }
};

// --- index-dense ------------------------------------------------------------

struct IndexDenseCmd {
  std::vector<std::string> inputs;
  std::string metric = "dot";
  std::string out;

  void attach(CLI::App* sub) {
    sub->add_option("--embeddings", inputs, "EMB1 inputs, concatenated in order")->required();
    sub->add_option("--metric", metric, "Metric the index will be searched with")
        ->check(CLI::IsMember({"dot", "cosine"}))
        ->capture_default_str();
    sub->add_option("--out", out, "EMB1 dense index output")->required();
  }

  void run(std::ostream& log) const {
    std::size_t dim = 0;
    std::vector<std::string> ids;
    std::vector<float> values;
    for (const auto& path : inputs) {
      const auto m = read_embeddings(fs::path(path));
      if (dim != 0 && m.dim() != dim) {
        throw DataError("dimension mismatch: " + path + " has dim " + std::to_string(m.dim()) +
                        ", expected " + std::to_string(dim));
      }
      dim = m.dim();
      ids.insert(ids.end(), m.ids().begin(), m.ids().end());
      values.insert(values.end(), m.values().begin(), m.values().end());
    }
    const EmbeddingMatrix merged(dim, std::move(ids), std::move(values));
    if (*parse_metric(metric) == SimilarityMetric::Cosine) {
      for (std::size_t r = 0; r < merged.rows(); ++r) {
        if (merged.norm(r) == 0.0) {
          throw DataError("zero vector in row " + std::to_string(r) + " (\"" + merged.id(r) +
                          "\") cannot be searched by cosine");
        }
      }
    }
    write_embeddings(merged, fs::path(out));
    log << "dense index: " << merged.rows() << " rows at dim " << dim << '\n';
  }
};

// --- search -----------------------------------------------------------------

struct SearchCmd {
  std::string mode;
  std::string index;
  std::size_t k = 10;
  std::string metric = "dot";
  std::string queries;
  std::string query;
  std::string query_embeddings;
  std::uint64_t seed = 0;
  std::string out;

  void attach(CLI::App* sub) {
    sub->add_option("--mode", mode, "Retrieval mode")
        ->required()
        ->check(CLI::IsMember({"sparse", "dense"}));
    sub->add_option("--index", index, "BMI1 (sparse) or EMB1 (dense) index")->required();
    sub->add_option("--k", k, "Hits per query")->capture_default_str();
    sub->add_option("--metric", metric, "Dense similarity")
        ->check(CLI::IsMember({"dot", "cosine"}))
        ->capture_default_str();
    sub->add_option("--queries", queries, "Query JSONL; writes a run file");
    sub->add_option("--query", query, "Single query text; writes one hit per line");
    sub->add_option("--query-embeddings", query_embeddings,
                    "EMB1 query vectors keyed by query id (dense mode)");
    sub->add_option("--seed", seed, "hash_embed seed for dense queries without embeddings")
        ->capture_default_str();
    sub->add_option("--out", out, "Output JSONL")->required();
  }

  void run(std::ostream& log, unsigned threads) const {
    if (queries.empty() == query.empty()) {
      throw std::invalid_argument("exactly one of --queries / --query is required");
    }
    if (k == 0) throw std::invalid_argument("--k must be >= 1");
    std::vector<QueryRecord> qs;
    if (!queries.empty()) {
      qs = ingest_queries(fs::path(queries));
    } else {
      QueryRecord q;
      q.id = "query";
      q.question = query;
      qs.push_back(std::move(q));
    }

    std::vector<QueryRun> runs(qs.size());
    std::size_t empty_queries = 0;
    if (mode == "sparse") {
      const auto idx = Bm25Index::load(index);
      parallel_for(qs.size(), threads, [&](std::size_t i) {
        runs[i] = {qs[i].id, idx.search(qs[i].question, k)};
      });
    } else {
      const auto docs = read_embeddings(fs::path(index));
      const auto sim = *parse_metric(metric);
      std::optional<EmbeddingMatrix> qvecs;
      if (!query_embeddings.empty()) qvecs = read_embeddings(fs::path(query_embeddings));
      std::vector<char> empty(qs.size(), 0);
      parallel_for(qs.size(), threads, [&](std::size_t i) {
        runs[i].query_id = qs[i].id;
        std::vector<float> v;
        if (qvecs) {
          auto row = qvecs->find(qs[i].id);
          if (!row) throw DataError("no query embedding for \"" + qs[i].id + "\"");
          auto r = qvecs->row(*row);
          v.assign(r.begin(), r.end());
        } else {
          try {
            v = hash_embed(qs[i].question, docs.dim(), seed);
          } catch (const DataError&) {
            empty[i] = 1;
            return;
          }
        }
        runs[i].hits = dense_search(docs, v, k, sim);
      });
      empty_queries = static_cast<std::size_t>(std::count(empty.begin(), empty.end(), 1));
    }
    if (empty_queries > 0) log << "warning: " << empty_queries << " queries had no tokens\n";

    write_atomic(out, false, [&](std::ostream& o) {
      if (!queries.empty()) {
        write_run(o, runs);
        return;
      }
      for (const auto& h : runs.front().hits) {
        o << json{{"rank", h.rank}, {"doc_id", h.doc_id}, {"score", h.score}}.dump() << '\n';
      }
    });
    log << "searched " << qs.size() << " queries (" << mode << ", k=" << k << ")\n";
  }
};

// --- mine-negatives ---------------------------------------------------------

struct MineCmd {
  std::string index;
  CorpusFiles corpus;
  std::string queries;
  std::size_t max_candidates = kDefaultMaxCandidates;
  std::string out;

  void attach(CLI::App* sub) {
    sub->add_option("--index", index, "BMI1 index over the mixed corpus")->required();
    corpus.add_to(sub, true);
    sub->add_option("--queries", queries, "Query JSONL")->required();
    sub->add_option("--max-candidates", max_candidates, "BM25 depth searched for a negative")
        ->capture_default_str();
    sub->add_option("--out", out, "Training-sample JSONL output")->required();
  }

  void run(std::ostream& log, unsigned threads) const {
    if (max_candidates == 0) throw std::invalid_argument("--max-candidates must be >= 1");
    const Corpus c = corpus.load(log);
    const auto idx = Bm25Index::load(index);
    for (std::uint32_t o = 0; o < idx.doc_count(); ++o) {
      if (!c.contains(idx.doc_id(o))) {
        throw DataError("index document \"" + idx.doc_id(o) + "\" missing from the corpus");
      }
    }
    auto qs = ingest_queries(fs::path(queries));
    resolve_query_ids(qs, c);
    const auto result = build_training_samples(qs, idx, c, max_candidates, threads);
    write_atomic(out, false, [&](std::ostream& o) { write_training_samples(o, result.samples); });
    log << "mined " << result.samples.size() << " samples; dropped " << result.no_negative
        << " without negative, " << result.no_positive << " without positive\n";
  }
};

// --- build-mixed ------------------------------------------------------------

struct BuildMixedCmd {
  std::string passages, tables, queries, required;
  std::size_t sample_size = 0;
  std::uint64_t seed = 0;
  std::string out_dir;

  void attach(CLI::App* sub) {
    sub->add_option("--passages", passages, "Passage JSONL file")->required();
    sub->add_option("--tables", tables, "Table JSONL file")->required();
    sub->add_option("--queries", queries, "Query JSONL whose gold ids must be kept");
    sub->add_option("--required", required, "Extra ids to keep, one per line");
    sub->add_option("--sample-size", sample_size, "Total passages in the mixed corpus")
        ->required();
    sub->add_option("--seed", seed, "Sampling seed")->capture_default_str();
    sub->add_option("--out-dir", out_dir, "Writes passages.jsonl and tables.jsonl")->required();
  }

  void run(std::ostream& log) const {
    const auto ps = ingest_passages(fs::path(passages));
    const auto ts = ingest_tables(fs::path(tables));
    std::set<std::string> req;
    if (!queries.empty()) {
      auto qs = ingest_queries(fs::path(queries));
      resolve_query_ids(qs, Corpus::from(ps, ts));
      for (const auto& q : qs) req.insert(q.gold_ids.begin(), q.gold_ids.end());
    }
    if (!required.empty()) {
      for (auto& id : read_id_list(required)) req.insert(std::move(id));
    }
    const auto docs = build_mixed_corpus(ps, ts, sample_size, req, seed);
    std::vector<Passage> out_ps;
    std::vector<Table> out_ts;
    for (const auto& d : docs) {
      if (const auto* p = d.passage()) out_ps.push_back(*p);
      if (const auto* t = d.table()) out_ts.push_back(*t);
    }
    fs::create_directories(out_dir);
    write_atomic((fs::path(out_dir) / "passages.jsonl").string(), false,
                 [&](std::ostream& o) { write_passages(o, out_ps); });
    write_atomic((fs::path(out_dir) / "tables.jsonl").string(), false,
                 [&](std::ostream& o) { write_tables(o, out_ts); });
    log << "mixed corpus: " << out_ps.size() << " passages (" << req.size()
        << " required ids), " << out_ts.size() << " tables\n";
  }
};

// --- filter-context ---------------------------------------------------------

struct FilterContextCmd {
  std::string queries, labels, out;

  void attach(CLI::App* sub) {
    sub->add_option("--queries", queries, "Query JSONL")->required();
    sub->add_option("--labels", labels, "Context label JSONL")->required();
    sub->add_option("--out", out, "Filtered query JSONL")->required();
  }

  void run(std::ostream& log) const {
    const auto qs = ingest_queries(fs::path(queries));
    const auto kept = apply_context_filter(qs, fs::path(labels));
    write_atomic(out, false, [&](std::ostream& o) { write_queries(o, kept); });
    log << "kept " << kept.size() << " of " << qs.size() << " queries\n";
  }
};

// --- eval -------------------------------------------------------------------

struct EvalCmd {
  std::string run_file, queries;
  CorpusFiles corpus;
  std::vector<std::size_t> ks{10, 20, 100};
  std::size_t sample_n = 1000;
  CLI::Option* sample_n_opt = nullptr;
  std::uint64_t seed = 0;
  std::string source = "sparse";
  std::size_t stratify_k = 20;
  std::vector<double> edges{kQuintileEdges.begin(), kQuintileEdges.end()};
  std::string strata_out;
  std::string out;

  void attach(CLI::App* sub) {
    sub->add_option("--run", run_file, "Run JSONL")->required();
    sub->add_option("--queries", queries, "Query JSONL")->required();
    corpus.add_to(sub, true);
    sub->add_option("--ks", ks, "Cutoffs, comma separated")->delimiter(',')->capture_default_str();
    sample_n_opt = sub->add_option("--sample-n", sample_n,
                                   "Queries sampled (0 = all; clamped unless given)")
                       ->capture_default_str();
    sub->add_option("--seed", seed, "Sampling seed")->capture_default_str();
    sub->add_option("--source", source, "Retrieval source recorded in the report")
        ->check(CLI::IsMember({"sparse", "dense"}))
        ->capture_default_str();
    sub->add_option("--stratify-k", stratify_k, "k for overlap-stratified recall (0 = off)")
        ->capture_default_str();
    sub->add_option("--edges", edges, "Overlap bin edges")->delimiter(',')->capture_default_str();
    sub->add_option("--strata-out", strata_out, "TSV plot data for stratified recall");
    sub->add_option("--out", out, "Report JSON")->required();
  }

  void run(std::ostream& log) const {
    EvalConfig config;
    config.ks = ks;
    config.seed = seed;
    config.metric_source = source == "dense" ? RetrievalSource::Dense : RetrievalSource::Sparse;
    config.validate();
    if (stratify_k > 0) validate_edges(edges);

    const Corpus c = corpus.load(log);
    auto all = ingest_queries(fs::path(queries));
    resolve_query_ids(all, c);
    if (sample_n == 0) {
      config.sample_n.reset();
    } else if (sample_n > all.size() && sample_n_opt->count() == 0) {
      log << "sample size " << sample_n << " exceeds " << all.size() << " queries; using all\n";
      config.sample_n.reset();
    } else {
      config.sample_n = sample_n;
    }
    const auto sampled = sample_queries(all, config.sample_n, config.seed);
    const auto runs = read_run(fs::path(run_file));

    const auto table = recall_at_k(runs, sampled, c, config.ks);
    log << format_recall_table(table);
    if (table.unknown_doc_hits > 0) {
      log << "warning: " << table.unknown_doc_hits << " hits reference unknown documents\n";
    }
    json report = to_json(table);
    report["source"] = source;
    report["seed"] = seed;
    report["sampled_queries"] = sampled.size();
    if (stratify_k > 0) {
      const auto strata = stratified_recall(runs, sampled, c, stratify_k, edges);
      report["stratified"] = to_json(strata);
      if (!strata_out.empty()) {
        write_atomic(strata_out, false, [&](std::ostream& o) { o << to_tsv(strata); });
      }
    }
    write_atomic(out, false, [&](std::ostream& o) { o << report.dump(2) << '\n'; });
  }
};

// --- overlap-report ---------------------------------------------------------

struct OverlapReportCmd {
  std::string queries;
  CorpusFiles corpus;
  std::vector<double> edges{kQuintileEdges.begin(), kQuintileEdges.end()};
  std::string out;

  void attach(CLI::App* sub) {
    sub->add_option("--queries", queries, "Query JSONL")->required();
    corpus.add_to(sub, true);
    sub->add_option("--edges", edges, "Overlap bin edges")->delimiter(',')->capture_default_str();
    sub->add_option("--out", out, "OverlapReport JSON")->required();
  }

  void run(std::ostream& log, unsigned threads) const {
    validate_edges(edges);
    const Corpus c = corpus.load(log);
    auto qs = ingest_queries(fs::path(queries));
    resolve_query_ids(qs, c);

    std::vector<std::optional<double>> scores(qs.size());
    parallel_for(qs.size(), threads, [&](std::size_t i) { scores[i] = gold_overlap(qs[i], c); });
    std::vector<QueryOverlap> overlaps;
    std::size_t complete = 0;
    for (std::size_t i = 0; i < qs.size(); ++i) {
      if (!scores[i]) continue;
      overlaps.push_back({qs[i].id, *scores[i]});
      if (*scores[i] == 100.0) ++complete;
    }
    const auto report = bucketize(overlaps, edges);
    write_atomic(out, false, [&](std::ostream& o) { o << to_json(report).dump(2) << '\n'; });
    const double pct = overlaps.empty() ? 0.0 : 100.0 * static_cast<double>(complete) /
                                                    static_cast<double>(overlaps.size());
    log << "overlap computed for " << overlaps.size() << " of " << qs.size()
        << " queries; complete overlap: " << std::fixed << std::setprecision(2) << pct << "%\n";
  }
};

}  // namespace

std::map<std::string, std::string> parse_config(std::string_view text) {
  std::map<std::string, std::string> out;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw DataError("config line " + std::to_string(line_no) + ": bad section");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') &&
        value.back() == value.front()) {
      value = value.substr(1, value.size() - 2);
    }
    std::replace(key.begin(), key.end(), '_', '-');
    out[section.empty() ? key : section + "." + key] = value;
  }
  return out;
}

int run_command(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mixed text/table retrieval engine and evaluation harness", "ttr"};
  app.require_subcommand(1);
  app.fallthrough();

  Options opts;
  app.add_option("--threads", opts.threads, "Worker threads (0 = available cores)")
      ->capture_default_str();
  app.add_option("--config", opts.config, "key = value config file (flags > TTR_* env > file)");

  IngestCmd ingest;
  LinearizeCmd linearize_cmd;
  IndexSparseCmd index_sparse;
  EmbedHashCmd embed_hash;
  IndexDenseCmd index_dense;
  SearchCmd search;
  MineCmd mine;
  BuildMixedCmd build_mixed;
  FilterContextCmd filter_context;
  EvalCmd eval;
  OverlapReportCmd overlap_report;

  std::vector<std::pair<CLI::App*, std::function<void()>>> commands;
  auto add = [&](const char* name, const char* desc, auto& cmd, auto runner) {
    CLI::App* sub = app.add_subcommand(name, desc);
    cmd.attach(sub);
    commands.emplace_back(sub, runner);
  };
  const auto threads = [&] { return effective_threads(opts); };
  add("ingest", "Validate and normalize a dataset file", ingest, [&] { ingest.run(out); });
  add("linearize", "Write the linearized text of every document", linearize_cmd,
      [&] { linearize_cmd.run(out); });
  add("index-sparse", "Build a BM25 index (BMI1)", index_sparse, [&] { index_sparse.run(out); });
  add("embed-hash", "Feature-hash documents or queries into EMB1 vectors", embed_hash,
      [&] { embed_hash.run(out); });
  add("index-dense", "Validate and merge EMB1 files into a dense index", index_dense,
      [&] { index_dense.run(out); });
  add("search", "Retrieve top-k documents (sparse or dense)", search,
      [&] { search.run(out, threads()); });
  add("mine-negatives", "Mine one BM25 hard negative per query", mine,
      [&] { mine.run(out, threads()); });
  add("build-mixed", "Sample a mixed passage/table corpus", build_mixed,
      [&] { build_mixed.run(out); });
  add("filter-context", "Keep context-independent queries", filter_context,
      [&] { filter_context.run(out); });
  add("eval", "Recall@k and overlap-stratified recall of a run", eval, [&] { eval.run(out); });
  add("overlap-report", "Question/gold-document lexical overlap histogram", overlap_report,
      [&] { overlap_report.run(out, threads()); });

  try {
    std::map<std::string, std::string> config;
    if (auto path = find_config_path(args)) {
      auto in = open_input(*path);
      std::stringstream buf;
      buf << in.rdbuf();
      config = parse_config(buf.str());
    }
    seed_defaults(app, "", config);
    for (auto& [sub, _] : commands) seed_defaults(*sub, sub->get_name(), config);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const CLI::Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }

  try {
    for (auto& [sub, runner] : commands) {
      if (sub->parsed()) runner();
    }
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace ttr::cli
