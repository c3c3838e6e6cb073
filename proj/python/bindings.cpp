#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "ttr/cli.hpp"
#include "ttr/corpus.hpp"
#include "ttr/dense_index.hpp"
#include "ttr/error.hpp"
#include "ttr/eval.hpp"
#include "ttr/sparse_index.hpp"
#include "ttr/text_analysis.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace ttr;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

std::vector<std::string> sorted_tokens(const TokenSet& s) {
  return {s.tokens().begin(), s.tokens().end()};
}

Corpus load_corpus(const std::optional<fs::path>& passages, const std::optional<fs::path>& tables) {
  if (!passages && !tables) throw std::invalid_argument("passages or tables path required");
  std::vector<Passage> ps;
  std::vector<Table> ts;
  if (passages) ps = ingest_passages(*passages);
  if (tables) ts = ingest_tables(*tables);
  return Corpus::from(ps, ts);
}

std::vector<float> to_vector(const FloatArray& a) {
  if (a.ndim() != 1) throw std::invalid_argument("expected a 1-d float array");
  return {a.data(), a.data() + a.size()};
}

py::array_t<float> to_array(std::span<const float> v, std::size_t rows, std::size_t cols) {
  py::array_t<float> out({rows, cols});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

SimilarityMetric metric_of(const std::string& name) {
  auto m = parse_metric(name);
  if (!m) throw std::invalid_argument("unknown metric \"" + name + "\"");
  return *m;
}

py::object json_to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Mixed text/table retrieval engine";

  auto data_error = py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", data_error.ptr());

  py::class_<RetrievalHit>(m, "RetrievalHit")
      .def_readonly("doc_id", &RetrievalHit::doc_id)
      .def_readonly("score", &RetrievalHit::score)
      .def_readonly("rank", &RetrievalHit::rank)
      .def("__repr__", [](const RetrievalHit& h) {
        std::ostringstream s;
        s << "RetrievalHit(rank=" << h.rank << ", doc_id='" << h.doc_id << "', score=" << h.score
          << ")";
        return s.str();
      });

  // --- text analysis ---
  m.def(
      "tokenize",
      [](const std::string& text, bool remove_stopwords) {
        return sorted_tokens(tokenize(text, remove_stopwords));
      },
      py::arg("text"), py::arg("remove_stopwords") = true,
      "Sorted distinct lowercase tokens.");
  m.def(
      "jaccard",
      [](const std::string& a, const std::string& b, bool remove_stopwords) {
        return jaccard(tokenize(a, remove_stopwords), tokenize(b, remove_stopwords));
      },
      py::arg("a"), py::arg("b"), py::arg("remove_stopwords") = true);
  m.def("gestalt_ratio", [](const std::string& a, const std::string& b) { return gestalt_ratio(a, b); },
        py::arg("a"), py::arg("b"), "Ratcliff-Obershelp similarity in [0, 100].");
  m.def(
      "token_set_overlap",
      [](const std::string& q, const std::string& d) { return token_set_overlap(q, d); },
      py::arg("question"), py::arg("doc_text"));

  // --- corpus ---
  m.def(
      "linearize_passage",
      [](const std::string& title, const std::string& text) {
        return linearize(Passage{"", title, text});
      },
      py::arg("title"), py::arg("text"));
  m.def(
      "linearize_table",
      [](const std::string& page_title, const std::string& section_title, const std::string& caption,
         std::vector<std::string> header, std::vector<std::vector<std::string>> rows) {
        Table t;
        t.page_title = page_title;
        t.section_title = section_title;
        t.caption = caption;
        t.header = std::move(header);
        t.rows = std::move(rows);
        return linearize(t);
      },
      py::arg("page_title"), py::arg("section_title"), py::arg("caption"), py::arg("header"),
      py::arg("rows"));

  // --- sparse ---
  py::class_<Bm25Index>(m, "Bm25Index")
      .def_static(
          "build",
          [](const std::vector<std::pair<std::string, std::string>>& docs, double k1, double b) {
            std::vector<Document> ds;
            ds.reserve(docs.size());
            for (const auto& [id, text] : docs) ds.emplace_back(Passage{id, "", text});
            return Bm25Index::build(ds, {k1, b});
          },
          py::arg("docs"), py::arg("k1") = 1.2, py::arg("b") = 0.75,
          "Build from (id, text) pairs.")
      .def_static(
          "from_files",
          [](std::optional<fs::path> passages, std::optional<fs::path> tables, double k1, double b) {
            return Bm25Index::build(load_corpus(passages, tables), {k1, b});
          },
          py::arg("passages") = py::none(), py::arg("tables") = py::none(), py::arg("k1") = 1.2,
          py::arg("b") = 0.75)
      .def_static("load", &Bm25Index::load, py::arg("path"))
      .def("save", &Bm25Index::save, py::arg("path"))
      .def("search", &Bm25Index::search, py::arg("query"), py::arg("k") = 10,
           py::call_guard<py::gil_scoped_release>())
      .def_property_readonly("doc_count", &Bm25Index::doc_count)
      .def_property_readonly("vocabulary_size", &Bm25Index::vocabulary_size)
      .def_property_readonly("avgdl", &Bm25Index::avgdl)
      .def_property_readonly("k1", [](const Bm25Index& i) { return i.params().k1; })
      .def_property_readonly("b", [](const Bm25Index& i) { return i.params().b; })
      .def("__len__", &Bm25Index::doc_count);

  // --- dense ---
  py::class_<EmbeddingMatrix>(m, "EmbeddingMatrix")
      .def(py::init([](std::vector<std::string> ids, const FloatArray& values) {
             if (values.ndim() != 2) throw std::invalid_argument("expected a 2-d float array");
             const auto dim = static_cast<std::size_t>(values.shape(1));
             return EmbeddingMatrix(dim, std::move(ids),
                                    std::vector<float>(values.data(), values.data() + values.size()));
           }),
           py::arg("ids"), py::arg("values"))
      .def_property_readonly("ids", &EmbeddingMatrix::ids)
      .def_property_readonly("dim", &EmbeddingMatrix::dim)
      .def_property_readonly("values",
                             [](const EmbeddingMatrix& e) { return to_array(e.values(), e.rows(), e.dim()); })
      .def(
          "search",
          [](const EmbeddingMatrix& e, const FloatArray& q, std::size_t k, const std::string& metric,
             unsigned threads) { return dense_search(e, to_vector(q), k, metric_of(metric), threads); },
          py::arg("query"), py::arg("k") = 10, py::arg("metric") = "dot", py::arg("threads") = 1)
      .def("__len__", &EmbeddingMatrix::rows);

  m.def(
      "read_embeddings", [](const fs::path& p) { return read_embeddings(p); }, py::arg("path"));
  m.def(
      "write_embeddings",
      [](const EmbeddingMatrix& e, const fs::path& p) { write_embeddings(e, p); }, py::arg("matrix"),
      py::arg("path"));
  m.def(
      "hash_embed",
      [](const std::string& text, std::size_t dim, std::uint64_t seed) {
        const auto v = hash_embed(text, dim, seed);
        py::array_t<float> out(v.size());
        std::copy(v.begin(), v.end(), out.mutable_data());
        return out;
      },
      py::arg("text"), py::arg("dim") = 256, py::arg("seed") = 0);

  // --- evaluation ---
  m.def(
      "recall_at_k",
      [](const fs::path& run, const fs::path& queries, std::optional<fs::path> passages,
         std::optional<fs::path> tables, std::vector<std::size_t> ks) {
        const auto corpus = load_corpus(passages, tables);
        auto qs = ingest_queries(queries);
        resolve_query_ids(qs, corpus);
        return json_to_py(to_json(recall_at_k(read_run(run), qs, corpus, ks)));
      },
      py::arg("run"), py::arg("queries"), py::arg("passages") = py::none(),
      py::arg("tables") = py::none(), py::arg("ks") = std::vector<std::size_t>{10, 20, 100},
      "Recall table as a dict for a run file.");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = cli::run_command(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run a ttr subcommand; returns (exit_code, stdout, stderr).");
}
