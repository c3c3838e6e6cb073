#include <gtest/gtest.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ttr/cli.hpp"
#include "ttr/corpus.hpp"
#include "ttr/error.hpp"
#include "ttr/eval.hpp"

namespace fs = std::filesystem;
using namespace ttr;

namespace {

const fs::path kSample = fs::path(TTR_SOURCE_DIR) / "data" / "sample";

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run_command(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) {
    if (!l.empty()) out.push_back(l);
  }
  return out;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("ttr_cli_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string tmp(const std::string& name) const { return (dir_ / name).string(); }
  static std::string sample(const std::string& name) { return (kSample / name).string(); }

  std::string build_sparse_index() {
    const auto idx = tmp("index.bmi");
    auto r = run({"index-sparse", "--passages", sample("passages.jsonl"), "--tables",
                  sample("tables.jsonl"), "--out", idx});
    EXPECT_EQ(r.code, 0) << r.err;
    return idx;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, IngestNormalizesAndPrefixes) {
  auto r = run({"ingest", "--kind", "tables", "--in", sample("tables.jsonl"), "--out", tmp("t.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("1 rows padded"), std::string::npos) << r.out;
  const auto first = nlohmann::json::parse(lines(slurp(tmp("t.jsonl"))).front());
  EXPECT_EQ(first["id"], "table:t1");
}

TEST_F(CliTest, IngestReportsBadLine) {
  std::ofstream(tmp("bad.jsonl")) << R"({"id": "a", "text": "x"})" << "\n{oops\n";
  auto r = run({"ingest", "--kind", "passages", "--in", tmp("bad.jsonl"), "--out", tmp("o.jsonl")});
  EXPECT_EQ(r.code, cli::kExitData);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(tmp("o.jsonl")));
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({}).code, cli::kExitUsage);
  EXPECT_EQ(run({"no-such-command"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"ingest", "--kind", "tables"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"index-sparse", "--out", tmp("x")}).code, cli::kExitUsage);
  EXPECT_EQ(run({"ingest", "--kind", "tables", "--in", tmp("missing.jsonl"), "--out", tmp("o")}).code,
            cli::kExitData);
}

TEST_F(CliTest, LinearizeWritesEveryDocument) {
  auto r = run({"linearize", "--passages", sample("passages.jsonl"), "--tables",
                sample("tables.jsonl"), "--out", tmp("lin.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto ls = lines(slurp(tmp("lin.jsonl")));
  ASSERT_EQ(ls.size(), 15u);
  const auto t1 = nlohmann::json::parse(ls[12]);
  EXPECT_EQ(t1["modality"], "table");
  EXPECT_EQ(t1["text"].get<std::string>().substr(0, 30), "FIFA World Cup | Finals | Worl");
}

TEST_F(CliTest, SparseIndexIsReproducible) {
  const auto a = build_sparse_index();
  const auto first = slurp(a);
  fs::rename(a, tmp("first.bmi"));
  const auto b = build_sparse_index();
  EXPECT_EQ(slurp(b), first);
  EXPECT_EQ(first.substr(0, 4), "BMI1");
}

TEST_F(CliTest, SearchSingleQueryWritesKLines) {
  const auto idx = build_sparse_index();
  auto r = run({"search", "--mode", "sparse", "--index", idx, "--query", "capital city", "--k", "10",
                "--out", tmp("hits.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto ls = lines(slurp(tmp("hits.jsonl")));
  ASSERT_EQ(ls.size(), 10u);
  double prev = 1e300;
  for (std::size_t i = 0; i < ls.size(); ++i) {
    const auto j = nlohmann::json::parse(ls[i]);
    EXPECT_EQ(j["rank"], i + 1);
    EXPECT_LE(j["score"].get<double>(), prev);
    prev = j["score"].get<double>();
  }
}

TEST_F(CliTest, SearchAndEvalEndToEnd) {
  const auto idx = build_sparse_index();
  auto r = run({"search", "--mode", "sparse", "--index", idx, "--queries", sample("queries.jsonl"),
                "--k", "20", "--out", tmp("run.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  r = run({"eval", "--run", tmp("run.jsonl"), "--queries", sample("queries.jsonl"), "--passages",
           sample("passages.jsonl"), "--tables", sample("tables.jsonl"), "--ks", "1,20",
           "--strata-out", tmp("strata.tsv"), "--out", tmp("report.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("using all"), std::string::npos) << r.out;
  const auto report = nlohmann::json::parse(slurp(tmp("report.json")));
  EXPECT_EQ(report["sampled_queries"], 6);
  EXPECT_EQ(report["rows"].back()["dataset"], "all");
  EXPECT_DOUBLE_EQ(report["rows"].back()["recall"]["20"].get<double>(), 1.0);
  EXPECT_TRUE(report.contains("stratified"));
  EXPECT_EQ(slurp(tmp("strata.tsv")).substr(0, 6), "lo\thi\t");

  // An explicit sample size larger than the query set is an error.
  r = run({"eval", "--run", tmp("run.jsonl"), "--queries", sample("queries.jsonl"), "--passages",
           sample("passages.jsonl"), "--sample-n", "50", "--out", tmp("r2.json")});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_FALSE(fs::exists(tmp("r2.json")));
}

TEST_F(CliTest, EvalGoldAtRankOneGivesFullRecall) {
  std::vector<QueryRun> runs;
  std::ifstream qin(sample("queries.jsonl"));
  for (const auto& q : ingest_queries(qin)) {
    runs.push_back({q.id, {{prefixed_id(*q.gold_ids.begin(), q.dataset == Dataset::NQ ? Modality::Text
                                                                                          : Modality::Table),
                            1.0, 1}}});
  }
  {
    std::ofstream out(tmp("gold_run.jsonl"));
    write_run(out, runs);
  }
  auto r = run({"eval", "--run", tmp("gold_run.jsonl"), "--queries", sample("queries.jsonl"),
                "--passages", sample("passages.jsonl"), "--tables", sample("tables.jsonl"), "--ks",
                "1", "--out", tmp("report.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = nlohmann::json::parse(slurp(tmp("report.json")));
  EXPECT_DOUBLE_EQ(report["rows"].back()["recall"]["1"].get<double>(), 1.0);
}

TEST_F(CliTest, DenseHashPipeline) {
  auto r = run({"embed-hash", "--passages", sample("passages.jsonl"), "--tables",
                sample("tables.jsonl"), "--dim", "64", "--out", tmp("docs.emb")});
  ASSERT_EQ(r.code, 0) << r.err;
  r = run({"index-dense", "--embeddings", tmp("docs.emb"), "--metric", "cosine", "--out",
           tmp("dense.emb")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(tmp("docs.emb")), slurp(tmp("dense.emb")));
  r = run({"search", "--mode", "dense", "--index", tmp("dense.emb"), "--metric", "cosine", "--query",
           "Lisbon is the capital city of Portugal. The city lies on the Tagus.", "--k", "3", "--out",
           tmp("hits.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto top = nlohmann::json::parse(lines(slurp(tmp("hits.jsonl"))).front());
  EXPECT_EQ(top["doc_id"], "text:p7");

  r = run({"embed-hash", "--queries", sample("queries.jsonl"), "--dim", "32", "--out", tmp("q.emb")});
  ASSERT_EQ(r.code, 0) << r.err;
  r = run({"index-dense", "--embeddings", tmp("docs.emb"), "--embeddings", tmp("q.emb"), "--out",
           tmp("bad.emb")});
  EXPECT_EQ(r.code, cli::kExitData);
  EXPECT_NE(r.err.find("dimension mismatch"), std::string::npos);
  EXPECT_FALSE(fs::exists(tmp("bad.emb")));

  std::ofstream(tmp("junk.emb")) << "NOPE0000000000000000";
  r = run({"search", "--mode", "dense", "--index", tmp("junk.emb"), "--query", "x", "--out",
           tmp("h2.jsonl")});
  EXPECT_EQ(r.code, cli::kExitData);
  EXPECT_NE(r.err.find("bad magic"), std::string::npos) << r.err;
}

TEST_F(CliTest, MineNegatives) {
  const auto idx = build_sparse_index();
  auto r = run({"mine-negatives", "--index", idx, "--passages", sample("passages.jsonl"), "--tables",
                sample("tables.jsonl"), "--queries", sample("queries.jsonl"), "--out",
                tmp("train.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto ls = lines(slurp(tmp("train.jsonl")));
  ASSERT_FALSE(ls.empty());
  for (const auto& l : ls) {
    const auto j = nlohmann::json::parse(l);
    EXPECT_NE(j["positive_id"], j["hard_negative_id"]);
  }
}

TEST_F(CliTest, BuildMixedAndFilterContext) {
  auto r = run({"build-mixed", "--passages", sample("passages.jsonl"), "--tables",
                sample("tables.jsonl"), "--queries", sample("queries.jsonl"), "--sample-size", "4",
                "--seed", "3", "--out-dir", tmp("mixed")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto ps = lines(slurp(tmp("mixed/passages.jsonl")));
  ASSERT_EQ(ps.size(), 4u);
  const auto all = slurp(tmp("mixed/passages.jsonl"));
  EXPECT_NE(all.find("text:p5"), std::string::npos);
  EXPECT_NE(all.find("text:p7"), std::string::npos);
  EXPECT_EQ(lines(slurp(tmp("mixed/tables.jsonl"))).size(), 3u);

  r = run({"filter-context", "--queries", sample("queries.jsonl"), "--labels",
           sample("context_labels.jsonl"), "--out", tmp("kept.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines(slurp(tmp("kept.jsonl"))).size(), 5u);
}

TEST_F(CliTest, OverlapReport) {
  auto r = run({"overlap-report", "--queries", sample("queries.jsonl"), "--passages",
                sample("passages.jsonl"), "--tables", sample("tables.jsonl"), "--out",
                tmp("overlap.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("complete overlap:"), std::string::npos);
  const auto j = nlohmann::json::parse(slurp(tmp("overlap.json")));
  EXPECT_EQ(j["per_query"].size(), 6u);
  EXPECT_EQ(j["bins"].size(), 5u);
}

TEST_F(CliTest, ConfigAndEnvironmentPrecedence) {
  std::ofstream(tmp("ttr.conf")) << "# settings\n[index-sparse]\nk1 = 0.5\n";
  auto params_of = [&](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::string head(24, '\0');
    in.read(head.data(), 24);
    double k1;
    std::memcpy(&k1, head.data() + 8, 8);
    return k1;
  };
  const std::vector<std::string> base{"index-sparse", "--passages", sample("passages.jsonl"), "--out",
                                      tmp("i.bmi")};
  auto with = [&](std::vector<std::string> extra) {
    std::vector<std::string> args{"--config", tmp("ttr.conf")};
    args.insert(args.end(), base.begin(), base.end());
    args.insert(args.end(), extra.begin(), extra.end());
    return args;
  };
  ASSERT_EQ(run(with({})).code, 0);
  EXPECT_DOUBLE_EQ(params_of(tmp("i.bmi")), 0.5);
  ::setenv("TTR_K1", "0.8", 1);
  ASSERT_EQ(run(with({})).code, 0);
  EXPECT_DOUBLE_EQ(params_of(tmp("i.bmi")), 0.8);
  ASSERT_EQ(run(with({"--k1", "1.7"})).code, 0);
  EXPECT_DOUBLE_EQ(params_of(tmp("i.bmi")), 1.7);
  ::unsetenv("TTR_K1");
  ASSERT_EQ(run(base).code, 0);
  EXPECT_DOUBLE_EQ(params_of(tmp("i.bmi")), 1.2);
}

TEST(ParseConfig, SectionsAndErrors) {
  const auto c = cli::parse_config("threads = 2\n\n[eval]\nsample_n = \"10\"\n");
  EXPECT_EQ(c.at("threads"), "2");
  EXPECT_EQ(c.at("eval.sample-n"), "10");
  EXPECT_THROW(cli::parse_config("no equals sign"), DataError);
}

TEST(CliHelp, MatchesGolden) {
  std::string all;
  auto help = [&](std::vector<std::string> args) {
    std::ostringstream out, err;
    EXPECT_EQ(cli::run_command(args, out, err), cli::kExitOk);
    all += "$ ttr";
    for (const auto& a : args) all += " " + a;
    all += "\n" + out.str() + "\n";
  };
  help({"--help"});
  for (const char* sub : {"ingest", "linearize", "index-sparse", "embed-hash", "index-dense", "search",
                          "mine-negatives", "build-mixed", "filter-context", "eval",
                          "overlap-report"}) {
    help({sub, "--help"});
  }
  const fs::path golden = fs::path(TTR_GOLDEN_DIR) / "help.txt";
  if (std::getenv("TTR_UPDATE_GOLDEN")) {
    std::ofstream(golden, std::ios::binary) << all;
    GTEST_SKIP() << "golden file regenerated";
  }
  ASSERT_TRUE(fs::exists(golden)) << "run with TTR_UPDATE_GOLDEN=1 to create " << golden;
  EXPECT_EQ(all, slurp(golden));
}
