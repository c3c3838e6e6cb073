#include "ttr/dataset_builder.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

#include "ttr/eval.hpp"
#include "ttr/io.hpp"
#include "ttr/parallel.hpp"
#include "ttr/random.hpp"

namespace ttr {

using nlohmann::json;

std::vector<Document> build_mixed_corpus(std::span<const Passage> passages,
                                         std::span<const Table> tables, std::size_t sample_size,
                                         const std::set<std::string>& required_ids,
                                         std::uint64_t seed) {
  if (sample_size > passages.size()) {
    throw std::invalid_argument("sample size " + std::to_string(sample_size) +
                                " exceeds passage count " + std::to_string(passages.size()));
  }
  std::unordered_set<std::string> table_ids;
  for (const auto& t : tables) table_ids.insert(t.id);

  std::vector<bool> selected(passages.size(), false);
  std::size_t required_passages = 0;
  std::unordered_set<std::string> found;
  for (std::size_t i = 0; i < passages.size(); ++i) {
    if (required_ids.contains(passages[i].id)) {
      selected[i] = true;
      ++required_passages;
      found.insert(passages[i].id);
    }
  }
  for (const auto& id : required_ids) {
    if (!found.contains(id) && !table_ids.contains(id)) {
      throw DataError("required id \"" + id + "\" is not in the passage or table inputs");
    }
  }
  if (required_passages > sample_size) {
    throw std::invalid_argument(std::to_string(required_passages) +
                                " required passages exceed sample size " +
                                std::to_string(sample_size));
  }

  std::vector<std::size_t> remaining;
  remaining.reserve(passages.size() - required_passages);
  for (std::size_t i = 0; i < passages.size(); ++i) {
    if (!selected[i]) remaining.push_back(i);
  }
  Rng rng(seed);
  for (auto j : sample_indices(remaining.size(), sample_size - required_passages, rng)) {
    selected[remaining[j]] = true;
  }

  std::vector<Document> out;
  out.reserve(sample_size + tables.size());
  for (std::size_t i = 0; i < passages.size(); ++i) {
    if (selected[i]) out.emplace_back(passages[i]);
  }
  for (const auto& t : tables) out.emplace_back(t);
  return out;
}

std::unordered_map<std::string, ContextLabel> read_context_labels(std::istream& in) {
  std::unordered_map<std::string, ContextLabel> out;
  for_each_jsonl(in, [&](const json& j, std::size_t) {
    const auto id = j.at("id").get<std::string>();
    const auto label = j.at("label").get<std::string>();
    ContextLabel value;
    if (label == "context_independent") {
      value = ContextLabel::ContextIndependent;
    } else if (label == "under_specified") {
      value = ContextLabel::UnderSpecified;
    } else {
      throw DataError("unknown label \"" + label + "\"");
    }
    if (!out.emplace(id, value).second) throw DataError("duplicate label for \"" + id + "\"");
  });
  return out;
}

std::unordered_map<std::string, ContextLabel> read_context_labels(
    const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_context_labels(in);
}

std::vector<QueryRecord> apply_context_filter(
    std::span<const QueryRecord> queries,
    const std::unordered_map<std::string, ContextLabel>& labels) {
  std::vector<QueryRecord> out;
  for (const auto& q : queries) {
    auto it = labels.find(q.id);
    if (it == labels.end()) throw DataError("query \"" + q.id + "\" has no context label");
    if (it->second == ContextLabel::ContextIndependent) out.push_back(q);
  }
  return out;
}

std::vector<QueryRecord> apply_context_filter(std::span<const QueryRecord> queries,
                                              const std::filesystem::path& labels) {
  return apply_context_filter(queries, read_context_labels(labels));
}

std::string mine_hard_negative(const QueryRecord& query, const Bm25Index& index,
                               const Corpus& corpus, std::size_t max_candidates) {
  if (max_candidates == 0) throw std::invalid_argument("max_candidates must be >= 1");
  for (const auto& hit : index.search(query.question, max_candidates)) {
    if (query.gold_ids.contains(hit.doc_id)) continue;
    const Document* doc = corpus.find(hit.doc_id);
    if (!doc) throw DataError("index document \"" + hit.doc_id + "\" missing from corpus");
    if (contains_answer(doc->linearized(), query.answers)) continue;
    return hit.doc_id;
  }
  throw NoNegativeFound(query.id);
}

MiningResult build_training_samples(std::span<const QueryRecord> queries, const Bm25Index& index,
                                    const Corpus& corpus, std::size_t max_candidates,
                                    unsigned threads) {
  enum class Outcome { Ok, NoPositive, NoNegative };
  std::vector<Outcome> outcome(queries.size(), Outcome::Ok);
  std::vector<TrainingSample> mined(queries.size());

  parallel_for(queries.size(), threads, [&](std::size_t i) {
    const auto& q = queries[i];
    const Document* positive = nullptr;
    for (const auto& g : q.gold_ids) {
      if ((positive = corpus.find(g))) break;
    }
    if (!positive) {
      outcome[i] = Outcome::NoPositive;
      return;
    }
    try {
      const auto negative_id = mine_hard_negative(q, index, corpus, max_candidates);
      mined[i] = {q.id,
                  q.question,
                  positive->id(),
                  negative_id,
                  positive->modality(),
                  corpus.find(negative_id)->modality()};
    } catch (const NoNegativeFound&) {
      outcome[i] = Outcome::NoNegative;
    }
  });

  MiningResult result;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    switch (outcome[i]) {
      case Outcome::Ok: result.samples.push_back(std::move(mined[i])); break;
      case Outcome::NoPositive: ++result.no_positive; break;
      case Outcome::NoNegative: ++result.no_negative; break;
    }
  }
  return result;
}

void write_training_samples(std::ostream& out, std::span<const TrainingSample> samples) {
  for (const auto& s : samples) {
    json j = {{"question", s.question},
              {"positive_id", s.positive_id},
              {"hard_negative_id", s.hard_negative_id},
              {"positive_modality", to_string(s.positive_modality)},
              {"negative_modality", to_string(s.negative_modality)}};
    out << j.dump() << '\n';
  }
}

}  // namespace ttr
