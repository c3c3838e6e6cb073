#include "ttr/corpus.hpp"

#include <algorithm>
#include <cctype>

#include <json.hpp>

#include "ttr/error.hpp"
#include "ttr/io.hpp"

namespace ttr {

using nlohmann::json;

namespace {

std::string escape_field(std::string_view s) {
  std::string out(s);
  std::replace(out.begin(), out.end(), '|', '/');
  return out;
}

void append_segment(std::string& out, std::string_view segment) {
  if (segment.empty()) return;
  if (!out.empty()) out += kSegmentSeparator;
  out += segment;
}

std::string join_row(const std::vector<std::string>& cells) {
  if (std::all_of(cells.begin(), cells.end(), [](const auto& c) { return c.empty(); })) {
    return {};
  }
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) out += kCellSeparator;
    out += escape_field(cells[i]);
  }
  return out;
}

std::string required_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw DataError(std::string("missing field \"") + key + "\"");
  if (!it->is_string()) throw DataError(std::string("field \"") + key + "\" must be a string");
  return it->get<std::string>();
}

std::string optional_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return {};
  if (!it->is_string()) throw DataError(std::string("field \"") + key + "\" must be a string");
  return it->get<std::string>();
}

std::vector<std::string> string_list(const json& j, const char* key, bool required) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    if (required) throw DataError(std::string("missing field \"") + key + "\"");
    return {};
  }
  if (!it->is_array()) throw DataError(std::string("field \"") + key + "\" must be a list");
  std::vector<std::string> out;
  out.reserve(it->size());
  for (const auto& v : *it) {
    // Table cells occasionally arrive as numbers in converted dumps.
    if (v.is_string()) {
      out.push_back(v.get<std::string>());
    } else if (v.is_number()) {
      out.push_back(v.dump());
    } else if (v.is_null()) {
      out.emplace_back();
    } else {
      throw DataError(std::string("field \"") + key + "\" must contain strings");
    }
  }
  return out;
}

void check_unique(std::unordered_map<std::string, std::size_t>& seen, const std::string& id,
                  std::size_t line_no) {
  auto [it, inserted] = seen.emplace(id, line_no);
  if (!inserted) {
    throw DataError("duplicate id \"" + id + "\" (first seen on line " +
                    std::to_string(it->second) + ")");
  }
}

std::string canonical_key(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '-' || c == '_' || c == ' ') continue;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

}  // namespace

std::string_view to_string(Modality m) {
  return m == Modality::Text ? "text" : "table";
}

std::string linearize(const Passage& p) {
  std::string out;
  append_segment(out, escape_field(p.title));
  append_segment(out, escape_field(p.body));
  return out;
}

std::string linearize(const Table& t) {
  std::string out;
  append_segment(out, escape_field(t.page_title));
  append_segment(out, escape_field(t.section_title));
  append_segment(out, escape_field(t.caption));
  append_segment(out, join_row(t.header));
  for (const auto& row : t.rows) append_segment(out, join_row(row));
  return out;
}

Document::Document(Passage p) : content_(std::move(p)) {
  linearized_ = ttr::linearize(std::get<Passage>(content_));
}

Document::Document(Table t) : content_(std::move(t)) {
  linearized_ = ttr::linearize(std::get<Table>(content_));
}

Modality Document::modality() const noexcept {
  return std::holds_alternative<Passage>(content_) ? Modality::Text : Modality::Table;
}

const std::string& Document::id() const noexcept {
  return std::visit([](const auto& v) -> const std::string& { return v.id; }, content_);
}

std::string linearize(const Document& d) {
  return std::visit([](const auto& v) { return ttr::linearize(v); }, d.content());
}

Corpus::Corpus(std::vector<Document> docs) : docs_(std::move(docs)) {
  by_id_.reserve(docs_.size());
  for (std::size_t i = 0; i < docs_.size(); ++i) {
    const auto& id = docs_[i].id();
    if (id.empty()) throw DataError("document " + std::to_string(i) + " has an empty id");
    if (!by_id_.emplace(id, i).second) throw DataError("duplicate document id \"" + id + "\"");
  }
}

Corpus Corpus::from(std::span<const Passage> passages, std::span<const Table> tables) {
  std::vector<Document> docs;
  docs.reserve(passages.size() + tables.size());
  for (const auto& p : passages) docs.emplace_back(p);
  for (const auto& t : tables) docs.emplace_back(t);
  return Corpus(std::move(docs));
}

const Document* Corpus::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &docs_[it->second];
}

std::string_view to_string(Dataset d) {
  switch (d) {
    case Dataset::NQ: return "NQ";
    case Dataset::NQTables: return "NQTables";
    case Dataset::WikiSQL: return "WikiSQL";
    case Dataset::WikiSQLCtx: return "WikiSQLCtx";
    case Dataset::OTTQA: return "OTTQA";
    case Dataset::MultiModal: return "MultiModal";
  }
  return "?";
}

std::string_view to_string(MatchProtocol p) {
  return p == MatchProtocol::AnswerString ? "answer_string" : "gold_id";
}

std::optional<Dataset> parse_dataset(std::string_view s) {
  const std::string key = canonical_key(s);
  for (auto d : {Dataset::NQ, Dataset::NQTables, Dataset::WikiSQL, Dataset::WikiSQLCtx,
                 Dataset::OTTQA, Dataset::MultiModal}) {
    if (canonical_key(to_string(d)) == key) return d;
  }
  if (key == "wikisqlctxindependent") return Dataset::WikiSQLCtx;
  if (key == "multimodalretrieval") return Dataset::MultiModal;
  return std::nullopt;
}

std::optional<MatchProtocol> parse_protocol(std::string_view s) {
  if (s == "answer_string") return MatchProtocol::AnswerString;
  if (s == "gold_id") return MatchProtocol::GoldId;
  return std::nullopt;
}

std::size_t normalize_row(std::vector<std::string>& row, std::size_t arity) {
  std::size_t dropped = row.size() > arity ? row.size() - arity : 0;
  row.resize(arity);
  return dropped;
}

std::string prefixed_id(std::string_view id, Modality m) {
  if (id.starts_with(kTextPrefix) || id.starts_with(kTablePrefix)) return std::string(id);
  return std::string(m == Modality::Text ? kTextPrefix : kTablePrefix) + std::string(id);
}

std::vector<Passage> ingest_passages(std::istream& in) {
  std::vector<Passage> out;
  std::unordered_map<std::string, std::size_t> seen;
  for_each_jsonl(in, [&](const json& j, std::size_t line_no) {
    if (!j.is_object()) throw DataError("expected a JSON object");
    Passage p;
    p.id = required_string(j, "id");
    if (p.id.empty()) throw DataError("empty id");
    p.id = prefixed_id(p.id, Modality::Text);
    p.title = optional_string(j, "title");
    p.body = required_string(j, "text");
    if (p.body.empty()) throw DataError("passage \"" + p.id + "\" has an empty text");
    check_unique(seen, p.id, line_no);
    out.push_back(std::move(p));
  });
  return out;
}

std::vector<Passage> ingest_passages(const std::filesystem::path& path) {
  auto in = open_input(path);
  return ingest_passages(in);
}

std::vector<Table> ingest_tables(std::istream& in, IngestWarnings* warnings) {
  std::vector<Table> out;
  std::unordered_map<std::string, std::size_t> seen;
  IngestWarnings local;
  for_each_jsonl(in, [&](const json& j, std::size_t line_no) {
    if (!j.is_object()) throw DataError("expected a JSON object");
    Table t;
    t.id = required_string(j, "id");
    if (t.id.empty()) throw DataError("empty id");
    t.id = prefixed_id(t.id, Modality::Table);
    t.page_title = optional_string(j, "page_title");
    t.section_title = optional_string(j, "section_title");
    t.caption = optional_string(j, "caption");
    t.header = string_list(j, "header", true);
    if (t.header.empty()) throw DataError("table \"" + t.id + "\" has an empty header");

    auto rows_it = j.find("rows");
    if (rows_it != j.end() && !rows_it->is_null()) {
      if (!rows_it->is_array()) throw DataError("field \"rows\" must be a list of lists");
      for (const auto& r : *rows_it) {
        json wrapper = {{"row", r}};
        auto row = string_list(wrapper, "row", true);
        if (row.size() < t.header.size()) ++local.padded_rows;
        if (normalize_row(row, t.header.size()) > 0) ++local.truncated_rows;
        t.rows.push_back(std::move(row));
      }
    }
    check_unique(seen, t.id, line_no);
    out.push_back(std::move(t));
  });
  if (warnings) *warnings = local;
  return out;
}

std::vector<Table> ingest_tables(const std::filesystem::path& path, IngestWarnings* warnings) {
  auto in = open_input(path);
  return ingest_tables(in, warnings);
}

std::vector<QueryRecord> ingest_queries(std::istream& in) {
  std::vector<QueryRecord> out;
  std::unordered_map<std::string, std::size_t> seen;
  for_each_jsonl(in, [&](const json& j, std::size_t line_no) {
    if (!j.is_object()) throw DataError("expected a JSON object");
    QueryRecord q;
    q.id = required_string(j, "id");
    if (q.id.empty()) throw DataError("empty id");
    q.question = required_string(j, "question");

    const auto dataset = required_string(j, "dataset");
    auto ds = parse_dataset(dataset);
    if (!ds) throw DataError("unknown dataset \"" + dataset + "\"");
    q.dataset = *ds;

    for (auto& g : string_list(j, "gold_ids", false)) q.gold_ids.insert(std::move(g));
    q.answers = string_list(j, "answers", false);

    const auto protocol = required_string(j, "protocol");
    auto proto = parse_protocol(protocol);
    if (!proto) throw DataError("unknown protocol \"" + protocol + "\"");
    q.protocol = *proto;
    if (q.protocol == MatchProtocol::AnswerString && q.answers.empty()) {
      throw DataError("query \"" + q.id + "\" uses answer_string but has no answers");
    }
    if (q.protocol == MatchProtocol::GoldId && q.gold_ids.empty()) {
      throw DataError("query \"" + q.id + "\" uses gold_id but has no gold_ids");
    }
    if (j.contains("hard_negative_ids") && !j["hard_negative_ids"].is_null()) {
      q.hard_negative_ids = string_list(j, "hard_negative_ids", true);
    }
    check_unique(seen, q.id, line_no);
    out.push_back(std::move(q));
  });
  return out;
}

std::vector<QueryRecord> ingest_queries(const std::filesystem::path& path) {
  auto in = open_input(path);
  return ingest_queries(in);
}

void write_passages(std::ostream& out, std::span<const Passage> passages) {
  for (const auto& p : passages) {
    out << json{{"id", p.id}, {"title", p.title}, {"text", p.body}}.dump() << '\n';
  }
}

void write_tables(std::ostream& out, std::span<const Table> tables) {
  for (const auto& t : tables) {
    json j = {{"id", t.id},         {"page_title", t.page_title},
              {"section_title", t.section_title}, {"caption", t.caption},
              {"header", t.header}, {"rows", t.rows}};
    out << j.dump() << '\n';
  }
}

void write_queries(std::ostream& out, std::span<const QueryRecord> queries) {
  for (const auto& q : queries) {
    json j = {{"id", q.id},
              {"question", q.question},
              {"dataset", to_string(q.dataset)},
              {"gold_ids", q.gold_ids},
              {"answers", q.answers},
              {"protocol", to_string(q.protocol)}};
    if (q.hard_negative_ids) j["hard_negative_ids"] = *q.hard_negative_ids;
    out << j.dump() << '\n';
  }
}

namespace {

std::string resolve_one(const std::string& id, const Corpus& corpus) {
  if (corpus.contains(id) || id.starts_with(kTextPrefix) || id.starts_with(kTablePrefix)) {
    return id;
  }
  const std::string as_text = std::string(kTextPrefix) + id;
  const std::string as_table = std::string(kTablePrefix) + id;
  const bool text = corpus.contains(as_text);
  const bool table = corpus.contains(as_table);
  if (text && table) throw DataError("ambiguous unprefixed id \"" + id + "\"");
  if (text) return as_text;
  if (table) return as_table;
  return id;
}

}  // namespace

void resolve_query_ids(std::vector<QueryRecord>& queries, const Corpus& corpus) {
  for (auto& q : queries) {
    std::set<std::string> gold;
    for (const auto& g : q.gold_ids) gold.insert(resolve_one(g, corpus));
    q.gold_ids = std::move(gold);
    if (q.hard_negative_ids) {
      for (auto& h : *q.hard_negative_ids) h = resolve_one(h, corpus);
    }
  }
}

}  // namespace ttr
