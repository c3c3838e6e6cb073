#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace ttr {

enum class Modality { Text, Table };

std::string_view to_string(Modality m);

struct Passage {
  std::string id;
  std::string title;
  std::string body;
};

struct Table {
  std::string id;
  std::string page_title;
  std::string section_title;
  std::string caption;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline constexpr std::string_view kTextPrefix = "text:";
inline constexpr std::string_view kTablePrefix = "table:";
inline constexpr std::string_view kSegmentSeparator = " | ";
inline constexpr std::string_view kCellSeparator = " , ";

/// Flattens a passage or table into one line of text.
///
/// Segments (titles, caption, header row, each data row) are joined with
/// " | " and cells within a row with " , ". Empty segments are skipped, so an
/// empty caption never produces a doubled separator. A literal '|' in any
/// field is replaced by '/' so that segment boundaries stay unambiguous.
std::string linearize(const Passage& p);
std::string linearize(const Table& t);

/// A passage or a table plus its cached linearized text.
class Document {
 public:
  explicit Document(Passage p);
  explicit Document(Table t);

  Modality modality() const noexcept;
  const std::string& id() const noexcept;
  const std::string& linearized() const noexcept { return linearized_; }

  const Passage* passage() const noexcept { return std::get_if<Passage>(&content_); }
  const Table* table() const noexcept { return std::get_if<Table>(&content_); }
  const std::variant<Passage, Table>& content() const noexcept { return content_; }

 private:
  std::variant<Passage, Table> content_;
  std::string linearized_;
};

std::string linearize(const Document& d);

/// Id-addressable, immutable document collection. Ids are unique across
/// both modalities.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<Document> docs);
  static Corpus from(std::span<const Passage> passages, std::span<const Table> tables);

  std::size_t size() const noexcept { return docs_.size(); }
  bool empty() const noexcept { return docs_.empty(); }
  const Document& operator[](std::size_t i) const { return docs_[i]; }
  std::span<const Document> documents() const noexcept { return docs_; }

  const Document* find(std::string_view id) const;
  bool contains(std::string_view id) const { return find(id) != nullptr; }

 private:
  std::vector<Document> docs_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

enum class Dataset { NQ, NQTables, WikiSQL, WikiSQLCtx, OTTQA, MultiModal };
enum class MatchProtocol { AnswerString, GoldId };

std::string_view to_string(Dataset d);
std::string_view to_string(MatchProtocol p);
/// Accepts the canonical names case-insensitively, ignoring '-' and '_'
/// (so "nq_tables", "NQ-Tables" and "NQTables" are all NQTables).
std::optional<Dataset> parse_dataset(std::string_view s);
std::optional<MatchProtocol> parse_protocol(std::string_view s);

struct QueryRecord {
  std::string id;
  std::string question;
  Dataset dataset = Dataset::NQ;
  std::set<std::string> gold_ids;
  std::vector<std::string> answers;
  MatchProtocol protocol = MatchProtocol::AnswerString;
  std::optional<std::vector<std::string>> hard_negative_ids;
};

/// Pads `row` with empty cells or truncates it to `arity`.
/// Returns the number of cells dropped.
std::size_t normalize_row(std::vector<std::string>& row, std::size_t arity);

struct IngestWarnings {
  std::size_t padded_rows = 0;
  std::size_t truncated_rows = 0;
};

/// Adds the modality prefix unless the id already carries one.
std::string prefixed_id(std::string_view id, Modality m);

std::vector<Passage> ingest_passages(std::istream& in);
std::vector<Passage> ingest_passages(const std::filesystem::path& path);
std::vector<Table> ingest_tables(std::istream& in, IngestWarnings* warnings = nullptr);
std::vector<Table> ingest_tables(const std::filesystem::path& path,
                                 IngestWarnings* warnings = nullptr);
std::vector<QueryRecord> ingest_queries(std::istream& in);
std::vector<QueryRecord> ingest_queries(const std::filesystem::path& path);

void write_passages(std::ostream& out, std::span<const Passage> passages);
void write_tables(std::ostream& out, std::span<const Table> tables);
void write_queries(std::ostream& out, std::span<const QueryRecord> queries);

/// Rewrites gold and hard-negative ids that lack a modality prefix to the
/// prefixed id present in `corpus`. Ids found under neither prefix are left
/// untouched; ids found under both raise DataError.
void resolve_query_ids(std::vector<QueryRecord>& queries, const Corpus& corpus);

}  // namespace ttr
