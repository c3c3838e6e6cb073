#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <string>
#include <string_view>

#include <json.hpp>

namespace ttr {

/// Calls `fn(record, line_number)` for every non-blank line of a JSONL stream.
/// Line numbers are 1-based. A line that is not valid JSON raises DataError
/// with "line N" in the message; exceptions thrown by `fn` are rethrown with
/// the same prefix unless they already carry it.
void for_each_jsonl(std::istream& in,
                    const std::function<void(const nlohmann::json&, std::size_t)>& fn);

std::ifstream open_input(const std::filesystem::path& path, bool binary = false);

/// Writes to `<path>.tmp.<pid>` and renames over `path` on commit().
/// Destroying an uncommitted writer removes the temporary file.
class AtomicFile {
 public:
  explicit AtomicFile(std::filesystem::path path, bool binary = false);
  AtomicFile(const AtomicFile&) = delete;
  AtomicFile& operator=(const AtomicFile&) = delete;
  ~AtomicFile();

  std::ostream& stream() { return out_; }
  void commit();

 private:
  std::filesystem::path path_;
  std::filesystem::path tmp_;
  std::ofstream out_;
  bool committed_ = false;
};

/// Little-endian primitive encoding shared by the binary formats.
namespace le {

void put_u16(std::ostream& out, std::uint16_t v);
void put_u32(std::ostream& out, std::uint32_t v);
void put_u64(std::ostream& out, std::uint64_t v);
void put_f32(std::ostream& out, float v);
void put_f64(std::ostream& out, double v);

/// Readers throw FormatError(Truncated) when the stream ends early.
std::uint16_t get_u16(std::istream& in, std::string_view what);
std::uint32_t get_u32(std::istream& in, std::string_view what);
std::uint64_t get_u64(std::istream& in, std::string_view what);
float get_f32(std::istream& in, std::string_view what);
double get_f64(std::istream& in, std::string_view what);
void get_bytes(std::istream& in, char* dst, std::size_t n, std::string_view what);
/// Reads a 4-byte magic. A short read that is a prefix of `magic` is
/// Truncated; any other mismatch is BadMagic naming `format`.
void expect_magic(std::istream& in, const char (&magic)[4], std::string_view format);

}  // namespace le

}  // namespace ttr
