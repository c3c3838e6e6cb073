#include "ttr/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <system_error>

#include <unistd.h>

#include "ttr/error.hpp"

namespace ttr {

void for_each_jsonl(std::istream& in,
                    const std::function<void(const nlohmann::json&, std::size_t)>& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;

    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError("line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
    }
    const std::string prefix = "line " + std::to_string(line_no) + ": ";
    try {
      fn(record, line_no);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(prefix + e.what());
    } catch (const DataError& e) {
      if (std::string_view(e.what()).starts_with("line ")) throw;
      throw DataError(prefix + e.what());
    }
  }
}

std::ifstream open_input(const std::filesystem::path& path, bool binary) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

AtomicFile::AtomicFile(std::filesystem::path path, bool binary)
    : path_(std::move(path)),
      tmp_(path_.string() + ".tmp." + std::to_string(::getpid())),
      out_(tmp_, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc) {
  if (!out_) throw DataError("cannot write " + tmp_.string());
}

AtomicFile::~AtomicFile() {
  if (!committed_) {
    out_.close();
    std::error_code ec;
    std::filesystem::remove(tmp_, ec);
  }
}

void AtomicFile::commit() {
  out_.flush();
  if (!out_) throw DataError("write failed: " + tmp_.string());
  out_.close();
  std::error_code ec;
  std::filesystem::rename(tmp_, path_, ec);
  if (ec) throw DataError("cannot rename " + tmp_.string() + ": " + ec.message());
  committed_ = true;
}

namespace le {
namespace {

template <typename U>
void put_uint(std::ostream& out, U v) {
  std::array<char, sizeof(U)> buf;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  }
  out.write(buf.data(), buf.size());
}

template <typename U>
U get_uint(std::istream& in, std::string_view what) {
  std::array<unsigned char, sizeof(U)> buf;
  get_bytes(in, reinterpret_cast<char*>(buf.data()), buf.size(), what);
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

void put_u16(std::ostream& out, std::uint16_t v) { put_uint(out, v); }
void put_u32(std::ostream& out, std::uint32_t v) { put_uint(out, v); }
void put_u64(std::ostream& out, std::uint64_t v) { put_uint(out, v); }
void put_f32(std::ostream& out, float v) { put_uint(out, std::bit_cast<std::uint32_t>(v)); }
void put_f64(std::ostream& out, double v) { put_uint(out, std::bit_cast<std::uint64_t>(v)); }

void get_bytes(std::istream& in, char* dst, std::size_t n, std::string_view what) {
  if (n == 0) return;
  in.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw FormatError(FormatErrorKind::Truncated,
                      "truncated file while reading " + std::string(what));
  }
}

void expect_magic(std::istream& in, const char (&magic)[4], std::string_view format) {
  char got[4] = {};
  in.read(got, sizeof got);
  const auto n = static_cast<std::size_t>(in.gcount());
  if (!std::equal(got, got + n, magic)) {
    throw FormatError(FormatErrorKind::BadMagic,
                      "bad magic: not a " + std::string(format) + " file");
  }
  if (n != sizeof got) {
    throw FormatError(FormatErrorKind::Truncated, "truncated file while reading magic");
  }
}

std::uint16_t get_u16(std::istream& in, std::string_view what) {
  return get_uint<std::uint16_t>(in, what);
}
std::uint32_t get_u32(std::istream& in, std::string_view what) {
  return get_uint<std::uint32_t>(in, what);
}
std::uint64_t get_u64(std::istream& in, std::string_view what) {
  return get_uint<std::uint64_t>(in, what);
}
float get_f32(std::istream& in, std::string_view what) {
  return std::bit_cast<float>(get_uint<std::uint32_t>(in, what));
}
double get_f64(std::istream& in, std::string_view what) {
  return std::bit_cast<double>(get_uint<std::uint64_t>(in, what));
}

}  // namespace le
}  // namespace ttr
