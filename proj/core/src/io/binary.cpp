#include "biag/io/binary.hpp"

#include <unistd.h>

#include <bit>
#include <cstring>
#include <fstream>

#include "biag/error.hpp"

namespace biag::io {

static_assert(std::endian::native == std::endian::little,
              "binary formats are little-endian; add byte swapping for this target");

namespace {

template <typename T>
void put(std::vector<char>& buf, T v) {
  char raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  buf.insert(buf.end(), raw, raw + sizeof(T));
}

}  // namespace

void ByteWriter::bytes(std::string_view raw) { buf_.insert(buf_.end(), raw.begin(), raw.end()); }
void ByteWriter::u8(std::uint8_t v) { put(buf_, v); }
void ByteWriter::u16(std::uint16_t v) { put(buf_, v); }
void ByteWriter::u32(std::uint32_t v) { put(buf_, v); }
void ByteWriter::f64(double v) { put(buf_, v); }

void ByteWriter::matrix(const num::Matrix& m) {
  u32(static_cast<std::uint32_t>(m.rows()));
  u32(static_cast<std::uint32_t>(m.cols()));
  f64_span(m.data());
}

void ByteWriter::f64_span(std::span<const double> values) {
  const auto* p = reinterpret_cast<const char*>(values.data());
  buf_.insert(buf_.end(), p, p + values.size_bytes());
}

void ByteReader::need(std::size_t n, std::string_view what) {
  if (data_.size() - pos_ < n) {
    throw FormatError("truncated file while reading " + std::string(what), pos_);
  }
}

std::string ByteReader::bytes(std::size_t n, std::string_view what) {
  need(n, what);
  std::string out(data_.data() + pos_, n);
  pos_ += n;
  return out;
}

#define BIAG_READ_SCALAR(T)             \
  need(sizeof(T), what);                \
  T v;                                  \
  std::memcpy(&v, data_.data() + pos_, sizeof(T)); \
  pos_ += sizeof(T);                    \
  return v

std::uint8_t ByteReader::u8(std::string_view what) { BIAG_READ_SCALAR(std::uint8_t); }
std::uint16_t ByteReader::u16(std::string_view what) { BIAG_READ_SCALAR(std::uint16_t); }
std::uint32_t ByteReader::u32(std::string_view what) { BIAG_READ_SCALAR(std::uint32_t); }
double ByteReader::f64(std::string_view what) { BIAG_READ_SCALAR(double); }

#undef BIAG_READ_SCALAR

num::Matrix ByteReader::matrix(std::string_view what) {
  const std::uint32_t rows = u32(what);
  const std::uint32_t cols = u32(what);
  return matrix_payload(rows, cols, what);
}

num::Matrix ByteReader::matrix_payload(std::size_t rows, std::size_t cols, std::string_view what) {
  const std::size_t count = rows * cols;
  if (cols != 0 && count / cols != rows) throw FormatError("matrix shape overflows", pos_);
  if (count > remaining() / sizeof(double)) {
    throw FormatError("truncated file while reading " + std::string(what) + " payload", pos_);
  }
  std::vector<double> values(count);
  std::memcpy(values.data(), data_.data() + pos_, count * sizeof(double));
  pos_ += count * sizeof(double);
  return num::Matrix(rows, cols, std::move(values));
}

std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void atomic_write_file(const std::filesystem::path& path, std::span<const char> data,
                       std::ptrdiff_t fail_after_bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp-" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    if (fail_after_bytes >= 0 && static_cast<std::size_t>(fail_after_bytes) < data.size()) {
      out.write(data.data(), fail_after_bytes);
      out.close();
      throw IoError("simulated interruption while writing " + path.string());
    }
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

void atomic_write_text(const std::filesystem::path& path, std::string_view text) {
  atomic_write_file(path, std::span<const char>(text.data(), text.size()));
}

}  // namespace biag::io
