#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "biag/num/matrix.hpp"

namespace biag::io {

/// Appends little-endian scalars to a byte buffer.
class ByteWriter {
 public:
  void bytes(std::string_view raw);
  void u8(std::uint8_t v);
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void f64(double v);
  /// u32 rows, u32 cols, then rows·cols f64 in row-major order.
  void matrix(const num::Matrix& m);
  /// Raw f64 payload without a shape header.
  void f64_span(std::span<const double> values);

  const std::vector<char>& buffer() const noexcept { return buf_; }
  std::vector<char> take() noexcept { return std::move(buf_); }

 private:
  std::vector<char> buf_;
};

/// Bounds-checked little-endian reader. Every failure throws FormatError
/// carrying the byte offset where it occurred.
class ByteReader {
 public:
  explicit ByteReader(std::span<const char> data) : data_(data) {}

  std::string bytes(std::size_t n, std::string_view what);
  std::uint8_t u8(std::string_view what);
  std::uint16_t u16(std::string_view what);
  std::uint32_t u32(std::string_view what);
  double f64(std::string_view what);
  num::Matrix matrix(std::string_view what);
  num::Matrix matrix_payload(std::size_t rows, std::size_t cols, std::string_view what);

  std::size_t offset() const noexcept { return pos_; }
  bool at_end() const noexcept { return pos_ == data_.size(); }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }

 private:
  void need(std::size_t n, std::string_view what);

  std::span<const char> data_;
  std::size_t pos_ = 0;
};

std::vector<char> read_file(const std::filesystem::path& path);

/// Writes to `<path>.tmp-<pid>` then renames over `path`, so readers never
/// observe a partially written file. `fail_after_bytes` is a test hook that
/// simulates a crash mid-write: the temp file is left truncated, the target
/// is untouched, and IoError is thrown.
void atomic_write_file(const std::filesystem::path& path, std::span<const char> data,
                       std::ptrdiff_t fail_after_bytes = -1);
void atomic_write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace biag::io
