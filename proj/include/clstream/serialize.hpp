#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "clstream/matrix.hpp"

namespace cl {

class Dataset;
class Rng;

/// Little-endian binary encoder. Doubles are stored as their IEEE-754 bits.
class BinaryWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v);
  void str(std::string_view s);
  void raw(std::string_view bytes) { buf_.append(bytes); }
  void matrix(const Matrix& m);
  void rng(const Rng& r);
  void dataset(const Dataset& d);

  const std::string& bytes() const { return buf_; }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

/// Decoder matching BinaryWriter. Any read past the end is a FormatError.
class BinaryReader {
 public:
  explicit BinaryReader(std::string_view bytes) : data_(bytes) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64();
  std::string str();
  std::string_view raw(std::size_t n);
  Matrix matrix();
  void rng(Rng& r);
  Dataset dataset();

  bool at_end() const { return pos_ == data_.size(); }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const;

  std::string_view data_;
  std::size_t pos_ = 0;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace cl
