#include "clstream/serialize.hpp"

#include <bit>
#include <cstring>

#include "clstream/dataset.hpp"
#include "clstream/error.hpp"
#include "clstream/rng.hpp"

namespace cl {

void BinaryWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void BinaryWriter::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void BinaryWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void BinaryWriter::str(std::string_view s) {
  u64(s.size());
  buf_.append(s);
}

void BinaryWriter::matrix(const Matrix& m) {
  u64(m.rows());
  u64(m.cols());
  for (double v : m.values()) f64(v);
}

void BinaryWriter::rng(const Rng& r) { str(r.save_state()); }

void BinaryWriter::dataset(const Dataset& d) {
  const bool schemaless = d.empty() && d.feature_dim() == 0;
  u8(schemaless ? 0 : 1);
  if (schemaless) return;
  u64(d.size());
  u64(d.feature_dim());
  for (std::size_t i = 0; i < d.size(); ++i)
    for (double v : d.raw_row(i)) f64(v);
  for (ClassId t : d.targets()) i64(t);
  u64(d.attributes().size());
  for (const auto& [name, column] : d.attributes()) {
    str(name);
    for (std::int64_t v : column) i64(v);
  }
  u64(d.transform_groups().size());
  for (const auto& [name, spec] : d.transform_groups()) {
    str(name);
    f64(spec.scale);
    f64(spec.shift);
  }
  str(d.active_transform_group());
}

void BinaryReader::need(std::size_t n) const {
  if (data_.size() - pos_ < n) throw FormatError("unexpected end of data");
}

std::uint8_t BinaryReader::u8() {
  need(1);
  return static_cast<std::uint8_t>(data_[pos_++]);
}

std::uint32_t BinaryReader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t{static_cast<unsigned char>(data_[pos_++])} << (8 * i);
  return v;
}

std::uint64_t BinaryReader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{static_cast<unsigned char>(data_[pos_++])} << (8 * i);
  return v;
}

double BinaryReader::f64() { return std::bit_cast<double>(u64()); }

std::string BinaryReader::str() {
  const std::uint64_t n = u64();
  return std::string(raw(n));
}

std::string_view BinaryReader::raw(std::size_t n) {
  need(n);
  auto out = data_.substr(pos_, n);
  pos_ += n;
  return out;
}

Matrix BinaryReader::matrix() {
  const std::uint64_t rows = u64(), cols = u64();
  if (cols != 0 && rows > remaining() / 8 / cols) throw FormatError("matrix larger than remaining data");
  Matrix m(rows, cols);
  for (double& v : m.values()) v = f64();
  return m;
}

void BinaryReader::rng(Rng& r) { r.load_state(str()); }

Dataset BinaryReader::dataset() {
  if (u8() == 0) return {};
  const std::uint64_t n = u64(), dim = u64();
  if (dim != 0 && n > remaining() / 8 / dim) throw FormatError("dataset larger than remaining data");
  Matrix raw(n, dim);
  for (double& v : raw.values()) v = f64();
  std::vector<ClassId> targets(n);
  for (auto& t : targets) t = static_cast<ClassId>(i64());
  Dataset d(std::move(raw), std::move(targets));
  const std::uint64_t n_attr = u64();
  for (std::uint64_t a = 0; a < n_attr; ++a) {
    std::string name = str();
    Attribute col(n);
    for (auto& v : col) v = i64();
    d = with_attribute(d, name, std::move(col));
  }
  const std::uint64_t n_groups = u64();
  for (std::uint64_t g = 0; g < n_groups; ++g) {
    std::string name = str();
    TransformSpec spec;
    spec.scale = f64();
    spec.shift = f64();
    d = register_transform_group(d, name, spec);
  }
  return with_transform_group(d, str());
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace cl
