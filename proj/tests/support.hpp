#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "clstream/matrix.hpp"
#include "clstream/rng.hpp"

namespace test {

inline cl::Matrix random_matrix(std::size_t rows, std::size_t cols, cl::Rng& rng, double lo = -1.0, double hi = 1.0) {
  cl::Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(lo, hi);
  return m;
}

/// |a - b| / max(|a|, |b|), with a tiny floor so two exact zeros compare equal.
inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12});
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("clstream_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << bytes;
}

}  // namespace test

namespace test {

inline void put_be32(std::string& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out += static_cast<char>((v >> s) & 0xFF);
}

/// IDX image file: magic 0x803, count, rows, cols, then row-major pixels.
inline std::string idx_images(const std::vector<std::vector<std::uint8_t>>& images, std::uint32_t rows,
                              std::uint32_t cols) {
  std::string out;
  put_be32(out, 0x00000803);
  put_be32(out, static_cast<std::uint32_t>(images.size()));
  put_be32(out, rows);
  put_be32(out, cols);
  for (const auto& img : images)
    for (std::uint8_t p : img) out += static_cast<char>(p);
  return out;
}

inline std::string idx_labels(const std::vector<std::uint8_t>& labels) {
  std::string out;
  put_be32(out, 0x00000801);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  for (std::uint8_t l : labels) out += static_cast<char>(l);
  return out;
}

}  // namespace test
