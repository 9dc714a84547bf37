#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace cl {

/// SplitMix64 finalizer. Used to derive independent child seeds.
std::uint64_t mix_seed(std::uint64_t x);

/// Child seed for a named stream (e.g. "init", "shuffle") of a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream_name);

/// Child seed for an indexed sub-stream (per source, per group, per task).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Seeded 64-bit random stream with a serializable state.
///
/// Every draw goes through a fresh distribution object so that the engine
/// state alone fully determines the next values (no cached normals).
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [lo, hi).
  double uniform(double lo = 0.0, double hi = 1.0);

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n);

  /// Standard normal via Box-Muller (consumes two uniforms, no caching).
  double normal();

  std::string save_state() const;
  void load_state(const std::string& state);

  friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cl
