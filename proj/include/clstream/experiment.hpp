#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <vector>

#include "clstream/benchmarks.hpp"
#include "clstream/config.hpp"
#include "clstream/metrics.hpp"
#include "clstream/strategy.hpp"

namespace cl {

inline constexpr const char* kCsvFile = "metrics.csv";
inline constexpr const char* kJsonlFile = "metrics.jsonl";
inline constexpr const char* kTextFile = "log.txt";
inline constexpr const char* kDefaultCheckpointFile = "checkpoint.clckpt";

/// Streams: "blobs" for synthetic data, "class_order" for the class
/// permutation, "instance" for instance-incremental dealing.
Benchmark build_benchmark(const ExperimentConfig& c);

/// Weights come from the "init" and "head" streams; the strategy derives
/// its own "shuffle" and "reservoir" streams from the master seed.
std::unique_ptr<Strategy> build_strategy(const ExperimentConfig& c, std::size_t input_dim,
                                         std::shared_ptr<Evaluator> evaluator);

/// Test experiences evaluated after training: the whole stream, except that
/// a multi-head model only sees tasks it already has a head for.
std::vector<Experience> eval_experiences(const Strategy& s, const Benchmark& b);

struct RunOptions {
  std::optional<std::filesystem::path> resume;
  std::optional<std::filesystem::path> output_dir;  // overrides the config
  /// Stop (as if interrupted) once this many experiences are done in total.
  std::optional<std::size_t> stop_after;
  std::ostream* progress = nullptr;
};

struct RunResult {
  std::size_t next_experience = 0;
  std::size_t n_experiences = 0;
  AccuracyMatrix matrix;
  std::filesystem::path output_dir;
  std::optional<std::filesystem::path> checkpoint;
};

std::filesystem::path checkpoint_path(const ExperimentConfig& c, const std::filesystem::path& output_dir);

/// Throws ConfigError for invalid settings, CheckpointMismatch when the
/// resume checkpoint belongs to another configuration, and other Error
/// subclasses for runtime failures.
RunResult run_experiment(const ExperimentConfig& c, const RunOptions& options = {});

}  // namespace cl
