#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "clstream/dataset.hpp"

namespace cl {

/// Parses the configuration subset of TOML: `[table]` and `[a.b]` headers,
/// `key = value` with strings, integers, floats, booleans and flat arrays,
/// and `#` comments. Duplicate keys are errors.
nlohmann::json parse_toml(std::string_view text);

struct SyntheticSpec {
  std::size_t n_classes = 10;
  std::size_t n_per_class = 100;  // training rows per class
  std::size_t n_test_per_class = 50;
  std::size_t dim = 16;
  double spread = 0.5;
};

struct BenchmarkConfig {
  std::string kind = "split_synthetic";  // split_synthetic | split_mnist | instance_incremental
  std::size_t n_experiences = 5;
  SyntheticSpec synthetic;
  std::string source = "synthetic";  // instance_incremental only: synthetic | mnist
  std::filesystem::path data_dir;
  bool task_labels = false;
  std::optional<std::vector<ClassId>> class_order;
};

struct ModelConfig {
  std::vector<std::size_t> hidden{32};
  std::string head = "incremental";  // incremental | multihead
};

struct StrategyConfig {
  std::string name = "naive";  // naive | cumulative | replay | ewc | lwf
  std::size_t mem_size = 200;
  std::string policy = "reservoir";
  double lambda = 1.0;
  std::size_t fisher_batches = 1000;  // capped at the experience's minibatch count
  double alpha = 1.0;
  double temperature = 2.0;
};

struct TrainConfig {
  double lr = 0.05;
  std::size_t epochs = 1;
  std::size_t batch_size = 32;
  std::size_t eval_batch_size = 256;
};

struct CheckpointConfig {
  std::filesystem::path path;  // empty: <output_dir>/checkpoint.clckpt
  bool save_every_exp = false;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "output";
  std::vector<std::string> loggers{"csv"};
  BenchmarkConfig benchmark;
  ModelConfig model;
  StrategyConfig strategy;
  TrainConfig train;
  bool timing = false;
  CheckpointConfig checkpoint;
};

/// Validates a parsed document; unknown keys and bad values throw
/// ConfigError naming the dotted field.
ExperimentConfig config_from_json(const nlohmann::json& doc);
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Settings that determine results, with defaults filled in. Output and
/// checkpoint locations are excluded.
nlohmann::json canonical_json(const ExperimentConfig& c);
std::uint64_t config_digest(const ExperimentConfig& c);

}  // namespace cl
