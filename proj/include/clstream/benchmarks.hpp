#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "clstream/dataset.hpp"

namespace cl {

struct Experience {
  std::size_t index = 0;
  std::string stream_name;
  Dataset dataset;
  int task_label = 0;
  std::vector<ClassId> classes_in_this_experience;  // sorted
  std::uint64_t uid = 0;                             // unique within a benchmark
};

struct Stream {
  std::string name;
  std::vector<Experience> experiences;

  std::size_t size() const { return experiences.size(); }
  const Experience& operator[](std::size_t i) const { return experiences.at(i); }
};

struct Benchmark {
  Stream train_stream;
  Stream test_stream;
  std::size_t n_experiences = 0;
  std::vector<ClassId> class_order;
};

struct ClassIncrementalOptions {
  std::uint64_t class_order_seed = 0;
  std::optional<std::vector<ClassId>> fixed_class_order;
  bool task_labels = false;
};

/// Splits the class set into n_experiences equal contiguous groups of the
/// (fixed or seeded) class order.
Benchmark class_incremental(const Dataset& train, const Dataset& test, std::size_t n_experiences,
                            const ClassIncrementalOptions& options = {});

/// Shuffles training rows and deals them into n_experiences near-equal parts
/// stratified by class; every experience is evaluated on the full test set.
Benchmark instance_incremental(const Dataset& train, const Dataset& test, std::size_t n_experiences,
                               std::uint64_t seed);

/// Isotropic Gaussian clusters, class-major row order. Centers lie on the
/// radius-5 sphere.
Dataset gaussian_blobs(std::size_t n_classes, std::size_t n_per_class, std::size_t dim, double cluster_spread,
                       std::uint64_t seed);

/// Train/test pair drawn from the same clusters: per class the first
/// n_train rows go to train and the remaining n_test to test.
std::pair<Dataset, Dataset> gaussian_blobs_split(std::size_t n_classes, std::size_t n_train_per_class,
                                                 std::size_t n_test_per_class, std::size_t dim,
                                                 double cluster_spread, std::uint64_t seed);

/// Reads an IDX image file (magic 0x00000803) and label file (0x00000801).
/// Pixels are scaled to [0, 1].
Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

inline constexpr const char* kMnistTrainImages = "train-images-idx3-ubyte";
inline constexpr const char* kMnistTrainLabels = "train-labels-idx1-ubyte";
inline constexpr const char* kMnistTestImages = "t10k-images-idx3-ubyte";
inline constexpr const char* kMnistTestLabels = "t10k-labels-idx1-ubyte";

Benchmark split_mnist(std::size_t n_experiences, const std::filesystem::path& data_dir, std::uint64_t seed,
                      std::optional<std::vector<ClassId>> fixed_class_order = std::nullopt);

}  // namespace cl
