#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "clstream/matrix.hpp"
#include "clstream/network.hpp"

namespace cl {

class Rng;

/// Affine map applied to every feature at read time: raw * scale + shift.
struct TransformSpec {
  double scale = 1.0;
  double shift = 0.0;

  double apply(double raw) const { return raw * scale + shift; }
  friend bool operator==(const TransformSpec&, const TransformSpec&) = default;
};

using Attribute = std::vector<std::int64_t>;
using TransformGroups = std::map<std::string, TransformSpec>;

inline constexpr const char* kTaskLabel = "task_label";
inline constexpr const char* kTrainGroup = "train";
inline constexpr const char* kEvalGroup = "eval";

/// Dense minibatch, transforms already applied.
struct Batch {
  Matrix x;
  std::vector<ClassId> y;
  std::vector<int> task_labels;

  std::size_t size() const { return y.size(); }
};

/// Immutable labelled dataset with per-example attributes and named
/// transform groups.
///
/// Rows are an index view over shared raw storage, so subsampling never
/// copies features. Every dataset carries a `task_label` attribute and the
/// groups "train" and "eval" (both identity unless re-registered); "train"
/// is active on construction.
class Dataset {
 public:
  Dataset() = default;
  Dataset(Matrix features, std::vector<ClassId> targets);

  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  std::size_t feature_dim() const { return raw_ ? raw_->cols() : 0; }

  ClassId target(std::size_t i) const { return targets_.at(i); }
  const std::vector<ClassId>& targets() const { return targets_; }
  /// Sorted distinct targets.
  std::vector<ClassId> classes() const;

  std::span<const double> raw_row(std::size_t i) const;
  /// Row i with the active transform applied.
  std::vector<double> row(std::size_t i) const;
  /// All rows, transformed, as an [N × D] matrix.
  Matrix features() const;

  bool has_attribute(const std::string& name) const { return attributes_.contains(name); }
  const Attribute& attribute(const std::string& name) const;
  std::int64_t attribute(const std::string& name, std::size_t i) const { return attribute(name).at(i); }
  const std::map<std::string, Attribute>& attributes() const { return attributes_; }

  const std::string& active_transform_group() const { return active_group_; }
  const TransformGroups& transform_groups() const { return groups_; }
  const TransformSpec& active_transform() const { return groups_.at(active_group_); }

  /// Gathers the given rows into a batch.
  Batch make_batch(std::span<const std::size_t> indices) const;

  /// Behavioral equality: same transformed rows, targets, attributes, groups.
  friend bool operator==(const Dataset& a, const Dataset& b);

 private:
  friend Dataset subsample(const Dataset&, std::span<const std::size_t>);
  friend Dataset concat(std::span<const Dataset>);
  friend Dataset with_attribute(const Dataset&, const std::string&, Attribute);
  friend Dataset with_transform_group(const Dataset&, const std::string&);
  friend Dataset register_transform_group(const Dataset&, const std::string&, TransformSpec);

  std::shared_ptr<const Matrix> raw_;
  std::vector<std::size_t> rows_;
  std::vector<ClassId> targets_;
  std::map<std::string, Attribute> attributes_;
  TransformGroups groups_;
  std::string active_group_;
};

/// Example k of the result is example indices[k] of ds. Duplicates allowed.
Dataset subsample(const Dataset& ds, std::span<const std::size_t> indices);
Dataset subsample(const Dataset& ds, std::initializer_list<std::size_t> indices);

/// Concatenation in order. Parts must agree on feature width, attribute
/// names and transform group tables. Default-constructed (schema-less)
/// datasets are skipped.
Dataset concat(std::span<const Dataset> parts);
Dataset concat(std::initializer_list<Dataset> parts);

/// Adds or replaces a per-example attribute column.
Dataset with_attribute(const Dataset& ds, const std::string& name, Attribute values);

/// Switches the active transform group. Throws NotFound for unknown groups.
Dataset with_transform_group(const Dataset& ds, const std::string& group);

/// Adds or replaces a transform group without changing the active one.
Dataset register_transform_group(const Dataset& ds, const std::string& group, TransformSpec spec);

/// Fisher-Yates permutation of [0, n).
std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng);

/// One epoch of minibatches; the last one may be short.
std::vector<Batch> batches(const Dataset& ds, std::size_t batch_size, bool shuffle, std::uint64_t seed);

/// One epoch of minibatches that mix all sources with fixed per-source
/// quotas: floor(B/S) rows each, remainder to the earliest sources. The
/// largest source (earliest on ties) is walked exactly once; the others are
/// cycled through fresh permutations as often as needed. With a single
/// source this is batches(ds, B, true, seed).
std::vector<Batch> balanced_joint_loader(std::span<const Dataset> sources, std::size_t batch_size,
                                         std::uint64_t seed);

}  // namespace cl
