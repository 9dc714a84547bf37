#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "clstream/benchmarks.hpp"
#include "clstream/network.hpp"
#include "clstream/rng.hpp"

namespace cl {

class BinaryReader;
class BinaryWriter;

struct HeadCache {
  Matrix input;
  std::vector<int> task_labels;
  bool valid = false;
};

/// Output layer whose shape can change between experiences.
///
/// Logit column c always corresponds to class id c. Classes the head has
/// not been adapted to are masked with kMaskedLogit when masking is on.
class DynamicHead {
 public:
  virtual ~DynamicHead() = default;

  virtual std::string kind() const = 0;
  virtual std::size_t input_size() const = 0;

  /// Grows to cover the experience. Never alters existing outputs.
  virtual void adapt(const Experience& exp) = 0;

  virtual Matrix forward(const Matrix& features, std::span<const int> task_labels, HeadCache* cache) const = 0;
  /// Accumulates gradients; returns d(loss)/d(features).
  virtual Matrix backward(const HeadCache& cache, const Matrix& dlogits) = 0;

  /// Sorted by (task label, parameter id).
  virtual std::vector<Parameter*> parameters() = 0;
  virtual std::vector<const Parameter*> parameters() const = 0;

  virtual bool knows_task(int task_label) const = 0;
  /// Classes adapted so far for the given task's head.
  virtual std::vector<ClassId> seen_classes(int task_label) const = 0;

  virtual std::unique_ptr<DynamicHead> clone() const = 0;
  virtual void save(BinaryWriter& w) const = 0;
  virtual void load(BinaryReader& r) = 0;
};

/// Single growing linear head. Each growth appends a new parameter block
/// covering the new class columns; earlier blocks are never touched.
class IncrementalClassifier final : public DynamicHead {
 public:
  IncrementalClassifier(std::size_t in_features, std::uint64_t seed, bool masking = true,
                        std::string id_prefix = "head.t000");

  std::string kind() const override { return "incremental"; }
  std::size_t input_size() const override { return in_features_; }
  std::size_t width() const { return width_; }
  bool masking() const { return masking_; }
  const std::set<ClassId>& seen() const { return seen_; }

  void adapt(const Experience& exp) override;
  /// Adapts to an explicit class list.
  void adapt_classes(std::span<const ClassId> classes);

  Matrix forward(const Matrix& features, std::span<const int> task_labels, HeadCache* cache) const override;
  Matrix backward(const HeadCache& cache, const Matrix& dlogits) override;
  Matrix backward_from(const Matrix& input, const Matrix& dlogits);

  std::vector<Parameter*> parameters() override;
  std::vector<const Parameter*> parameters() const override;
  bool knows_task(int) const override { return true; }
  std::vector<ClassId> seen_classes(int) const override { return {seen_.begin(), seen_.end()}; }

  std::unique_ptr<DynamicHead> clone() const override { return std::make_unique<IncrementalClassifier>(*this); }
  void save(BinaryWriter& w) const override;
  void load(BinaryReader& r) override;

 private:
  struct Block {
    std::size_t start = 0;
    Parameter weight;  // [in × k]
    Parameter bias;    // [1 × k]
  };

  Matrix logits(const Matrix& features) const;

  std::size_t in_features_;
  bool masking_;
  std::string id_prefix_;
  Rng rng_;
  std::size_t width_ = 0;
  std::set<ClassId> seen_;
  std::vector<Block> blocks_;
};

/// One IncrementalClassifier per task label; rows are routed by task. A
/// mixed-task batch is padded to the widest head involved and pad columns
/// are masked.
class MultiHeadClassifier final : public DynamicHead {
 public:
  MultiHeadClassifier(std::size_t in_features, std::uint64_t seed, bool masking = true);

  std::string kind() const override { return "multihead"; }
  std::size_t input_size() const override { return in_features_; }

  void adapt(const Experience& exp) override;
  Matrix forward(const Matrix& features, std::span<const int> task_labels, HeadCache* cache) const override;
  Matrix backward(const HeadCache& cache, const Matrix& dlogits) override;

  std::vector<Parameter*> parameters() override;
  std::vector<const Parameter*> parameters() const override;
  bool knows_task(int task_label) const override { return heads_.contains(task_label); }
  std::vector<ClassId> seen_classes(int task_label) const override;
  const IncrementalClassifier& head(int task_label) const;

  std::unique_ptr<DynamicHead> clone() const override { return std::make_unique<MultiHeadClassifier>(*this); }
  void save(BinaryWriter& w) const override;
  void load(BinaryReader& r) override;

 private:
  std::size_t in_features_;
  std::uint64_t seed_;
  bool masking_;
  std::map<int, IncrementalClassifier> heads_;
};

struct ModelCache {
  ForwardCache trunk;
  HeadCache head;
};

/// Shared trunk (possibly empty) followed by a dynamic head.
class Model {
 public:
  Model(Network trunk, std::unique_ptr<DynamicHead> head);
  Model(const Model& other);
  Model& operator=(const Model& other);
  Model(Model&&) noexcept = default;
  Model& operator=(Model&&) noexcept = default;

  Network& trunk() { return trunk_; }
  const Network& trunk() const { return trunk_; }
  DynamicHead& head() { return *head_; }
  const DynamicHead& head() const { return *head_; }

  void adapt(const Experience& exp) { head_->adapt(exp); }
  Matrix forward(const Batch& batch, ModelCache& cache) const;
  Matrix forward(const Batch& batch) const;
  void backward(const ModelCache& cache, const Matrix& dlogits);

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  void zero_grads();

 private:
  Network trunk_;
  std::unique_ptr<DynamicHead> head_;
};

/// Builds trunk [input, hidden...] with ReLU everywhere and the requested
/// head. An empty `hidden` feeds inputs straight into the head.
Model make_model(std::size_t input_dim, std::span<const std::size_t> hidden, const std::string& head_kind,
                 std::uint64_t init_seed, std::uint64_t head_seed);

Matrix forward_model(const Network& trunk, const DynamicHead& head, const Batch& batch);

/// Trunk parameters in layer order, then head parameters.
std::vector<Parameter*> parameters(Network& trunk, DynamicHead& head);

}  // namespace cl
