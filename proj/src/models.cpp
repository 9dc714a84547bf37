#include "clstream/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <utility>

#include "clstream/error.hpp"
#include "clstream/kernels.hpp"
#include "clstream/loss.hpp"
#include "clstream/serialize.hpp"

namespace cl {

namespace {

std::string block_name(const std::string& prefix, std::size_t k) {
  char buf[16];
  std::snprintf(buf, sizeof buf, ".block%03zu", k);
  return prefix + buf;
}

std::string task_prefix(int task) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "head.t%03d", task);
  return buf;
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) std::copy(m.row(rows[k]).begin(), m.row(rows[k]).end(), out.row(k).begin());
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// IncrementalClassifier

IncrementalClassifier::IncrementalClassifier(std::size_t in_features, std::uint64_t seed, bool masking,
                                             std::string id_prefix)
    : in_features_(in_features), masking_(masking), id_prefix_(std::move(id_prefix)), rng_(seed) {
  if (in_features_ == 0) throw InvalidArgument("IncrementalClassifier: in_features must be >= 1");
}

void IncrementalClassifier::adapt(const Experience& exp) { adapt_classes(exp.classes_in_this_experience); }

void IncrementalClassifier::adapt_classes(std::span<const ClassId> classes) {
  std::size_t new_width = width_;
  for (ClassId c : classes) {
    if (c < 0) throw InvalidArgument("IncrementalClassifier: negative class id");
    seen_.insert(c);
    new_width = std::max(new_width, static_cast<std::size_t>(c) + 1);
  }
  if (new_width == width_) return;

  const std::size_t k = new_width - width_;
  const double bound = std::sqrt(6.0 / static_cast<double>(in_features_ + new_width));
  Matrix w(in_features_, k);
  for (double& v : w.values()) v = rng_.uniform(-bound, bound);
  const std::string name = block_name(id_prefix_, blocks_.size());
  Block b;
  b.start = width_;
  b.weight = Parameter(name + ".weight", std::move(w));
  b.bias = Parameter(name + ".bias", Matrix(1, k));
  blocks_.push_back(std::move(b));
  width_ = new_width;
}

Matrix IncrementalClassifier::logits(const Matrix& features) const {
  if (width_ == 0) throw StateError("IncrementalClassifier: head has not been adapted to any class");
  if (features.cols() != in_features_) throw ShapeError("IncrementalClassifier: feature width mismatch");
  Matrix out(features.rows(), width_);
  for (const Block& b : blocks_) {
    Matrix z = kernels::matmul(features, b.weight.value);
    kernels::add_row_broadcast(z, b.bias.value);
    for (std::size_t r = 0; r < z.rows(); ++r) std::copy(z.row(r).begin(), z.row(r).end(), out.row(r).begin() + b.start);
  }
  if (masking_)
    for (std::size_t c = 0; c < width_; ++c)
      if (!seen_.contains(static_cast<ClassId>(c)))
        for (std::size_t r = 0; r < out.rows(); ++r) out(r, c) = kMaskedLogit;
  return out;
}

Matrix IncrementalClassifier::forward(const Matrix& features, std::span<const int> task_labels,
                                      HeadCache* cache) const {
  Matrix out = logits(features);
  if (cache) {
    cache->input = features;
    cache->task_labels.assign(task_labels.begin(), task_labels.end());
    cache->valid = true;
  }
  return out;
}

Matrix IncrementalClassifier::backward(const HeadCache& cache, const Matrix& dlogits) {
  if (!cache.valid) throw StateError("IncrementalClassifier: backward without forward cache");
  return backward_from(cache.input, dlogits);
}

Matrix IncrementalClassifier::backward_from(const Matrix& input, const Matrix& dlogits) {
  if (dlogits.rows() != input.rows() || dlogits.cols() != width_)
    throw ShapeError("IncrementalClassifier: dlogits shape mismatch");
  Matrix dfeat(input.rows(), in_features_);
  for (Block& b : blocks_) {
    const std::size_t k = b.weight.value.cols();
    Matrix dz(dlogits.rows(), k);
    for (std::size_t r = 0; r < dz.rows(); ++r)
      for (std::size_t j = 0; j < k; ++j) {
        const std::size_t c = b.start + j;
        dz(r, j) = (masking_ && !seen_.contains(static_cast<ClassId>(c))) ? 0.0 : dlogits(r, c);
      }
    kernels::accumulate(b.weight.grad, kernels::matmul_tn(input, dz));
    kernels::accumulate(b.bias.grad, kernels::column_sums(dz));
    kernels::accumulate(dfeat, kernels::matmul_nt(dz, b.weight.value));
  }
  return dfeat;
}

std::vector<Parameter*> IncrementalClassifier::parameters() {
  std::vector<Parameter*> out;
  for (Block& b : blocks_) {
    out.push_back(&b.bias);
    out.push_back(&b.weight);
  }
  return out;
}

std::vector<const Parameter*> IncrementalClassifier::parameters() const {
  std::vector<const Parameter*> out;
  for (const Block& b : blocks_) {
    out.push_back(&b.bias);
    out.push_back(&b.weight);
  }
  return out;
}

void IncrementalClassifier::save(BinaryWriter& w) const {
  w.u64(in_features_);
  w.u8(masking_ ? 1 : 0);
  w.str(id_prefix_);
  w.rng(rng_);
  w.u64(width_);
  w.u64(seen_.size());
  for (ClassId c : seen_) w.i64(c);
  w.u64(blocks_.size());
  for (const Block& b : blocks_) {
    w.u64(b.start);
    w.matrix(b.weight.value);
    w.matrix(b.bias.value);
  }
}

void IncrementalClassifier::load(BinaryReader& r) {
  if (r.u64() != in_features_) throw FormatError("IncrementalClassifier: input width differs from checkpoint");
  masking_ = r.u8() != 0;
  id_prefix_ = r.str();
  r.rng(rng_);
  width_ = r.u64();
  seen_.clear();
  for (std::uint64_t n = r.u64(); n > 0; --n) seen_.insert(static_cast<ClassId>(r.i64()));
  blocks_.clear();
  for (std::uint64_t n = r.u64(), k = 0; k < n; ++k) {
    Block b;
    b.start = r.u64();
    const std::string name = block_name(id_prefix_, k);
    b.weight = Parameter(name + ".weight", r.matrix());
    b.bias = Parameter(name + ".bias", r.matrix());
    if (b.weight.value.rows() != in_features_ || b.bias.value.cols() != b.weight.value.cols())
      throw FormatError("IncrementalClassifier: inconsistent block shapes");
    blocks_.push_back(std::move(b));
  }
}

// ---------------------------------------------------------------------------
// MultiHeadClassifier

MultiHeadClassifier::MultiHeadClassifier(std::size_t in_features, std::uint64_t seed, bool masking)
    : in_features_(in_features), seed_(seed), masking_(masking) {
  if (in_features_ == 0) throw InvalidArgument("MultiHeadClassifier: in_features must be >= 1");
}

void MultiHeadClassifier::adapt(const Experience& exp) {
  const int task = exp.task_label;
  auto it = heads_.find(task);
  if (it == heads_.end())
    it = heads_
             .emplace(task, IncrementalClassifier(in_features_, derive_seed(seed_, static_cast<std::uint64_t>(task)),
                                                  masking_, task_prefix(task)))
             .first;
  it->second.adapt(exp);
}

const IncrementalClassifier& MultiHeadClassifier::head(int task_label) const {
  const auto it = heads_.find(task_label);
  if (it == heads_.end()) throw NotFound("MultiHeadClassifier: no head for task " + std::to_string(task_label));
  return it->second;
}

std::vector<ClassId> MultiHeadClassifier::seen_classes(int task_label) const {
  return head(task_label).seen_classes(task_label);
}

namespace {

std::map<int, std::vector<std::size_t>> rows_by_task(std::span<const int> task_labels) {
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t r = 0; r < task_labels.size(); ++r) groups[task_labels[r]].push_back(r);
  return groups;
}

}  // namespace

Matrix MultiHeadClassifier::forward(const Matrix& features, std::span<const int> task_labels,
                                    HeadCache* cache) const {
  if (task_labels.size() != features.rows()) throw ShapeError("MultiHeadClassifier: one task label per row required");
  const auto groups = rows_by_task(task_labels);
  std::size_t width = 0;
  for (const auto& [task, _] : groups) width = std::max(width, head(task).width());

  Matrix out(features.rows(), width, kMaskedLogit);
  for (const auto& [task, rows] : groups) {
    const Matrix sub = head(task).forward(gather_rows(features, rows), {}, nullptr);
    for (std::size_t k = 0; k < rows.size(); ++k) std::copy(sub.row(k).begin(), sub.row(k).end(), out.row(rows[k]).begin());
  }
  if (cache) {
    cache->input = features;
    cache->task_labels.assign(task_labels.begin(), task_labels.end());
    cache->valid = true;
  }
  return out;
}

Matrix MultiHeadClassifier::backward(const HeadCache& cache, const Matrix& dlogits) {
  if (!cache.valid) throw StateError("MultiHeadClassifier: backward without forward cache");
  if (dlogits.rows() != cache.input.rows()) throw ShapeError("MultiHeadClassifier: dlogits row count mismatch");
  Matrix dfeat(cache.input.rows(), in_features_);
  for (const auto& [task, rows] : rows_by_task(cache.task_labels)) {
    auto it = heads_.find(task);
    if (it == heads_.end()) throw NotFound("MultiHeadClassifier: no head for task " + std::to_string(task));
    const std::size_t w = it->second.width();
    Matrix d(rows.size(), w);
    for (std::size_t k = 0; k < rows.size(); ++k)
      std::copy_n(dlogits.row(rows[k]).begin(), w, d.row(k).begin());
    const Matrix sub = it->second.backward_from(gather_rows(cache.input, rows), d);
    for (std::size_t k = 0; k < rows.size(); ++k) std::copy(sub.row(k).begin(), sub.row(k).end(), dfeat.row(rows[k]).begin());
  }
  return dfeat;
}

std::vector<Parameter*> MultiHeadClassifier::parameters() {
  std::vector<Parameter*> out;
  for (auto& [_, h] : heads_)
    for (Parameter* p : h.parameters()) out.push_back(p);
  return out;
}

std::vector<const Parameter*> MultiHeadClassifier::parameters() const {
  std::vector<const Parameter*> out;
  for (const auto& [_, h] : heads_)
    for (const Parameter* p : h.parameters()) out.push_back(p);
  return out;
}

void MultiHeadClassifier::save(BinaryWriter& w) const {
  w.u64(in_features_);
  w.u64(seed_);
  w.u8(masking_ ? 1 : 0);
  w.u64(heads_.size());
  for (const auto& [task, h] : heads_) {
    w.i64(task);
    h.save(w);
  }
}

void MultiHeadClassifier::load(BinaryReader& r) {
  if (r.u64() != in_features_) throw FormatError("MultiHeadClassifier: input width differs from checkpoint");
  seed_ = r.u64();
  masking_ = r.u8() != 0;
  heads_.clear();
  for (std::uint64_t n = r.u64(); n > 0; --n) {
    const int task = static_cast<int>(r.i64());
    IncrementalClassifier h(in_features_, 0, masking_, task_prefix(task));
    h.load(r);
    heads_.emplace(task, std::move(h));
  }
}

// ---------------------------------------------------------------------------
// Model

Model::Model(Network trunk, std::unique_ptr<DynamicHead> head) : trunk_(std::move(trunk)), head_(std::move(head)) {
  if (!head_) throw InvalidArgument("Model: head is required");
  if (!trunk_.empty() && trunk_.output_size() != head_->input_size())
    throw ShapeError("Model: trunk output does not match head input");
}

Model::Model(const Model& other) : trunk_(other.trunk_), head_(other.head_->clone()) {}

Model& Model::operator=(const Model& other) {
  if (this != &other) {
    trunk_ = other.trunk_;
    head_ = other.head_->clone();
  }
  return *this;
}

Matrix Model::forward(const Batch& batch, ModelCache& cache) const {
  if (trunk_.empty()) {
    cache.trunk.clear();
    return head_->forward(batch.x, batch.task_labels, &cache.head);
  }
  const Matrix h = cl::forward(trunk_, batch.x, cache.trunk);
  return head_->forward(h, batch.task_labels, &cache.head);
}

Matrix Model::forward(const Batch& batch) const {
  ModelCache scratch;
  return forward(batch, scratch);
}

void Model::backward(const ModelCache& cache, const Matrix& dlogits) {
  const Matrix dh = head_->backward(cache.head, dlogits);
  if (!trunk_.empty()) cl::backward(trunk_, cache.trunk, dh);
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> out = trunk_.parameters();
  for (Parameter* p : head_->parameters()) out.push_back(p);
  return out;
}

std::vector<const Parameter*> Model::parameters() const {
  std::vector<const Parameter*> out = trunk_.parameters();
  for (const Parameter* p : std::as_const(*head_).parameters()) out.push_back(p);
  return out;
}

void Model::zero_grads() { cl::zero_grads(parameters()); }

Model make_model(std::size_t input_dim, std::span<const std::size_t> hidden, const std::string& head_kind,
                 std::uint64_t init_seed, std::uint64_t head_seed) {
  if (input_dim == 0) throw InvalidArgument("make_model: input_dim must be >= 1");
  Network trunk;
  std::size_t features = input_dim;
  if (!hidden.empty()) {
    std::vector<std::size_t> layout{input_dim};
    layout.insert(layout.end(), hidden.begin(), hidden.end());
    trunk = init_network(layout, init_seed, Activation::relu, "trunk.layer");
    features = hidden.back();
  }
  std::unique_ptr<DynamicHead> head;
  if (head_kind == "incremental")
    head = std::make_unique<IncrementalClassifier>(features, head_seed);
  else if (head_kind == "multihead")
    head = std::make_unique<MultiHeadClassifier>(features, head_seed);
  else
    throw InvalidArgument("make_model: unknown head kind '" + head_kind + "'");
  return Model(std::move(trunk), std::move(head));
}

Matrix forward_model(const Network& trunk, const DynamicHead& head, const Batch& batch) {
  const Matrix h = trunk.empty() ? batch.x : forward(trunk, batch.x);
  return head.forward(h, batch.task_labels, nullptr);
}

std::vector<Parameter*> parameters(Network& trunk, DynamicHead& head) {
  std::vector<Parameter*> out = trunk.parameters();
  for (Parameter* p : head.parameters()) out.push_back(p);
  return out;
}

}  // namespace cl
