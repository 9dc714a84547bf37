#include "clstream/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <utility>

#include "clstream/error.hpp"
#include "clstream/rng.hpp"

namespace cl {

Dataset::Dataset(Matrix features, std::vector<ClassId> targets)
    : raw_(std::make_shared<const Matrix>(std::move(features))), targets_(std::move(targets)) {
  if (targets_.size() != raw_->rows()) throw InvalidArgument("dataset: targets length != feature rows");
  rows_.resize(raw_->rows());
  std::iota(rows_.begin(), rows_.end(), std::size_t{0});
  attributes_[kTaskLabel] = Attribute(rows_.size(), 0);
  groups_[kTrainGroup] = TransformSpec{};
  groups_[kEvalGroup] = TransformSpec{};
  active_group_ = kTrainGroup;
}

std::vector<ClassId> Dataset::classes() const {
  std::set<ClassId> s(targets_.begin(), targets_.end());
  return {s.begin(), s.end()};
}

std::span<const double> Dataset::raw_row(std::size_t i) const {
  if (i >= rows_.size()) throw OutOfRange("dataset: row index out of range");
  return raw_->row(rows_[i]);
}

std::vector<double> Dataset::row(std::size_t i) const {
  const auto raw = raw_row(i);
  const TransformSpec& t = active_transform();
  std::vector<double> out(raw.size());
  for (std::size_t j = 0; j < raw.size(); ++j) out[j] = t.apply(raw[j]);
  return out;
}

Matrix Dataset::features() const {
  Matrix m(size(), feature_dim());
  if (empty()) return m;
  const TransformSpec& t = active_transform();
  for (std::size_t i = 0; i < size(); ++i) {
    const auto raw = raw_->row(rows_[i]);
    auto out = m.row(i);
    for (std::size_t j = 0; j < raw.size(); ++j) out[j] = t.apply(raw[j]);
  }
  return m;
}

const Attribute& Dataset::attribute(const std::string& name) const {
  const auto it = attributes_.find(name);
  if (it == attributes_.end()) throw NotFound("dataset: no attribute '" + name + "'");
  return it->second;
}

Batch Dataset::make_batch(std::span<const std::size_t> indices) const {
  Batch b;
  b.x = Matrix(indices.size(), feature_dim());
  b.y.reserve(indices.size());
  b.task_labels.reserve(indices.size());
  const TransformSpec& t = active_transform();
  const Attribute& tasks = attribute(kTaskLabel);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const std::size_t i = indices[k];
    if (i >= size()) throw OutOfRange("dataset: batch index out of range");
    const auto raw = raw_->row(rows_[i]);
    auto out = b.x.row(k);
    for (std::size_t j = 0; j < raw.size(); ++j) out[j] = t.apply(raw[j]);
    b.y.push_back(targets_[i]);
    b.task_labels.push_back(static_cast<int>(tasks[i]));
  }
  return b;
}

bool operator==(const Dataset& a, const Dataset& b) {
  if (a.size() != b.size() || a.feature_dim() != b.feature_dim()) return false;
  if (a.targets_ != b.targets_ || a.attributes_ != b.attributes_) return false;
  if (a.groups_ != b.groups_ || a.active_group_ != b.active_group_) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.row(i) != b.row(i)) return false;
  return true;
}

Dataset subsample(const Dataset& ds, std::span<const std::size_t> indices) {
  Dataset out;
  out.raw_ = ds.raw_;
  out.groups_ = ds.groups_;
  out.active_group_ = ds.active_group_;
  out.rows_.reserve(indices.size());
  out.targets_.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= ds.size())
      throw OutOfRange("subsample: index " + std::to_string(i) + " >= size " + std::to_string(ds.size()));
    out.rows_.push_back(ds.rows_[i]);
    out.targets_.push_back(ds.targets_[i]);
  }
  for (const auto& [name, column] : ds.attributes_) {
    Attribute& col = out.attributes_[name];
    col.reserve(indices.size());
    for (std::size_t i : indices) col.push_back(column[i]);
  }
  return out;
}

Dataset subsample(const Dataset& ds, std::initializer_list<std::size_t> indices) {
  return subsample(ds, std::span<const std::size_t>(indices.begin(), indices.size()));
}

namespace {

bool schemaless(const Dataset& d) { return d.empty() && d.feature_dim() == 0; }

bool same_schema(const Dataset& a, const Dataset& b) {
  if (a.feature_dim() != b.feature_dim()) return false;
  if (a.transform_groups() != b.transform_groups()) return false;
  if (a.active_transform_group() != b.active_transform_group()) return false;
  if (a.attributes().size() != b.attributes().size()) return false;
  for (const auto& [name, _] : a.attributes())
    if (!b.has_attribute(name)) return false;
  return true;
}

}  // namespace

Dataset concat(std::span<const Dataset> parts) {
  std::vector<const Dataset*> live;
  for (const Dataset& p : parts)
    if (!schemaless(p)) live.push_back(&p);
  if (live.empty()) return {};
  const Dataset& first = *live.front();
  for (const Dataset* p : live)
    if (!same_schema(first, *p)) throw InvalidArgument("concat: parts disagree on width, attributes or transform groups");

  std::size_t total = 0;
  for (const Dataset* p : live) total += p->size();

  Dataset out;
  out.groups_ = first.groups_;
  out.active_group_ = first.active_group_;
  out.targets_.reserve(total);
  out.rows_.reserve(total);
  for (const auto& [name, _] : first.attributes_) out.attributes_[name].reserve(total);

  const bool shared =
      std::all_of(live.begin(), live.end(), [&](const Dataset* p) { return p->raw_ == first.raw_; });
  if (shared) {
    out.raw_ = first.raw_;
    for (const Dataset* p : live) out.rows_.insert(out.rows_.end(), p->rows_.begin(), p->rows_.end());
  } else {
    auto storage = std::make_shared<Matrix>(total, first.feature_dim());
    std::size_t r = 0;
    for (const Dataset* p : live)
      for (std::size_t i = 0; i < p->size(); ++i, ++r) {
        const auto src = p->raw_->row(p->rows_[i]);
        std::copy(src.begin(), src.end(), storage->row(r).begin());
      }
    out.raw_ = std::move(storage);
    out.rows_.resize(total);
    std::iota(out.rows_.begin(), out.rows_.end(), std::size_t{0});
  }
  for (const Dataset* p : live) {
    out.targets_.insert(out.targets_.end(), p->targets_.begin(), p->targets_.end());
    for (const auto& [name, column] : p->attributes_) {
      Attribute& col = out.attributes_[name];
      col.insert(col.end(), column.begin(), column.end());
    }
  }
  return out;
}

Dataset concat(std::initializer_list<Dataset> parts) {
  return concat(std::span<const Dataset>(parts.begin(), parts.size()));
}

Dataset with_attribute(const Dataset& ds, const std::string& name, Attribute values) {
  if (values.size() != ds.size())
    throw InvalidArgument("with_attribute: column '" + name + "' has length " + std::to_string(values.size()) +
                          ", dataset has " + std::to_string(ds.size()));
  Dataset out = ds;
  out.attributes_[name] = std::move(values);
  return out;
}

Dataset with_transform_group(const Dataset& ds, const std::string& group) {
  if (!ds.groups_.contains(group)) throw NotFound("with_transform_group: unknown group '" + group + "'");
  Dataset out = ds;
  out.active_group_ = group;
  return out;
}

Dataset register_transform_group(const Dataset& ds, const std::string& group, TransformSpec spec) {
  Dataset out = ds;
  out.groups_[group] = spec;
  return out;
}

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.uniform_index(i)]);
  return idx;
}

std::vector<Batch> batches(const Dataset& ds, std::size_t batch_size, bool shuffle, std::uint64_t seed) {
  if (batch_size == 0) throw InvalidArgument("batches: batch_size must be >= 1");
  std::vector<std::size_t> order;
  if (shuffle) {
    Rng rng(derive_seed(seed, std::uint64_t{0}));
    order = shuffled_indices(ds.size(), rng);
  } else {
    order.resize(ds.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
  }
  std::vector<Batch> out;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t len = std::min(batch_size, order.size() - start);
    out.push_back(ds.make_batch(std::span<const std::size_t>(order).subspan(start, len)));
  }
  return out;
}

namespace {

// Endless stream of row indices: successive independent permutations.
class PermutationCycle {
 public:
  PermutationCycle(std::size_t n, std::uint64_t seed) : n_(n), rng_(seed) {}

  std::size_t next() {
    if (pos_ == order_.size()) {
      order_ = shuffled_indices(n_, rng_);
      pos_ = 0;
    }
    return order_[pos_++];
  }

 private:
  std::size_t n_;
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

Batch stack(const std::vector<Batch>& parts) {
  std::size_t rows = 0, dim = 0;
  for (const Batch& b : parts) {
    rows += b.size();
    if (b.size() > 0) dim = b.x.cols();
  }
  Batch out;
  out.x = Matrix(rows, dim);
  std::size_t r = 0;
  for (const Batch& b : parts) {
    for (std::size_t i = 0; i < b.size(); ++i, ++r) std::copy(b.x.row(i).begin(), b.x.row(i).end(), out.x.row(r).begin());
    out.y.insert(out.y.end(), b.y.begin(), b.y.end());
    out.task_labels.insert(out.task_labels.end(), b.task_labels.begin(), b.task_labels.end());
  }
  return out;
}

}  // namespace

std::vector<Batch> balanced_joint_loader(std::span<const Dataset> sources, std::size_t batch_size,
                                         std::uint64_t seed) {
  if (sources.empty()) throw InvalidArgument("balanced_joint_loader: no sources");
  if (batch_size < sources.size())
    throw InvalidArgument("balanced_joint_loader: batch_size " + std::to_string(batch_size) + " < " +
                          std::to_string(sources.size()) + " sources");
  const std::size_t n_src = sources.size();
  std::vector<std::size_t> quota(n_src, batch_size / n_src);
  for (std::size_t s = 0; s < batch_size % n_src; ++s) ++quota[s];

  std::size_t driver = 0;
  for (std::size_t s = 1; s < n_src; ++s)
    if (sources[s].size() > sources[driver].size()) driver = s;
  const std::size_t driver_len = sources[driver].size();
  if (driver_len == 0) throw InvalidArgument("balanced_joint_loader: all sources are empty");

  std::vector<PermutationCycle> cycles;
  cycles.reserve(n_src);
  for (std::size_t s = 0; s < n_src; ++s) cycles.emplace_back(sources[s].size(), derive_seed(seed, std::uint64_t{s}));

  const std::size_t n_batches = (driver_len + quota[driver] - 1) / quota[driver];
  std::size_t driver_taken = 0;
  std::vector<Batch> out;
  out.reserve(n_batches);
  for (std::size_t b = 0; b < n_batches; ++b) {
    std::vector<Batch> parts;
    for (std::size_t s = 0; s < n_src; ++s) {
      if (sources[s].empty()) continue;
      std::size_t take = quota[s];
      if (s == driver) {
        take = std::min(take, driver_len - driver_taken);
        driver_taken += take;
      }
      std::vector<std::size_t> idx(take);
      for (auto& i : idx) i = cycles[s].next();
      parts.push_back(sources[s].make_batch(idx));
    }
    out.push_back(n_src == 1 ? std::move(parts.front()) : stack(parts));
  }
  return out;
}

}  // namespace cl
