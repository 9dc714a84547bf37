#include "clstream/buffers.hpp"

#include <algorithm>

#include "clstream/error.hpp"
#include "clstream/serialize.hpp"

namespace cl {

Dataset ReservoirBuffer::contents() const { return concat(std::span<const Dataset>(rows_)); }

void ReservoirBuffer::update(const Dataset& incoming) {
  for (std::size_t i = 0; i < incoming.size(); ++i) {
    ++seen_;
    if (rows_.size() < max_size_) {
      rows_.push_back(subsample(incoming, {i}));
      continue;
    }
    if (max_size_ == 0) continue;
    const std::uint64_t j = rng_.uniform_index(seen_);
    if (j < max_size_) rows_[j] = subsample(incoming, {i});
  }
}

void ReservoirBuffer::resize(std::size_t new_size) {
  max_size_ = new_size;
  if (rows_.size() <= new_size) return;
  std::vector<std::size_t> keep = shuffled_indices(rows_.size(), rng_);
  keep.resize(new_size);
  std::sort(keep.begin(), keep.end());
  std::vector<Dataset> kept;
  kept.reserve(new_size);
  for (std::size_t k : keep) kept.push_back(std::move(rows_[k]));
  rows_ = std::move(kept);
}

void ReservoirBuffer::save(BinaryWriter& w) const {
  w.u64(max_size_);
  w.u64(seen_);
  w.rng(rng_);
  w.dataset(contents());
}

void ReservoirBuffer::load(BinaryReader& r) {
  max_size_ = r.u64();
  seen_ = r.u64();
  r.rng(rng_);
  const Dataset stored = r.dataset();
  if (stored.size() > max_size_) throw FormatError("reservoir buffer: stored rows exceed capacity");
  rows_.clear();
  for (std::size_t i = 0; i < stored.size(); ++i) rows_.push_back(subsample(stored, {i}));
}

std::map<std::int64_t, std::size_t> balanced_quotas(std::size_t total, const std::vector<std::int64_t>& sorted_keys) {
  std::map<std::int64_t, std::size_t> q;
  if (sorted_keys.empty()) return q;
  const std::size_t g = sorted_keys.size();
  for (std::size_t k = 0; k < g; ++k) q[sorted_keys[k]] = total / g + (k < total % g ? 1 : 0);
  return q;
}

GroupBalancedBuffer::GroupBalancedBuffer(std::size_t max_size, std::uint64_t seed, Key key)
    : ExemplarsBuffer(max_size), seed_(seed), key_(key) {}

std::size_t GroupBalancedBuffer::size() const {
  std::size_t n = 0;
  for (const auto& [_, g] : groups_) n += g.size();
  return n;
}

Dataset GroupBalancedBuffer::contents() const {
  std::vector<Dataset> parts;
  for (const auto& [_, g] : groups_) parts.push_back(g.contents());
  return concat(std::span<const Dataset>(parts));
}

std::map<std::int64_t, std::size_t> GroupBalancedBuffer::quotas() const {
  std::vector<std::int64_t> keys;
  for (const auto& [k, _] : groups_) keys.push_back(k);
  return balanced_quotas(max_size_, keys);
}

std::map<std::int64_t, std::size_t> GroupBalancedBuffer::group_sizes() const {
  std::map<std::int64_t, std::size_t> out;
  for (const auto& [k, g] : groups_) out[k] = g.size();
  return out;
}

void GroupBalancedBuffer::rebalance() {
  for (const auto& [k, q] : quotas()) groups_.at(k).resize(q);
}

void GroupBalancedBuffer::update(const Dataset& incoming, std::size_t exp_index) {
  if (incoming.empty()) return;
  std::map<std::int64_t, std::vector<std::size_t>> rows;
  for (std::size_t i = 0; i < incoming.size(); ++i) {
    const std::int64_t key = key_ == Key::class_id ? incoming.target(i) : static_cast<std::int64_t>(exp_index);
    rows[key].push_back(i);
  }
  for (const auto& [k, _] : rows)
    if (!groups_.contains(k)) groups_.emplace(k, ReservoirBuffer(0, derive_seed(seed_, static_cast<std::uint64_t>(k))));
  rebalance();
  for (const auto& [k, idx] : rows) groups_.at(k).update(subsample(incoming, idx));
}

void GroupBalancedBuffer::resize(std::size_t new_size) {
  max_size_ = new_size;
  rebalance();
}

void GroupBalancedBuffer::save(BinaryWriter& w) const {
  w.u64(max_size_);
  w.u64(seed_);
  w.u64(groups_.size());
  for (const auto& [k, g] : groups_) {
    w.i64(k);
    g.save(w);
  }
}

void GroupBalancedBuffer::load(BinaryReader& r) {
  max_size_ = r.u64();
  seed_ = r.u64();
  groups_.clear();
  for (std::uint64_t n = r.u64(); n > 0; --n) {
    const std::int64_t k = r.i64();
    ReservoirBuffer g(0, 0);
    g.load(r);
    groups_.emplace(k, std::move(g));
  }
}

std::unique_ptr<ExemplarsBuffer> make_buffer(const std::string& policy, std::size_t max_size, std::uint64_t seed) {
  if (policy == "reservoir") return std::make_unique<ReservoirBuffer>(max_size, seed);
  if (policy == "class_balanced")
    return std::make_unique<GroupBalancedBuffer>(max_size, seed, GroupBalancedBuffer::Key::class_id);
  if (policy == "experience_balanced")
    return std::make_unique<GroupBalancedBuffer>(max_size, seed, GroupBalancedBuffer::Key::experience);
  throw InvalidArgument("unknown buffer policy '" + policy + "'");
}

}  // namespace cl
