#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "clstream/dataset.hpp"
#include "clstream/rng.hpp"

namespace cl {

class BinaryReader;
class BinaryWriter;

/// Bounded store of past examples. size() <= max_size() after every call.
class ExemplarsBuffer {
 public:
  explicit ExemplarsBuffer(std::size_t max_size) : max_size_(max_size) {}
  virtual ~ExemplarsBuffer() = default;

  virtual std::string policy() const = 0;
  std::size_t max_size() const { return max_size_; }
  virtual std::size_t size() const = 0;
  /// Snapshot of the stored rows.
  virtual Dataset contents() const = 0;

  virtual void update(const Dataset& incoming, std::size_t exp_index) = 0;
  /// Shrinking evicts uniformly at random; growing keeps contents.
  virtual void resize(std::size_t new_size) = 0;

  virtual void save(BinaryWriter& w) const = 0;
  virtual void load(BinaryReader& r) = 0;

 protected:
  std::size_t max_size_;
};

/// Algorithm R: the t-th item ever offered is kept with probability
/// max_size / t, replacing a uniformly chosen resident.
class ReservoirBuffer final : public ExemplarsBuffer {
 public:
  ReservoirBuffer(std::size_t max_size, std::uint64_t seed) : ExemplarsBuffer(max_size), rng_(seed) {}

  std::string policy() const override { return "reservoir"; }
  std::size_t size() const override { return rows_.size(); }
  Dataset contents() const override;
  std::uint64_t seen_count() const { return seen_; }

  void update(const Dataset& incoming);
  void update(const Dataset& incoming, std::size_t) override { update(incoming); }
  void resize(std::size_t new_size) override;

  void save(BinaryWriter& w) const override;
  void load(BinaryReader& r) override;

 private:
  Rng rng_;
  std::uint64_t seen_ = 0;
  std::vector<Dataset> rows_;  // single-row views
};

/// Splits capacity evenly over groups (classes or experiences) seen so far:
/// floor(max/G) each, remainder to the lowest keys. Each group is a
/// reservoir resized to its quota before new rows are fed.
class GroupBalancedBuffer final : public ExemplarsBuffer {
 public:
  enum class Key { class_id, experience };

  GroupBalancedBuffer(std::size_t max_size, std::uint64_t seed, Key key);

  std::string policy() const override { return key_ == Key::class_id ? "class_balanced" : "experience_balanced"; }
  std::size_t size() const override;
  Dataset contents() const override;

  void update(const Dataset& incoming, std::size_t exp_index) override;
  void resize(std::size_t new_size) override;

  std::map<std::int64_t, std::size_t> group_sizes() const;
  std::map<std::int64_t, std::size_t> quotas() const;
  const ReservoirBuffer& group(std::int64_t key) const { return groups_.at(key); }

  void save(BinaryWriter& w) const override;
  void load(BinaryReader& r) override;

 private:
  void rebalance();

  std::uint64_t seed_;
  Key key_;
  std::map<std::int64_t, ReservoirBuffer> groups_;
};

/// Quota per key: floor(total/G), remainder to the lowest keys.
std::map<std::int64_t, std::size_t> balanced_quotas(std::size_t total, const std::vector<std::int64_t>& sorted_keys);

/// policy: "reservoir" | "class_balanced" | "experience_balanced".
std::unique_ptr<ExemplarsBuffer> make_buffer(const std::string& policy, std::size_t max_size, std::uint64_t seed);

}  // namespace cl
