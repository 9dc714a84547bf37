#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>

#include "clstream/matrix.hpp"
#include "clstream/network.hpp"

namespace cl {

enum class Granularity { minibatch, epoch, experience, stream };
enum class Phase { train, eval };

const char* to_string(Granularity g);
const char* to_string(Phase p);
Granularity granularity_from_string(const std::string& s);
Phase phase_from_string(const std::string& s);

/// One emitted scalar. Stream-granularity values use experience_index -1.
struct MetricValue {
  std::string name;
  double value = 0.0;
  std::uint64_t x_axis = 0;
  Granularity granularity = Granularity::minibatch;
  Phase phase = Phase::train;
  std::string stream_name;
  int task_label = 0;
  std::int64_t experience_index = -1;

  friend bool operator==(const MetricValue&, const MetricValue&) = default;
};

/// Weighted running mean: sum / weight.
class RunningMean {
 public:
  void add(double value_sum, double weight) {
    sum_ += value_sum;
    weight_ += weight;
  }
  double result() const { return weight_ > 0.0 ? sum_ / weight_ : 0.0; }
  double sum() const { return sum_; }
  double weight() const { return weight_; }
  void reset() { sum_ = weight_ = 0.0; }
  void restore(double sum, double weight) {
    sum_ = sum;
    weight_ = weight;
  }

 private:
  double sum_ = 0.0;
  double weight_ = 0.0;
};

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> row);

/// Adds (#argmax matches, batch size) to the state.
void accuracy_update(RunningMean& state, const Matrix& logits, std::span<const ClassId> targets);
inline double accuracy_result(const RunningMean& state) { return state.result(); }

/// R[k, i]: accuracy on experience i after training through experience k.
class AccuracyMatrix {
 public:
  void record(std::size_t trained_through, std::size_t eval_exp, double accuracy);
  std::optional<double> get(std::size_t trained_through, std::size_t eval_exp) const;
  double at(std::size_t trained_through, std::size_t eval_exp) const;
  bool empty() const { return entries_.empty(); }
  const std::map<std::pair<std::size_t, std::size_t>, double>& entries() const { return entries_; }
  /// Largest trained-through index recorded + 1.
  std::size_t rows() const;
  void clear() { entries_.clear(); }

  friend bool operator==(const AccuracyMatrix&, const AccuracyMatrix&) = default;

 private:
  std::map<std::pair<std::size_t, std::size_t>, double> entries_;
};

/// max_{j<k} R[j,i] − R[k,i]. Not clamped.
double forgetting(const AccuracyMatrix& r, std::size_t eval_exp, std::size_t trained_through);

/// Mean over i < T−1 of R[T−1,i] − R[i,i].
double bwt(const AccuracyMatrix& r, std::size_t n_trained);

/// Wall-clock timer for one experience at a time.
class ExperienceTimer {
 public:
  void start();
  /// Seconds since start().
  double stop();
  bool running() const { return running_; }

 private:
  std::chrono::steady_clock::time_point begin_{};
  bool running_ = false;
};

}  // namespace cl
