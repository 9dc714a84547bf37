#include "clstream/metrics.hpp"

#include <algorithm>

#include "clstream/error.hpp"

namespace cl {

const char* to_string(Granularity g) {
  switch (g) {
    case Granularity::minibatch: return "minibatch";
    case Granularity::epoch: return "epoch";
    case Granularity::experience: return "experience";
    case Granularity::stream: return "stream";
  }
  return "?";
}

const char* to_string(Phase p) { return p == Phase::train ? "train" : "eval"; }

Granularity granularity_from_string(const std::string& s) {
  if (s == "minibatch") return Granularity::minibatch;
  if (s == "epoch") return Granularity::epoch;
  if (s == "experience") return Granularity::experience;
  if (s == "stream") return Granularity::stream;
  throw InvalidArgument("unknown granularity '" + s + "'");
}

Phase phase_from_string(const std::string& s) {
  if (s == "train") return Phase::train;
  if (s == "eval") return Phase::eval;
  throw InvalidArgument("unknown phase '" + s + "'");
}

std::size_t argmax(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < row.size(); ++c)
    if (row[c] > row[best]) best = c;
  return best;
}

void accuracy_update(RunningMean& state, const Matrix& logits, std::span<const ClassId> targets) {
  if (logits.rows() != targets.size()) throw ShapeError("accuracy_update: logits rows != targets length");
  std::size_t hits = 0;
  for (std::size_t r = 0; r < logits.rows(); ++r)
    if (logits.cols() > 0 && static_cast<ClassId>(argmax(logits.row(r))) == targets[r]) ++hits;
  state.add(static_cast<double>(hits), static_cast<double>(targets.size()));
}

void AccuracyMatrix::record(std::size_t trained_through, std::size_t eval_exp, double accuracy) {
  if (!(accuracy >= 0.0 && accuracy <= 1.0)) throw InvalidArgument("AccuracyMatrix: accuracy outside [0, 1]");
  entries_[{trained_through, eval_exp}] = accuracy;
}

std::optional<double> AccuracyMatrix::get(std::size_t trained_through, std::size_t eval_exp) const {
  const auto it = entries_.find({trained_through, eval_exp});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

double AccuracyMatrix::at(std::size_t trained_through, std::size_t eval_exp) const {
  const auto v = get(trained_through, eval_exp);
  if (!v)
    throw StateError("accuracy matrix has no entry R[" + std::to_string(trained_through) + "," +
                     std::to_string(eval_exp) + "]");
  return *v;
}

std::size_t AccuracyMatrix::rows() const {
  std::size_t n = 0;
  for (const auto& [key, _] : entries_) n = std::max(n, key.first + 1);
  return n;
}

double forgetting(const AccuracyMatrix& r, std::size_t eval_exp, std::size_t trained_through) {
  const double current = r.at(trained_through, eval_exp);
  std::optional<double> best;
  for (std::size_t j = 0; j < trained_through; ++j)
    if (const auto v = r.get(j, eval_exp)) best = best ? std::max(*best, *v) : *v;
  if (!best) throw StateError("forgetting: no earlier accuracy for experience " + std::to_string(eval_exp));
  return *best - current;
}

double bwt(const AccuracyMatrix& r, std::size_t n_trained) {
  if (n_trained < 2) throw StateError("bwt: needs at least two trained experiences");
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < n_trained; ++i) sum += r.at(n_trained - 1, i) - r.at(i, i);
  return sum / static_cast<double>(n_trained - 1);
}

void ExperienceTimer::start() {
  if (running_) throw StateError("ExperienceTimer: already timing an experience");
  running_ = true;
  begin_ = std::chrono::steady_clock::now();
}

double ExperienceTimer::stop() {
  if (!running_) throw StateError("ExperienceTimer: stop without start");
  running_ = false;
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - begin_).count();
}

}  // namespace cl
