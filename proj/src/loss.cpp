#include "clstream/loss.hpp"

#include <algorithm>
#include <cmath>

#include "clstream/error.hpp"

namespace cl {

LossResult softmax_cross_entropy(const Matrix& logits, std::span<const ClassId> targets,
                                 std::span<const std::uint8_t> class_mask) {
  const std::size_t batch = logits.rows(), classes = logits.cols();
  if (targets.size() != batch) throw ShapeError("softmax_cross_entropy: targets length != batch size");
  if (!class_mask.empty() && class_mask.size() != classes)
    throw ShapeError("softmax_cross_entropy: class mask length != class count");

  LossResult out;
  out.dlogits = Matrix(batch, classes);
  if (batch == 0) return out;

  const double inv_b = 1.0 / static_cast<double>(batch);
  std::vector<double> z(classes);
  for (std::size_t r = 0; r < batch; ++r) {
    const ClassId t = targets[r];
    if (t < 0 || static_cast<std::size_t>(t) >= classes)
      throw InvalidArgument("softmax_cross_entropy: target " + std::to_string(t) + " out of range");
    auto row = logits.row(r);
    for (std::size_t c = 0; c < classes; ++c)
      z[c] = (!class_mask.empty() && class_mask[c] == 0) ? kMaskedLogit : row[c];
    const double m = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) sum += std::exp(z[c] - m);
    const double log_sum = std::log(sum);
    out.loss += (m + log_sum - z[static_cast<std::size_t>(t)]) * inv_b;
    auto d = out.dlogits.row(r);
    for (std::size_t c = 0; c < classes; ++c) d[c] = std::exp(z[c] - m - log_sum) * inv_b;
    d[static_cast<std::size_t>(t)] -= inv_b;
  }
  return out;
}

Matrix softmax(const Matrix& logits, double temperature) {
  if (!(temperature > 0.0)) throw InvalidArgument("softmax: temperature must be positive");
  Matrix p(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto in = logits.row(r);
    auto out = p.row(r);
    if (in.empty()) continue;
    const double m = *std::max_element(in.begin(), in.end()) / temperature;
    double sum = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) sum += (out[c] = std::exp(in[c] / temperature - m));
    for (double& v : out) v /= sum;
  }
  return p;
}

}  // namespace cl
