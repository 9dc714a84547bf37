#pragma once

#include <cstdint>
#include <span>

#include "clstream/matrix.hpp"
#include "clstream/network.hpp"

namespace cl {

/// Stand-in for −∞ on masked logits; applied before max-subtraction.
inline constexpr double kMaskedLogit = -1e30;

struct LossResult {
  double loss = 0.0;
  Matrix dlogits;  // d(mean loss)/d(logits)
};

/// Mean softmax cross-entropy over the batch. When `class_mask` is non-empty
/// it must have one entry per column; zero entries are masked out.
LossResult softmax_cross_entropy(const Matrix& logits, std::span<const ClassId> targets,
                                 std::span<const std::uint8_t> class_mask = {});

/// Row-wise softmax of logits / temperature (max-subtracted).
Matrix softmax(const Matrix& logits, double temperature = 1.0);

}  // namespace cl
