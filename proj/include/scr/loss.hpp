#pragma once

#include <string_view>

#include "scr/matrix.hpp"

namespace scr {

// Floor applied to probabilities before taking logarithms.
inline constexpr double kLogEps = 1e-12;

enum class DistanceKind { mse, kl };

DistanceKind parse_distance(std::string_view name);
std::string_view to_string(DistanceKind kind);

struct LossValue {
  double loss = 0.0;
  Matrix grad;  // w.r.t. logits for cross_entropy, w.r.t. predictions for distances
};

// Mean over the batch of -ln(p[target] + eps). Gradient is (probs - targets) / B
// with respect to the logits. Target rows must be exactly one-hot.
LossValue cross_entropy(const Matrix& probs, const Matrix& targets);

// Mean over batch and classes of (pred - pseudo)^2. pseudo is a constant.
LossValue dist_mse(const Matrix& pseudo, const Matrix& pred);

// (1/B) sum_i KL(pseudo_i || pred_i) with 0 ln 0 = 0; pred clamped at kLogEps.
LossValue dist_kl(const Matrix& pseudo, const Matrix& pred);

LossValue distance(DistanceKind kind, const Matrix& pseudo, const Matrix& pred);

// Chains dLoss/dProbs through the row softmax into dLoss/dLogits.
Matrix softmax_backward(const Matrix& probs, const Matrix& dprobs);

}  // namespace scr
