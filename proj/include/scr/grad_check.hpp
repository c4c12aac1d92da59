#pragma once

#include <functional>

#include "scr/nn.hpp"

namespace scr {

struct LossWithGradients {
  double loss = 0.0;
  MlpGradients grads;
};

// Must be deterministic in the model parameters (dropout masks frozen).
using LossClosure = std::function<LossWithGradients(const MlpModel&)>;

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Central differences over every parameter against the closure's analytic
// gradients. Relative error is |a - n| / max(|a|, |n|, 1e-12). Throws
// ContractError when two evaluations at the same point disagree.
GradCheckReport grad_check(const MlpModel& model, const LossClosure& loss, double eps);

}  // namespace scr
