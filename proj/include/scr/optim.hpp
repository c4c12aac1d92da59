#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "scr/nn.hpp"

namespace scr {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam. Moments are flat arrays in MlpModel::flatten() order
// and are allocated lazily on the first step.
struct OptimizerState {
  AdamOptions options;
  std::size_t step = 0;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
};

void adam_step(std::span<double> params, std::span<const double> grads, OptimizerState& state);
void adam_step(MlpModel& model, const MlpGradients& grads, OptimizerState& state);

}  // namespace scr
