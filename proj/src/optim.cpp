#include "scr/optim.hpp"

#include <cmath>

#include "scr/errors.hpp"

namespace scr {
namespace {

void ensure_moments(OptimizerState& state, std::size_t n) {
  if (state.first_moment.empty() && state.second_moment.empty()) {
    state.first_moment.assign(n, 0.0);
    state.second_moment.assign(n, 0.0);
  }
  if (state.first_moment.size() != n || state.second_moment.size() != n) {
    throw ContractError("adam_step: moment arrays do not match parameter count");
  }
}

// Updates params[offset, offset + g.size()) in place; step already incremented.
void update_block(std::span<double> params, std::span<const double> g, std::size_t offset,
                  OptimizerState& state) {
  const auto& o = state.options;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(o.beta1, t);
  const double correction2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t i = 0; i < g.size(); ++i) {
    double& m = state.first_moment[offset + i];
    double& v = state.second_moment[offset + i];
    m = o.beta1 * m + (1.0 - o.beta1) * g[i];
    v = o.beta2 * v + (1.0 - o.beta2) * g[i] * g[i];
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    params[i] -= o.lr * m_hat / (std::sqrt(v_hat) + o.eps);
  }
}

}  // namespace

void adam_step(std::span<double> params, std::span<const double> grads, OptimizerState& state) {
  if (params.size() != grads.size()) throw ContractError("adam_step: shape mismatch");
  ensure_moments(state, params.size());
  ++state.step;
  update_block(params, grads, 0, state);
}

void adam_step(MlpModel& model, const MlpGradients& grads, OptimizerState& state) {
  if (grads.layers.size() != model.layers().size()) {
    throw ContractError("adam_step: gradient layer count mismatch");
  }
  ensure_moments(state, model.num_parameters());
  ++state.step;
  std::size_t offset = 0;
  auto& layers = model.mutable_layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto w = layers[l].weight.values();
    const auto gw = grads.layers[l].weight.values();
    if (gw.size() != w.size() || grads.layers[l].bias.size() != layers[l].bias.size()) {
      throw ContractError("adam_step: gradient shape mismatch");
    }
    update_block(w, gw, offset, state);
    offset += w.size();
    update_block(layers[l].bias, grads.layers[l].bias, offset, state);
    offset += layers[l].bias.size();
  }
}

}  // namespace scr
