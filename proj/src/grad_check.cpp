#include "scr/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "scr/errors.hpp"

namespace scr {

GradCheckReport grad_check(const MlpModel& model, const LossClosure& loss, double eps) {
  MlpModel probe = model;
  const LossWithGradients base = loss(probe);
  if (loss(probe).loss != base.loss) {
    throw ContractError("grad_check: loss closure is not deterministic");
  }
  const std::vector<double> analytic = base.grads.flatten();
  std::vector<double> params = model.flatten();
  if (analytic.size() != params.size()) {
    throw ContractError("grad_check: gradient count does not match parameter count");
  }

  GradCheckReport report;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + eps;
    probe.assign(params);
    const double plus = loss(probe).loss;
    params[i] = saved - eps;
    probe.assign(params);
    const double minus = loss(probe).loss;
    params[i] = saved;

    const double numeric = (plus - minus) / (2.0 * eps);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-12});
    const double rel = std::abs(analytic[i] - numeric) / denom;
    if (rel > report.max_relative_error) {
      report = {rel, i, analytic[i], numeric};
    }
  }
  return report;
}

}  // namespace scr
