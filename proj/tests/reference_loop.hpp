#pragma once

#include <optional>

#include "scr/train.hpp"

namespace scr::testing {

// Supervised-only loop written against the primitives: no pseudo labels,
// no confident set, no unlabeled sampling.
inline TrainResult supervised_only(const TrainConfig& config, const TrainData& data) {
  TrainStreams streams(config.seed);
  MlpModel model = make_model(config, data.inputs.cols(), data.num_classes, streams.init);
  OptimizerState optimizer;
  optimizer.options.lr = config.lr;
  LabeledSampler sampler(data.splits.train, config.batch_labeled);
  TrainResult result{model, {}, 0};
  double best = -1.0;
  const double inv_views = 1.0 / static_cast<double>(config.views);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    sampler.begin_epoch(streams.labeled);
    double loss_sum = 0.0;
    std::size_t steps = 0;
    while (sampler.has_next()) {
      const auto ids = sampler.next();
      const Matrix x = gather_rows(data.inputs, ids);
      const Matrix y = one_hot_rows(ids, data.labels, data.num_classes);
      std::optional<MlpGradients> grads;
      double loss = 0.0;
      for (std::size_t s = 0; s < config.views; ++s) {
        const auto fwd = mlp_forward(model, x, streams.dropout, true);
        LossValue ce = cross_entropy(fwd.probs, y);
        loss += ce.loss;
        for (double& g : ce.grad.values()) g *= inv_views;
        auto g = mlp_backward(model, fwd.cache, ce.grad);
        if (grads) {
          *grads += g;
        } else {
          grads = std::move(g);
        }
      }
      adam_step(model, *grads, optimizer);
      loss_sum += loss * inv_views;
      ++steps;
    }
    EpochMetrics m;
    m.epoch = epoch;
    m.supervised_loss = loss_sum / static_cast<double>(steps);
    m.valid_acc = evaluate(model, data.splits.valid, data.labels, data.inputs);
    m.test_acc = evaluate(model, data.splits.test, data.labels, data.inputs);
    m.train_acc = evaluate(model, data.splits.train, data.labels, data.inputs);
    result.metrics.push_back(m);
    if (m.valid_acc > best) {
      best = m.valid_acc;
      result.model = model;
      result.best_epoch = epoch;
    }
  }
  return result;
}

}  // namespace scr::testing
