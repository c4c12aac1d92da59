#include <algorithm>
#include <optional>
#include <string>

#include "scr/errors.hpp"
#include "scr/train.hpp"

namespace scr {
namespace {

void check_data(const TrainData& data) {
  if (data.inputs.rows() != data.labels.size()) {
    throw InputError("train: " + std::to_string(data.inputs.rows()) + " input rows but " +
                     std::to_string(data.labels.size()) + " labels");
  }
  if (data.num_classes < 1) throw InputError("train: need at least one class");
  if (data.splits.train.empty()) throw InputError("train: empty labeled set");
  for (NodeId id : data.splits.train) {
    if (id >= data.labels.size() || data.labels[id] >= data.num_classes) {
      throw InputError("train: labeled node " + std::to_string(id) + " has no valid label");
    }
  }
}

std::vector<NodeId> complement(std::size_t n, std::vector<NodeId> excluded) {
  std::sort(excluded.begin(), excluded.end());
  std::vector<NodeId> out;
  out.reserve(n - std::min(n, excluded.size()));
  for (NodeId i = 0; i < n; ++i) {
    if (!std::binary_search(excluded.begin(), excluded.end(), i)) out.push_back(i);
  }
  return out;
}

double split_accuracy(const Matrix& all_probs, const std::vector<NodeId>& ids,
                      std::span<const Label> labels) {
  if (ids.empty()) return 0.0;
  return prediction_accuracy(gather_rows(all_probs, ids), ids, labels);
}

}  // namespace

TrainStreams::TrainStreams(std::uint64_t seed)
    : init(Rng(seed).fork(1)),
      dropout(Rng(seed).fork(2)),
      labeled(Rng(seed).fork(3)),
      unlabeled(Rng(seed).fork(4)) {}

MlpModel make_model(const TrainConfig& config, std::size_t input_dim, std::size_t num_classes,
                    Rng& rng) {
  std::vector<std::size_t> dims{input_dim};
  dims.insert(dims.end(), config.hidden.begin(), config.hidden.end());
  dims.push_back(num_classes);
  return MlpModel::glorot(std::move(dims), config.dropout, rng);
}

TrainResult train(const TrainConfig& config, const TrainData& data, TrainObserver* observer) {
  config.validate();
  check_data(data);

  TrainStreams streams(config.seed);
  MlpModel student = make_model(config, data.inputs.cols(), data.num_classes, streams.init);
  TrainResult result{student, {}, 0};
  if (config.epochs == 0) return result;

  const bool mean_teacher = config.mode == Mode::scr_m;
  std::optional<TeacherState> teacher;
  if (mean_teacher) teacher = TeacherState{student};

  OptimizerState optimizer;
  optimizer.options.lr = config.lr;

  const std::vector<NodeId> unlabeled_pool = complement(data.inputs.rows(), data.splits.train);
  const Matrix unlabeled_inputs = gather_rows(data.inputs, unlabeled_pool);
  const std::size_t warmup = config.warmup_epochs();

  LabeledSampler sampler(data.splits.train, config.batch_labeled);
  ConfidentSet confident;
  const ConfidentSet no_unlabeled;
  double best_valid = -1.0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double eta = eta_schedule(epoch, config);
    const bool warmup_active = epoch < warmup;
    if (epoch % config.beta == 0 && !unlabeled_pool.empty()) {
      const Matrix scores = mean_teacher ? pseudo_label_teacher(*teacher, unlabeled_inputs)
                                         : mlp_predict(student, unlabeled_inputs);
      confident = update_confident_set(scores, unlabeled_pool, eta, epoch);
    }
    const bool consistency_on =
        config.lambda != 0.0 && !warmup_active && config.batch_unlabeled > 0;

    double supervised_sum = 0.0;
    double consistency_sum = 0.0;
    std::size_t steps = 0;
    sampler.begin_epoch(streams.labeled);
    while (sampler.has_next()) {
      const Batch batch =
          sample_batch(sampler, consistency_on ? confident : no_unlabeled,
                       config.batch_unlabeled, streams.unlabeled, data.labels, data.num_classes);
      std::vector<NodeId> rows = batch.labeled_ids;
      rows.insert(rows.end(), batch.unlabeled_ids.begin(), batch.unlabeled_ids.end());
      const Matrix x = gather_rows(data.inputs, rows);

      std::vector<ForwardResult> views = noisy_predictions(student, x, config.views, streams.dropout);
      std::vector<Matrix> probs;
      probs.reserve(views.size());
      for (const auto& v : views) probs.push_back(v.probs);

      Matrix pseudo_sharp;
      if (!batch.unlabeled_ids.empty()) {
        const std::size_t first = batch.labeled_ids.size();
        Matrix pseudo;
        if (mean_teacher) {
          pseudo = pseudo_label_teacher(*teacher, slice_rows(x, first, x.rows()));
        } else {
          std::vector<Matrix> unlabeled_views;
          for (const auto& p : probs) unlabeled_views.push_back(slice_rows(p, first, p.rows()));
          pseudo = pseudo_label_mean(unlabeled_views);
        }
        pseudo_sharp = sharpen(pseudo, config.temperature);
      }

      const CompositeLoss loss = compute_loss(probs, batch.labels, pseudo_sharp, config.lambda,
                                              config.dist, warmup_active);
      MlpGradients grads = mlp_backward(student, views[0].cache, loss.dlogits[0]);
      for (std::size_t s = 1; s < views.size(); ++s) {
        grads += mlp_backward(student, views[s].cache, loss.dlogits[s]);
      }

      const TeacherState* teacher_view = teacher ? &*teacher : nullptr;
      if (observer) observer->before_optimizer_step(student, teacher_view);
      adam_step(student, grads, optimizer);
      if (observer) observer->after_optimizer_step(student, teacher_view);
      if (teacher) {
        ema_update(*teacher, student, config.alpha);
        if (observer) observer->after_ema_update(student, *teacher);
      }

      supervised_sum += loss.supervised;
      consistency_sum += loss.consistency;
      ++steps;
    }

    const Matrix all_probs = mlp_predict(student, data.inputs);
    EpochMetrics m;
    m.epoch = epoch;
    m.supervised_loss = supervised_sum / static_cast<double>(steps);
    m.consistency_loss = consistency_sum / static_cast<double>(steps);
    m.eta = eta;
    m.confident_set_size = confident.node_ids.size();
    m.train_acc = split_accuracy(all_probs, data.splits.train, data.labels);
    m.valid_acc = split_accuracy(all_probs, data.splits.valid, data.labels);
    m.test_acc = split_accuracy(all_probs, data.splits.test, data.labels);
    m.warmup_active = warmup_active;
    result.metrics.push_back(m);

    if (m.valid_acc > best_valid) {
      best_valid = m.valid_acc;
      result.model = student;
      result.best_epoch = epoch;
    }
  }
  return result;
}

}  // namespace scr
