#include <algorithm>
#include <cmath>
#include <string>

#include "scr/errors.hpp"
#include "scr/train.hpp"

namespace scr {

std::vector<ForwardResult> noisy_predictions(const MlpModel& model, const Matrix& x,
                                             std::size_t views, Rng& rng) {
  std::vector<ForwardResult> out;
  out.reserve(views);
  for (std::size_t s = 0; s < views; ++s) out.push_back(mlp_forward(model, x, rng, true));
  return out;
}

Matrix pseudo_label_mean(std::span<const Matrix> views) {
  if (views.empty()) throw InputError("pseudo_label_mean: no views");
  if (views.size() == 1) return views.front();
  Matrix mean(views.front().rows(), views.front().cols());
  for (const auto& v : views) {
    if (v.rows() != mean.rows() || v.cols() != mean.cols()) {
      throw InputError("pseudo_label_mean: view shapes differ");
    }
    for (std::size_t i = 0; i < v.size(); ++i) mean.values()[i] += v.values()[i];
  }
  const double inv = 1.0 / static_cast<double>(views.size());
  for (double& m : mean.values()) m *= inv;
  return mean;
}

Matrix pseudo_label_teacher(const TeacherState& teacher, const Matrix& x) {
  return mlp_predict(teacher.model, x);
}

Matrix sharpen(const Matrix& pseudo, double temperature) {
  if (!(temperature > 0.0)) {
    throw ConfigError("sharpen: temperature must be positive, got " + std::to_string(temperature));
  }
  if (temperature == 1.0) return pseudo;
  const double power = 1.0 / temperature;
  Matrix out(pseudo.rows(), pseudo.cols());
  for (std::size_t r = 0; r < pseudo.rows(); ++r) {
    const auto p = pseudo.row(r);
    auto q = out.row(r);
    // Dividing by the row max first keeps small temperatures from underflowing.
    const double peak = *std::max_element(p.begin(), p.end());
    if (!(peak > 0.0)) throw InputError("sharpen: row " + std::to_string(r) + " has no mass");
    double total = 0.0;
    for (std::size_t c = 0; c < p.size(); ++c) {
      q[c] = p[c] == 0.0 ? 0.0 : std::pow(p[c] / peak, power);
      total += q[c];
    }
    for (double& v : q) v /= total;
  }
  return out;
}

void ema_update(TeacherState& teacher, const MlpModel& student, double alpha) {
  if (!same_shape(teacher.model, student)) {
    throw ContractError("ema_update: teacher and student shapes differ");
  }
  const double keep = alpha;
  const double take = 1.0 - alpha;
  auto& dst = teacher.model.mutable_layers();
  const auto& src = student.layers();
  for (std::size_t l = 0; l < dst.size(); ++l) {
    auto w = dst[l].weight.values();
    const auto sw = src[l].weight.values();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = keep * w[i] + take * sw[i];
    for (std::size_t i = 0; i < dst[l].bias.size(); ++i) {
      dst[l].bias[i] = keep * dst[l].bias[i] + take * src[l].bias[i];
    }
  }
}

double eta_schedule(std::size_t epoch, const TrainConfig& config) {
  if (config.eta_start == config.eta_end || config.epochs <= 1) return config.eta_start;
  const double frac =
      static_cast<double>(std::min(epoch, config.epochs - 1)) / static_cast<double>(config.epochs - 1);
  return (1.0 - frac) * config.eta_start + frac * config.eta_end;
}

ConfidentSet update_confident_set(const Matrix& predictions,
                                  std::span<const NodeId> candidate_ids, double eta,
                                  std::size_t epoch) {
  if (predictions.rows() != candidate_ids.size()) {
    throw InputError("update_confident_set: prediction rows do not match candidate ids");
  }
  ConfidentSet set{{}, eta, epoch};
  for (std::size_t i = 0; i < candidate_ids.size(); ++i) {
    const auto row = predictions.row(i);
    if (*std::max_element(row.begin(), row.end()) >= eta) set.node_ids.push_back(candidate_ids[i]);
  }
  return set;
}

LabeledSampler::LabeledSampler(std::vector<NodeId> labeled, std::size_t batch_size)
    : order_(std::move(labeled)), batch_size_(batch_size), cursor_(order_.size()) {
  if (order_.empty()) throw InputError("LabeledSampler: no labeled nodes");
  if (batch_size_ == 0) throw ConfigError("LabeledSampler: batch size must be positive");
}

void LabeledSampler::begin_epoch(Rng& rng) {
  std::sort(order_.begin(), order_.end());
  shuffle(std::span<NodeId>(order_), rng);
  cursor_ = 0;
}

std::vector<NodeId> LabeledSampler::next() {
  const std::size_t end = std::min(order_.size(), cursor_ + batch_size_);
  std::vector<NodeId> out(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                          order_.begin() + static_cast<std::ptrdiff_t>(end));
  cursor_ = end;
  return out;
}

std::size_t LabeledSampler::batches_per_epoch() const {
  return (order_.size() + batch_size_ - 1) / batch_size_;
}

std::vector<NodeId> sample_unlabeled(const ConfidentSet& confident, std::size_t count, Rng& rng) {
  std::vector<NodeId> pool = confident.node_ids;
  const std::size_t take = std::min(count, pool.size());
  if (take == pool.size()) return pool;
  // Partial Fisher-Yates: the first `take` slots end up a uniform sample.
  for (std::size_t i = 0; i < take; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(take);
  return pool;
}

Matrix one_hot_rows(std::span<const NodeId> ids, std::span<const Label> labels,
                    std::size_t num_classes) {
  Matrix out(ids.size(), num_classes);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const Label y = labels[ids[i]];
    if (y >= num_classes) {
      throw InputError("one_hot_rows: node " + std::to_string(ids[i]) + " has no valid label");
    }
    out(i, y) = 1.0;
  }
  return out;
}

Batch sample_batch(LabeledSampler& labeled, const ConfidentSet& confident,
                   std::size_t unlabeled_count, Rng& rng, std::span<const Label> labels,
                   std::size_t num_classes) {
  Batch batch;
  batch.labeled_ids = labeled.next();
  batch.unlabeled_ids = sample_unlabeled(confident, unlabeled_count, rng);
  batch.labels = one_hot_rows(batch.labeled_ids, labels, num_classes);
  return batch;
}

CompositeLoss compute_loss(std::span<const Matrix> views, const Matrix& labels,
                           const Matrix& pseudo_sharp, double lambda, DistanceKind dist,
                           bool warmup_active) {
  if (views.empty()) throw InputError("compute_loss: no views");
  const std::size_t num_labeled = labels.rows();
  const std::size_t rows = views.front().rows();
  const std::size_t classes = views.front().cols();
  if (rows < num_labeled) throw InputError("compute_loss: fewer view rows than labels");
  const std::size_t num_unlabeled = rows - num_labeled;
  const bool consistency = lambda != 0.0 && !warmup_active && num_unlabeled > 0;
  if (consistency && (pseudo_sharp.rows() != num_unlabeled || pseudo_sharp.cols() != classes)) {
    throw InputError("compute_loss: pseudo labels do not match the unlabeled rows");
  }

  const double inv_views = 1.0 / static_cast<double>(views.size());
  CompositeLoss out;
  double supervised = 0.0;
  double agreement = 0.0;
  for (const auto& view : views) {
    if (view.rows() != rows || view.cols() != classes) {
      throw InputError("compute_loss: view shapes differ");
    }
    Matrix dlogits(rows, classes);
    if (num_labeled > 0) {
      const LossValue ce = cross_entropy(slice_rows(view, 0, num_labeled), labels);
      supervised += ce.loss;
      for (std::size_t i = 0; i < ce.grad.size(); ++i) {
        dlogits.values()[i] = ce.grad.values()[i] * inv_views;
      }
    }
    if (consistency) {
      const Matrix unlabeled = slice_rows(view, num_labeled, rows);
      const LossValue d = distance(dist, pseudo_sharp, unlabeled);
      agreement += d.loss;
      const Matrix g = softmax_backward(unlabeled, d.grad);
      const double scale = lambda * inv_views;
      for (std::size_t i = 0; i < g.size(); ++i) {
        dlogits.values()[num_labeled * classes + i] = g.values()[i] * scale;
      }
    }
    out.dlogits.push_back(std::move(dlogits));
  }
  out.supervised = supervised * inv_views;
  out.consistency = consistency ? lambda * agreement * inv_views : 0.0;
  out.total = out.supervised + out.consistency;
  return out;
}

double prediction_accuracy(const Matrix& predictions, std::span<const NodeId> ids,
                           std::span<const Label> labels) {
  if (ids.empty()) throw InputError("evaluate: empty node set");
  if (predictions.rows() != ids.size()) {
    throw InputError("evaluate: prediction rows do not match node ids");
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= labels.size() || labels[ids[i]] == kUnknownLabel) {
      throw InputError("evaluate: node " + std::to_string(ids[i]) + " has no ground truth");
    }
    if (argmax(predictions.row(i)) == labels[ids[i]]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(ids.size());
}

double evaluate(const MlpModel& model, std::span<const NodeId> ids,
                std::span<const Label> labels, const Matrix& inputs) {
  if (ids.empty()) throw InputError("evaluate: empty node set");
  return prediction_accuracy(mlp_predict(model, gather_rows(inputs, ids)), ids, labels);
}

}  // namespace scr
