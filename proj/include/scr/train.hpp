#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "scr/config.hpp"
#include "scr/loss.hpp"
#include "scr/matrix.hpp"
#include "scr/nn.hpp"
#include "scr/optim.hpp"
#include "scr/rng.hpp"

namespace scr {

using Label = std::uint64_t;
inline constexpr Label kUnknownLabel = std::numeric_limits<Label>::max();

// EMA shadow of the student. Only ema_update writes to it.
struct TeacherState {
  MlpModel model;
};

struct ConfidentSet {
  std::vector<NodeId> node_ids;  // sorted
  double eta_used = 0.0;
  std::size_t epoch_built = 0;
};

struct Batch {
  std::vector<NodeId> labeled_ids;
  std::vector<NodeId> unlabeled_ids;
  Matrix labels;  // one-hot, aligned with labeled_ids
};

// S training-mode forward passes over the same rows, each with fresh masks.
std::vector<ForwardResult> noisy_predictions(const MlpModel& model, const Matrix& x,
                                             std::size_t views, Rng& rng);

// Entrywise mean of the views.
Matrix pseudo_label_mean(std::span<const Matrix> views);

// Teacher forward with dropout disabled.
Matrix pseudo_label_teacher(const TeacherState& teacher, const Matrix& x);

// Row-wise p^(1/T) / sum p^(1/T). Throws ConfigError for T <= 0.
Matrix sharpen(const Matrix& pseudo, double temperature);

// teacher = alpha * teacher + (1 - alpha) * student, parameter by parameter.
void ema_update(TeacherState& teacher, const MlpModel& student, double alpha);

// Linear from eta_start at epoch 0 to eta_end at epoch epochs - 1.
double eta_schedule(std::size_t epoch, const TrainConfig& config);

// Nodes whose row maximum is >= eta. `predictions` row i belongs to
// candidate_ids[i]; candidate_ids must be sorted.
ConfidentSet update_confident_set(const Matrix& predictions,
                                  std::span<const NodeId> candidate_ids, double eta,
                                  std::size_t epoch);

// Walks V_L in a fresh random order each epoch, N_L ids at a time.
class LabeledSampler {
 public:
  LabeledSampler(std::vector<NodeId> labeled, std::size_t batch_size);

  void begin_epoch(Rng& rng);
  bool has_next() const { return cursor_ < order_.size(); }
  std::vector<NodeId> next();
  std::size_t batches_per_epoch() const;

 private:
  std::vector<NodeId> order_;
  std::size_t batch_size_;
  std::size_t cursor_ = 0;
};

// Up to `count` distinct ids drawn uniformly from the confident set (all of
// it when smaller).
std::vector<NodeId> sample_unlabeled(const ConfidentSet& confident, std::size_t count, Rng& rng);

Matrix one_hot_rows(std::span<const NodeId> ids, std::span<const Label> labels,
                    std::size_t num_classes);

Batch sample_batch(LabeledSampler& labeled, const ConfidentSet& confident,
                   std::size_t unlabeled_count, Rng& rng, std::span<const Label> labels,
                   std::size_t num_classes);

struct CompositeLoss {
  double total = 0.0;
  double supervised = 0.0;
  double consistency = 0.0;      // already multiplied by lambda
  std::vector<Matrix> dlogits;   // per view, rows = labeled then unlabeled
};

// Batch loss over S views whose rows are [labeled; unlabeled]:
//   (1/S) sum_s CE(labels, view_s[labeled])
//   + lambda (1/S) sum_s dist(pseudo_sharp, view_s[unlabeled])
// The consistency term is dropped when lambda == 0, warmup is active or the
// unlabeled part is empty. pseudo_sharp is treated as a constant.
CompositeLoss compute_loss(std::span<const Matrix> views, const Matrix& labels,
                           const Matrix& pseudo_sharp, double lambda, DistanceKind dist,
                           bool warmup_active);

// Accuracy of row-aligned predictions against labels[ids[i]].
double prediction_accuracy(const Matrix& predictions, std::span<const NodeId> ids,
                           std::span<const Label> labels);

// Inference accuracy of `model` on `ids`; inputs holds one row per node.
double evaluate(const MlpModel& model, std::span<const NodeId> ids,
                std::span<const Label> labels, const Matrix& inputs);

struct Splits {
  std::vector<NodeId> train;
  std::vector<NodeId> valid;
  std::vector<NodeId> test;
};

struct TrainData {
  const Matrix& inputs;  // N x input_dim (concatenated hop features)
  std::span<const Label> labels;
  std::size_t num_classes;
  const Splits& splits;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double supervised_loss = 0.0;
  double consistency_loss = 0.0;
  double eta = 0.0;
  std::size_t confident_set_size = 0;
  double train_acc = 0.0;
  double valid_acc = 0.0;
  double test_acc = 0.0;
  bool warmup_active = false;

  friend bool operator==(const EpochMetrics&, const EpochMetrics&) = default;
};

// Independent random streams used by the trainer, all derived from the seed.
struct TrainStreams {
  Rng init;
  Rng dropout;
  Rng labeled;
  Rng unlabeled;

  explicit TrainStreams(std::uint64_t seed);
};

MlpModel make_model(const TrainConfig& config, std::size_t input_dim, std::size_t num_classes,
                    Rng& rng);

// Read-only view of the trainer state around parameter updates.
class TrainObserver {
 public:
  virtual ~TrainObserver() = default;
  virtual void before_optimizer_step(const MlpModel& /*student*/, const TeacherState* /*teacher*/) {}
  virtual void after_optimizer_step(const MlpModel& /*student*/, const TeacherState* /*teacher*/) {}
  virtual void after_ema_update(const MlpModel& /*student*/, const TeacherState& /*teacher*/) {}
};

struct TrainResult {
  MlpModel model;  // best-validation snapshot
  std::vector<EpochMetrics> metrics;
  std::size_t best_epoch = 0;
};

TrainResult train(const TrainConfig& config, const TrainData& data,
                  TrainObserver* observer = nullptr);

}  // namespace scr
