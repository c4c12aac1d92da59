#include "scr/loss.hpp"

#include <cmath>
#include <string>

#include "scr/errors.hpp"

namespace scr {
namespace {

void check_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InputError(std::string(what) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
  }
}

std::size_t one_hot_class(std::span<const double> row, std::size_t r) {
  std::size_t hot = row.size();
  for (std::size_t c = 0; c < row.size(); ++c) {
    if (row[c] == 1.0 && hot == row.size()) {
      hot = c;
    } else if (row[c] != 0.0) {
      hot = row.size();
      break;
    }
  }
  if (hot == row.size()) {
    throw InputError("cross_entropy: target row " + std::to_string(r) + " is not one-hot");
  }
  return hot;
}

}  // namespace

DistanceKind parse_distance(std::string_view name) {
  if (name == "mse") return DistanceKind::mse;
  if (name == "kl") return DistanceKind::kl;
  throw ConfigError("unknown distance '" + std::string(name) + "' (expected mse or kl)");
}

std::string_view to_string(DistanceKind kind) {
  return kind == DistanceKind::mse ? "mse" : "kl";
}

LossValue cross_entropy(const Matrix& probs, const Matrix& targets) {
  check_same_shape(probs, targets, "cross_entropy");
  LossValue out{0.0, Matrix(probs.rows(), probs.cols())};
  if (probs.rows() == 0) return out;
  const double inv_batch = 1.0 / static_cast<double>(probs.rows());
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    const std::size_t cls = one_hot_class(targets.row(r), r);
    out.loss -= std::log(probs(r, cls) + kLogEps);
    for (std::size_t c = 0; c < probs.cols(); ++c) {
      out.grad(r, c) = (probs(r, c) - targets(r, c)) * inv_batch;
    }
  }
  out.loss *= inv_batch;
  return out;
}

LossValue dist_mse(const Matrix& pseudo, const Matrix& pred) {
  check_same_shape(pseudo, pred, "dist_mse");
  LossValue out{0.0, Matrix(pred.rows(), pred.cols())};
  if (pred.size() == 0) return out;
  const double inv = 1.0 / static_cast<double>(pred.size());
  const auto p = pred.values();
  const auto q = pseudo.values();
  auto g = out.grad.values();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double diff = p[i] - q[i];
    out.loss += diff * diff;
    g[i] = 2.0 * diff * inv;
  }
  out.loss *= inv;
  return out;
}

LossValue dist_kl(const Matrix& pseudo, const Matrix& pred) {
  check_same_shape(pseudo, pred, "dist_kl");
  LossValue out{0.0, Matrix(pred.rows(), pred.cols())};
  if (pred.rows() == 0) return out;
  const double inv_batch = 1.0 / static_cast<double>(pred.rows());
  const auto p = pred.values();
  const auto q = pseudo.values();
  auto g = out.grad.values();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (q[i] == 0.0) continue;
    const bool clamped = p[i] < kLogEps;
    const double safe = clamped ? kLogEps : p[i];
    out.loss += q[i] * (std::log(q[i]) - std::log(safe));
    g[i] = clamped ? 0.0 : -q[i] / safe * inv_batch;
  }
  out.loss *= inv_batch;
  return out;
}

LossValue distance(DistanceKind kind, const Matrix& pseudo, const Matrix& pred) {
  return kind == DistanceKind::mse ? dist_mse(pseudo, pred) : dist_kl(pseudo, pred);
}

Matrix softmax_backward(const Matrix& probs, const Matrix& dprobs) {
  check_same_shape(probs, dprobs, "softmax_backward");
  Matrix dlogits(probs.rows(), probs.cols());
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    const auto p = probs.row(r);
    const auto g = dprobs.row(r);
    double dot = 0.0;
    for (std::size_t c = 0; c < p.size(); ++c) dot += p[c] * g[c];
    auto out = dlogits.row(r);
    for (std::size_t c = 0; c < p.size(); ++c) out[c] = p[c] * (g[c] - dot);
  }
  return dlogits;
}

}  // namespace scr
