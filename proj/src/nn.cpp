#include "scr/nn.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

#include "scr/checksum.hpp"
#include "scr/errors.hpp"

namespace scr {
namespace {

std::uint64_t next_revision() {
  static std::atomic<std::uint64_t> counter{1};
  return counter++;
}

void check_rate(double rate) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw InputError("dropout: rate " + std::to_string(rate) + " outside [0, 1)");
  }
}

Matrix affine(const Matrix& x, const DenseLayer& layer) {
  Matrix z = matmul(x, layer.weight);
  for (std::size_t r = 0; r < z.rows(); ++r) {
    auto row = z.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += layer.bias[c];
  }
  return z;
}

Matrix relu(const Matrix& z) {
  Matrix a = z;
  for (double& v : a.values()) v = v > 0.0 ? v : 0.0;
  return a;
}

void check_input(const MlpModel& model, const Matrix& x) {
  if (x.cols() != model.input_dim()) {
    throw InputError("mlp_forward: input has " + std::to_string(x.cols()) +
                     " columns, model expects " + std::to_string(model.input_dim()));
  }
}

// Shared forward body; `next_mask(l, activations)` supplies the dropout output
// for hidden layer l.
template <typename MaskFn>
ForwardResult forward_impl(const MlpModel& model, const Matrix& x, MaskFn&& next_mask) {
  check_input(model, x);
  ForwardResult result;
  result.cache.model_revision = model.revision();
  const auto& layers = model.layers();
  Matrix h = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Matrix z = affine(h, layers[l]);
    result.cache.layer_inputs.push_back(std::move(h));
    if (l + 1 == layers.size()) {
      softmax_rows_inplace(z);
      result.probs = std::move(z);
      break;
    }
    Matrix a = relu(z);
    result.cache.pre_activations.push_back(std::move(z));
    DropoutResult dropped = next_mask(l, a);
    result.cache.masks.push_back(std::move(dropped.mask));
    h = std::move(dropped.output);
  }
  return result;
}

}  // namespace

DropoutResult dropout(const Matrix& x, double rate, Rng& rng, bool training) {
  check_rate(rate);
  DropoutResult result{x, DropoutMask::all_kept(x.rows(), x.cols())};
  if (!training || rate == 0.0) return result;
  const double scale = 1.0 / (1.0 - rate);
  auto out = result.output.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (rng.uniform() < rate) {
      result.mask.keep[i] = 0;
      out[i] = 0.0;
    } else {
      out[i] *= scale;
    }
  }
  return result;
}

Matrix apply_dropout_mask(const Matrix& x, const DropoutMask& mask, double rate) {
  check_rate(rate);
  if (mask.rows != x.rows() || mask.cols != x.cols()) {
    throw InputError("apply_dropout_mask: mask shape does not match input");
  }
  Matrix out = x;
  const double scale = 1.0 / (1.0 - rate);
  auto values = out.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = mask.keep[i] ? values[i] * scale : 0.0;
  }
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.begin(), logits.end());
  if (out.empty()) return out;
  const double shift = *std::max_element(out.begin(), out.end());
  double total = 0.0;
  for (double& v : out) {
    v = std::exp(v - shift);
    total += v;
  }
  for (double& v : out) v /= total;
  return out;
}

void softmax_rows_inplace(Matrix& logits) {
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto row = logits.row(r);
    const auto probs = softmax(row);
    std::copy(probs.begin(), probs.end(), row.begin());
  }
}

MlpGradients& MlpGradients::operator+=(const MlpGradients& other) {
  if (other.layers.size() != layers.size()) throw ContractError("MlpGradients: layer mismatch");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto dst = layers[l].weight.values();
    const auto src = other.layers[l].weight.values();
    if (dst.size() != src.size() || layers[l].bias.size() != other.layers[l].bias.size()) {
      throw ContractError("MlpGradients: shape mismatch");
    }
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    for (std::size_t i = 0; i < layers[l].bias.size(); ++i) {
      layers[l].bias[i] += other.layers[l].bias[i];
    }
  }
  return *this;
}

std::vector<double> MlpGradients::flatten() const {
  std::vector<double> flat;
  for (const auto& layer : layers) {
    flat.insert(flat.end(), layer.weight.values().begin(), layer.weight.values().end());
    flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
  }
  return flat;
}

MlpModel::MlpModel(std::vector<std::size_t> dims, double dropout_rate)
    : dims_(std::move(dims)), dropout_rate_(dropout_rate), revision_(next_revision()) {
  if (dims_.size() < 2) throw InputError("MlpModel: need input and output dims");
  if (std::find(dims_.begin(), dims_.end(), std::size_t{0}) != dims_.end()) {
    throw InputError("MlpModel: zero-width layer");
  }
  if (!(dropout_rate_ >= 0.0 && dropout_rate_ < 1.0)) {
    throw InputError("MlpModel: dropout rate outside [0, 1)");
  }
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    layers_.push_back({Matrix(dims_[l], dims_[l + 1]), std::vector<double>(dims_[l + 1], 0.0)});
  }
}

MlpModel MlpModel::glorot(std::vector<std::size_t> dims, double dropout_rate, Rng& rng) {
  MlpModel model(std::move(dims), dropout_rate);
  for (auto& layer : model.layers_) {
    const double limit =
        std::sqrt(6.0 / static_cast<double>(layer.weight.rows() + layer.weight.cols()));
    for (double& w : layer.weight.values()) w = (2.0 * rng.uniform() - 1.0) * limit;
  }
  return model;
}

std::vector<DenseLayer>& MlpModel::mutable_layers() {
  revision_ = next_revision();
  return layers_;
}

std::size_t MlpModel::num_parameters() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.weight.size() + layer.bias.size();
  return n;
}

std::vector<double> MlpModel::flatten() const {
  std::vector<double> flat;
  flat.reserve(num_parameters());
  for (const auto& layer : layers_) {
    flat.insert(flat.end(), layer.weight.values().begin(), layer.weight.values().end());
    flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
  }
  return flat;
}

void MlpModel::assign(std::span<const double> flat) {
  if (flat.size() != num_parameters()) {
    throw ContractError("MlpModel::assign: expected " + std::to_string(num_parameters()) +
                        " values, got " + std::to_string(flat.size()));
  }
  std::size_t offset = 0;
  for (auto& layer : mutable_layers()) {
    auto w = layer.weight.values();
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), w.size(), w.begin());
    offset += w.size();
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), layer.bias.size(),
                layer.bias.begin());
    offset += layer.bias.size();
  }
}

bool same_shape(const MlpModel& a, const MlpModel& b) { return a.dims() == b.dims(); }

ForwardResult mlp_forward(const MlpModel& model, const Matrix& x, Rng& rng, bool training) {
  return forward_impl(model, x, [&](std::size_t, const Matrix& a) {
    return dropout(a, model.dropout_rate(), rng, training);
  });
}

ForwardResult mlp_forward_masked(const MlpModel& model, const Matrix& x,
                                 std::span<const DropoutMask> masks) {
  if (masks.size() + 1 != model.layers().size()) {
    throw InputError("mlp_forward_masked: need one mask per hidden layer");
  }
  return forward_impl(model, x, [&](std::size_t l, const Matrix& a) {
    return DropoutResult{apply_dropout_mask(a, masks[l], model.dropout_rate()), masks[l]};
  });
}

Matrix mlp_predict(const MlpModel& model, const Matrix& x) {
  check_input(model, x);
  const auto& layers = model.layers();
  Matrix h = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Matrix z = affine(h, layers[l]);
    h = l + 1 == layers.size() ? std::move(z) : relu(z);
  }
  softmax_rows_inplace(h);
  return h;
}

MlpGradients mlp_backward(const MlpModel& model, const ForwardCache& cache,
                          const Matrix& dlogits) {
  if (cache.model_revision != model.revision()) {
    throw ContractError("mlp_backward: forward cache is stale for this model");
  }
  const auto& layers = model.layers();
  if (cache.layer_inputs.size() != layers.size() ||
      cache.pre_activations.size() + 1 != layers.size()) {
    throw ContractError("mlp_backward: cache does not match model depth");
  }
  const std::size_t batch = cache.layer_inputs.front().rows();
  if (dlogits.rows() != batch || dlogits.cols() != model.output_dim()) {
    throw InputError("mlp_backward: upstream gradient shape mismatch");
  }

  MlpGradients grads;
  grads.layers.resize(layers.size());
  const double keep_scale = 1.0 / (1.0 - model.dropout_rate());
  Matrix upstream = dlogits;
  for (std::size_t l = layers.size(); l-- > 0;) {
    grads.layers[l].weight = matmul_tn(cache.layer_inputs[l], upstream);
    grads.layers[l].bias.assign(upstream.cols(), 0.0);
    for (std::size_t r = 0; r < upstream.rows(); ++r) {
      const auto row = upstream.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) grads.layers[l].bias[c] += row[c];
    }
    if (l == 0) break;
    Matrix down = matmul_nt(upstream, layers[l].weight);
    const auto& mask = cache.masks[l - 1];
    const auto pre = cache.pre_activations[l - 1].values();
    auto values = down.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      values[i] = (mask.keep[i] && pre[i] > 0.0) ? values[i] * keep_scale : 0.0;
    }
    upstream = std::move(down);
  }
  return grads;
}

MlpGradients zero_gradients(const MlpModel& model) {
  MlpGradients grads;
  for (const auto& layer : model.layers()) {
    grads.layers.push_back({Matrix(layer.weight.rows(), layer.weight.cols()),
                            std::vector<double>(layer.bias.size(), 0.0)});
  }
  return grads;
}

std::uint64_t parameter_checksum(const MlpModel& model) {
  std::uint64_t h = kFnvOffset;
  for (const auto& layer : model.layers()) {
    h = fnv1a64(std::as_bytes(layer.weight.values()), h);
    h = fnv1a64(std::as_bytes(std::span<const double>(layer.bias)), h);
  }
  return h;
}

}  // namespace scr
