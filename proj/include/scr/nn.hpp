#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "scr/matrix.hpp"
#include "scr/rng.hpp"

namespace scr {

// Keep/drop flags for one dropout application, row-major like the matrix.
struct DropoutMask {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> keep;

  static DropoutMask all_kept(std::size_t rows, std::size_t cols) {
    return {rows, cols, std::vector<std::uint8_t>(rows * cols, 1)};
  }
  friend bool operator==(const DropoutMask&, const DropoutMask&) = default;
};

struct DropoutResult {
  Matrix output;
  DropoutMask mask;
};

// Inverted dropout: survivors are scaled by 1 / (1 - rate) in training mode.
// Inference mode is the identity with an all-kept mask.
DropoutResult dropout(const Matrix& x, double rate, Rng& rng, bool training);

// Applies a previously drawn mask with the same scaling.
Matrix apply_dropout_mask(const Matrix& x, const DropoutMask& mask, double rate);

std::vector<double> softmax(std::span<const double> logits);
void softmax_rows_inplace(Matrix& logits);

enum class Activation { relu };

struct DenseLayer {
  Matrix weight;             // fan_in x fan_out
  std::vector<double> bias;  // fan_out
};

// Gradients share the layout of the model parameters.
struct MlpGradients {
  std::vector<DenseLayer> layers;

  MlpGradients& operator+=(const MlpGradients& other);
  std::vector<double> flatten() const;
};

// Fully connected relu network with dropout after every hidden activation
// and a softmax head.
//
// Every mutation through mutable_layers() or assign() gives the model a new
// globally unique revision, which forward caches record so mlp_backward can
// reject a cache taken before the parameters changed.
class MlpModel {
 public:
  // dims = {input, hidden..., output}; at least two entries. Parameters start
  // at zero; see MlpModel::glorot for random initialization.
  MlpModel(std::vector<std::size_t> dims, double dropout_rate);

  // Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
  static MlpModel glorot(std::vector<std::size_t> dims, double dropout_rate, Rng& rng);

  std::size_t input_dim() const { return dims_.front(); }
  std::size_t output_dim() const { return dims_.back(); }
  const std::vector<std::size_t>& dims() const { return dims_; }
  double dropout_rate() const { return dropout_rate_; }
  Activation hidden_activation() const { return Activation::relu; }

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers();

  std::size_t num_parameters() const;
  // Order: layer 0 weight (row-major), layer 0 bias, layer 1 weight, ...
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);

  std::uint64_t revision() const { return revision_; }

 private:
  std::vector<std::size_t> dims_;
  double dropout_rate_;
  std::vector<DenseLayer> layers_;
  std::uint64_t revision_;
};

bool same_shape(const MlpModel& a, const MlpModel& b);

struct ForwardCache {
  std::uint64_t model_revision = 0;
  std::vector<Matrix> layer_inputs;     // input fed to each layer (post dropout)
  std::vector<Matrix> pre_activations;  // hidden layers only
  std::vector<DropoutMask> masks;       // one per hidden layer
};

struct ForwardResult {
  Matrix probs;
  ForwardCache cache;
};

// Training mode draws fresh dropout masks from rng; inference mode draws nothing.
ForwardResult mlp_forward(const MlpModel& model, const Matrix& x, Rng& rng, bool training);

// Replays fixed masks (one per hidden layer), e.g. for finite differences.
ForwardResult mlp_forward_masked(const MlpModel& model, const Matrix& x,
                                 std::span<const DropoutMask> masks);

// Dropout-free forward without a cache.
Matrix mlp_predict(const MlpModel& model, const Matrix& x);

// Reverse pass from dLoss/dLogits. Throws ContractError if the cache does not
// belong to the model's current parameters.
MlpGradients mlp_backward(const MlpModel& model, const ForwardCache& cache,
                          const Matrix& dlogits);

MlpGradients zero_gradients(const MlpModel& model);

// FNV-1a over the raw parameter bytes.
std::uint64_t parameter_checksum(const MlpModel& model);

}  // namespace scr
