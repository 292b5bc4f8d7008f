#pragma once

#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "nac/rng.hpp"
#include "nac/tensor.hpp"

namespace nac {

enum class Mode { train, eval };

enum class LayerKind { conv2d, batch_norm, relu, residual_block };

std::string_view to_string(LayerKind kind);

/// Same-padded 2-D cross-correlation, computed as one GEMM per kernel tap. Weight is out x in x k x k, bias is
/// out x 1 x 1 x 1.
class Conv2d {
 public:
  Conv2d(int in_channels, int out_channels, int kernel_size);

  int in_channels() const { return weight.shape().c; }
  int out_channels() const { return weight.shape().n; }
  int kernel_size() const { return weight.shape().h; }
  int padding() const { return (kernel_size() - 1) / 2; }

  /// He-normal weights (std sqrt(2 / fan_in)), zero bias.
  void initialize(Rng& rng);

  Tensor forward(const Tensor& input, Mode mode);
  /// Accumulates into weight/bias gradients and returns the input gradient.
  Tensor backward(const Tensor& grad_output);

  bool has_activations() const { return input_shape_.has_value(); }
  void clear_activations() {
    input_shape_.reset();
    padded_.clear();
  }
  std::vector<Tensor*> parameters() { return {&weight, &bias}; }

  Tensor weight;
  Tensor bias;

 private:
  std::optional<Shape> input_shape_;
  std::vector<double> padded_;  // zero-padded input, see PaddedLayout
};

/// Per-channel batch normalization with learnable scale/shift and running
/// statistics for eval mode.
class BatchNorm {
 public:
  static constexpr double kDefaultMomentum = 0.1;
  static constexpr double kDefaultEpsilon = 1e-6;

  explicit BatchNorm(int channels, double momentum = kDefaultMomentum,
                     double epsilon = kDefaultEpsilon);

  int channels() const { return scale.shape().n; }
  double momentum() const { return momentum_; }
  double epsilon() const { return epsilon_; }

  Tensor forward(const Tensor& input, Mode mode);
  Tensor backward(const Tensor& grad_output);

  bool has_activations() const { return normalized_.has_value(); }
  void clear_activations() {
    normalized_.reset();
    inv_std_.clear();
  }
  std::vector<Tensor*> parameters() { return {&scale, &shift}; }

  Tensor scale;
  Tensor shift;
  Tensor running_mean;
  Tensor running_var;

 private:
  double momentum_;
  double epsilon_;
  std::optional<Tensor> normalized_;
  std::vector<double> inv_std_;
};

class Relu {
 public:
  Tensor forward(const Tensor& input, Mode mode);
  Tensor backward(const Tensor& grad_output);

  bool has_activations() const { return input_.has_value(); }
  void clear_activations() { input_.reset(); }
  std::vector<Tensor*> parameters() { return {}; }

 private:
  std::optional<Tensor> input_;
};

/// conv -> BN -> ReLU -> conv -> BN, plus the identity skip.
class ResidualBlock {
 public:
  ResidualBlock(int channels, int kernel_size);

  int channels() const { return conv1.in_channels(); }
  /// He-normal convs; the second batch norm starts with scale 0, so a fresh
  /// block is the identity.
  void initialize(Rng& rng);

  Tensor forward(const Tensor& input, Mode mode);
  Tensor backward(const Tensor& grad_output);

  bool has_activations() const;
  void clear_activations();
  std::vector<Tensor*> parameters();

  Conv2d conv1;
  BatchNorm bn1;
  Relu act;
  Conv2d conv2;
  BatchNorm bn2;
};

using Layer = std::variant<Conv2d, BatchNorm, Relu, ResidualBlock>;

LayerKind kind_of(const Layer& layer);

/// Stateless forward ops. `batch_norm` in train mode updates the layer's
/// running statistics.
Tensor conv2d(const Tensor& input, const Conv2d& layer);
Tensor batch_norm(const Tensor& input, BatchNorm& layer, Mode mode);
Tensor relu(const Tensor& input);

}  // namespace nac
