#pragma once

#include <cstdint>
#include <vector>

#include "nac/layers.hpp"
#include "nac/rng.hpp"
#include "nac/tensor.hpp"

namespace nac {

struct NetworkConfig {
  int num_residual_blocks = 10;
  int hidden_channels = 32;
  int kernel_size = 3;
  int input_channels = 1;

  /// Throws ErrorKind::invalid_argument on a bad combination.
  void validate() const;

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

/// Image-to-image ResNet: input conv -> residual blocks -> output conv.
/// The output is the image itself, not a noise residual.
class Network {
 public:
  /// Builds and randomly initializes the network from `rng`.
  Network(const NetworkConfig& config, Rng& rng);
  /// Builds the network with every parameter at its default value (zero
  /// conv weights). Callers fill the parameters themselves.
  explicit Network(const NetworkConfig& config);

  const NetworkConfig& config() const { return config_; }
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  /// Runs the layers in order. Train mode retains activations for backward.
  Tensor forward(const Tensor& input, Mode mode);
  /// Fills every parameter gradient (overwriting previous values) and returns
  /// the gradient with respect to the network input.
  Tensor backward(const Tensor& output_grad);

  std::vector<Tensor*> parameters();
  std::size_t parameter_count();
  void zero_grad();
  void clear_activations();

  /// Sets the parameters so that the network computes the identity map:
  /// delta kernels in the outer convolutions and zero-scaled final BN in
  /// each residual block. Requires hidden_channels >= input_channels.
  void set_identity();

  /// FNV-1a over the parameter and running-statistic bytes.
  std::uint64_t checksum() const;

 private:
  NetworkConfig config_;
  std::vector<Layer> layers_;
};

struct LossResult {
  double value = 0.0;
  Tensor grad;
};

/// Mean squared error and its gradient 2 (prediction - target) / N.
LossResult l2_loss(const Tensor& prediction, const Tensor& target);

}  // namespace nac
