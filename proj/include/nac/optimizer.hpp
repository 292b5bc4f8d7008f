#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nac/network.hpp"
#include "nac/tensor.hpp"

namespace nac {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment accumulators for Adam. Moments are sized lazily on the first step
/// to match the parameter list they are used with.
struct AdamState {
  explicit AdamState(AdamConfig config = {});

  AdamConfig config;
  std::int64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

/// One bias-corrected Adam update from the parameters' gradients. A
/// non-finite gradient rejects the step (ErrorKind::non_finite) before any
/// parameter or moment is touched.
void adam_step(std::span<Tensor* const> parameters, AdamState& state);
void adam_step(Network& net, AdamState& state);

}  // namespace nac
