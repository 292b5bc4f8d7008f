#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace nac {

struct GradcheckOptions {
  std::uint64_t seed = 0;
  /// Parameter entries and input entries sampled per subject.
  int parameter_samples = 5;
  int network_parameter_samples = 10;
  int input_samples = 5;
  double step = 1e-5;
  double threshold = 1e-4;
  /// Test hook: perturbs the analytic gradient of every subject.
  bool inject_fault = false;
};

struct GradcheckRow {
  std::string subject;  // conv2d, batch_norm, relu, residual_block, network
  int checked = 0;
  double worst_relative_error = 0.0;
  bool pass = false;
};

struct GradcheckReport {
  std::vector<GradcheckRow> rows;

  double worst() const;
  bool all_pass() const;
  std::string to_table() const;
};

/// |analytic - numeric| / max(|analytic|, |numeric|, kGradcheckFloor).
inline constexpr double kGradcheckFloor = 1e-3;
double relative_error(double analytic, double numeric);

/// Central finite differences of a random linear projection of each
/// subject's train-mode output, against the analytic backward pass, for
/// sampled parameters and inputs. The network subject has three residual
/// blocks.
GradcheckReport run_gradcheck(const GradcheckOptions& options = {});

}  // namespace nac
