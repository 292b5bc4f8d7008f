#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nac/image.hpp"
#include "nac/noise.hpp"

namespace nac {

inline constexpr std::size_t kMinTheoryTrials = 10'000;
/// Stand-in for an infinite signal-to-noise ratio.
inline constexpr double kRatioCap = 1e12;

/// Parameters of one noise-sum trial: correlated Gaussian components plus
/// independent signal-dependent Poisson components at a constant level.
struct TheoryTrialSpec {
  std::size_t trials = 1'000'000;
  double sigma_o = 0.0;
  double sigma_s = 0.0;
  double lambda_o = 0.0;  // 0 disables the component
  double lambda_s = 0.0;
  double rho = 0.0;
  double level = 128.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// One checked claim. `error` is claim-specific (see each verifier) and the
/// row passes exactly when error <= tolerance.
struct TheoryRow {
  std::string claim;
  double estimated = 0.0;
  double predicted = 0.0;
  double error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct TheoryReport {
  std::vector<TheoryRow> rows;

  bool all_pass() const;
  void append(const TheoryReport& other);
  std::string to_json() const;
  std::string to_table() const;
};

/// Signal-to-noise premise: reports E[x] / |E[n_o]| and Var[x] / Var[n_o]
/// estimated from at least `trials` noise samples. error = threshold / ratio,
/// tolerance 1, so a row passes when its ratio reaches the threshold.
TheoryReport verify_weak_noise(const ImageBuffer& clean, const NoiseSpec& spec,
                               std::size_t trials, std::uint64_t seed,
                               double threshold = 10.0);

/// Estimates E[y] - E[x] and E[z] - E[y] over `trials` samples (the clean
/// pixels tiled as needed). error = |gap| / (3 standard errors), tolerance 1.
TheoryReport verify_expectation_chain(const ImageBuffer& clean, const NoiseSpec& spec,
                                      std::size_t trials, std::uint64_t seed);

/// Empirical Var(n_o + n_s) against
/// sigma_o^2 + sigma_s^2 + 2 rho sigma_o sigma_s + 255 level (1/lambda_o + 1/lambda_s).
/// error is the deviation relative to the prediction (or, when that is 0,
/// to the summed component variances), tolerance 5%.
TheoryReport verify_additivity(const TheoryTrialSpec& spec);

struct TheorySuiteConfig {
  std::size_t trials = 1'000'000;
  std::uint64_t seed = 0;
  double weak_noise_threshold = 10.0;
};

/// Full grid: weak-noise premise on a desk image, the expectation chain for
/// Gaussian and Poisson noise, additivity over rho x sigma_o x sigma_s, the
/// sigma = 10 pair at rho 0 and 1, and Poisson additivity.
TheoryReport run_theory_suite(const TheorySuiteConfig& config);

}  // namespace nac
