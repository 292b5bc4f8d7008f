#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nac/image.hpp"
#include "nac/rng.hpp"

namespace nac {

enum class NoiseKind { gaussian, poisson, mixed, blind_gaussian, blind_mixed };

/// How blind-Gaussian levels are drawn from their range.
enum class BlindDistribution { gaussian, uniform };

std::string_view to_string(NoiseKind kind);
std::optional<NoiseKind> parse_noise_kind(std::string_view text);

/// Inclusive interval.
struct Range {
  double lo = 0.0;
  double hi = 0.0;
  friend bool operator==(const Range&, const Range&) = default;
};

/// Declarative noise process. `sigma` and `lambda` are the concrete levels
/// (the true observed level for blind kinds); the ranges are only consulted
/// by blind kinds when drawing simulated-noise levels.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::gaussian;
  double sigma = 0.0;
  double lambda = 25.0;
  Range sigma_range{0.0, 55.0};
  Range lambda_range{0.0, 25.0};
  BlindDistribution blind_distribution = BlindDistribution::gaussian;
  std::uint64_t seed = 0;

  static NoiseSpec gaussian(double sigma);
  static NoiseSpec poisson(double lambda);
  static NoiseSpec mixed(double sigma, double lambda);
  static NoiseSpec blind_gaussian(double true_sigma, Range range);
  /// Mixed noise with sigma and lambda both drawn from (0, 25].
  static NoiseSpec blind_mixed(double true_sigma, double true_lambda);

  bool is_blind() const {
    return kind == NoiseKind::blind_gaussian || kind == NoiseKind::blind_mixed;
  }
  bool has_gaussian() const { return kind != NoiseKind::poisson; }
  bool has_poisson() const {
    return kind == NoiseKind::poisson || kind == NoiseKind::mixed ||
           kind == NoiseKind::blind_mixed;
  }

  /// The fixed level used for observed noise (lambda is 0 when there is no
  /// Poisson component).
  NoiseLevel concrete_level() const;

  /// Throws ErrorKind::invalid_argument when an invariant is violated.
  void validate() const;
};

/// I.i.d. N(0, sigma^2) samples; never clipped.
std::vector<double> sample_gaussian_noise(std::size_t count, double sigma, Rng& rng);

/// Signal-dependent Poisson noise around `base`: for v = clamp(base, 0, 255),
/// p ~ Poisson(lambda * v / 255) and the noise is 255 p / lambda - v, which is
/// zero-mean with variance 255 v / lambda.
std::vector<double> sample_poisson_noise(const ImageBuffer& base, double lambda, Rng& rng);

/// Noise of `level` (Gaussian plus optional Poisson around `base`).
std::vector<double> sample_noise(const ImageBuffer& base, const NoiseLevel& level, Rng& rng);

/// y = x + n_o with n_o at the NoiseSpec's concrete level.
ImageBuffer make_observed(const ImageBuffer& clean, const NoiseSpec& spec, Rng& rng);

/// z = y + n_s. Blind specs draw a fresh level first; the level used is
/// recorded on the returned image.
ImageBuffer make_simulated(const ImageBuffer& observed, const NoiseSpec& spec, Rng& rng);

/// Draws a concrete level for a blind spec. Blind-Gaussian: truncated normal
/// centred on the range midpoint with std width / 4 (or uniform). Blind-mixed:
/// sigma and lambda uniform on (lo, hi].
NoiseLevel draw_blind_level(const NoiseSpec& spec, Rng& rng);

}  // namespace nac
