#include "nac/noise.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "nac/error.hpp"

namespace nac {

std::string_view to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::gaussian: return "gaussian";
    case NoiseKind::poisson: return "poisson";
    case NoiseKind::mixed: return "mixed";
    case NoiseKind::blind_gaussian: return "blind-gaussian";
    case NoiseKind::blind_mixed: return "blind-mixed";
  }
  return "unknown";
}

std::optional<NoiseKind> parse_noise_kind(std::string_view text) {
  for (NoiseKind k : {NoiseKind::gaussian, NoiseKind::poisson, NoiseKind::mixed,
                      NoiseKind::blind_gaussian, NoiseKind::blind_mixed}) {
    if (text == to_string(k)) return k;
  }
  return std::nullopt;
}

NoiseSpec NoiseSpec::gaussian(double sigma) {
  NoiseSpec s;
  s.kind = NoiseKind::gaussian;
  s.sigma = sigma;
  return s;
}

NoiseSpec NoiseSpec::poisson(double lambda) {
  NoiseSpec s;
  s.kind = NoiseKind::poisson;
  s.lambda = lambda;
  return s;
}

NoiseSpec NoiseSpec::mixed(double sigma, double lambda) {
  NoiseSpec s;
  s.kind = NoiseKind::mixed;
  s.sigma = sigma;
  s.lambda = lambda;
  return s;
}

NoiseSpec NoiseSpec::blind_gaussian(double true_sigma, Range range) {
  NoiseSpec s;
  s.kind = NoiseKind::blind_gaussian;
  s.sigma = true_sigma;
  s.sigma_range = range;
  return s;
}

NoiseSpec NoiseSpec::blind_mixed(double true_sigma, double true_lambda) {
  NoiseSpec s;
  s.kind = NoiseKind::blind_mixed;
  s.sigma = true_sigma;
  s.lambda = true_lambda;
  s.sigma_range = {0.0, 25.0};
  s.lambda_range = {0.0, 25.0};
  return s;
}

NoiseLevel NoiseSpec::concrete_level() const {
  return NoiseLevel{has_gaussian() ? sigma : 0.0, has_poisson() ? lambda : 0.0};
}

void NoiseSpec::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::invalid_argument, msg); };
  if (!std::isfinite(sigma) || sigma < 0.0) fail("sigma must be >= 0");
  if (has_poisson() && !(lambda > 0.0 && std::isfinite(lambda))) {
    fail("lambda must be > 0 when a Poisson component is present");
  }
  if (is_blind()) {
    auto check = [&](const Range& r, const char* name) {
      if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo < 0.0 || r.hi < r.lo) {
        fail(std::string(name) + " range must be non-empty with a nonnegative lower bound");
      }
    };
    check(sigma_range, "sigma");
    if (kind == NoiseKind::blind_mixed) {
      check(lambda_range, "lambda");
      if (!(lambda_range.hi > 0.0)) fail("lambda range must contain positive values");
    }
  }
}

std::vector<double> sample_gaussian_noise(std::size_t count, double sigma, Rng& rng) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorKind::invalid_argument, "gaussian noise sigma must be >= 0");
  }
  std::vector<double> noise(count, 0.0);
  if (sigma == 0.0) return noise;
  std::normal_distribution<double> dist(0.0, sigma);
  for (double& v : noise) v = dist(rng);
  return noise;
}

std::vector<double> sample_poisson_noise(const ImageBuffer& base, double lambda, Rng& rng) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorKind::invalid_argument, "poisson lambda must be > 0");
  }
  std::span<const double> samples = base.samples();
  std::vector<double> noise(samples.size(), 0.0);
  const double to_rate = lambda / 255.0;
  const double to_pixels = 255.0 / lambda;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double v = std::clamp(samples[i], 0.0, 255.0);
    if (v == 0.0) continue;
    std::poisson_distribution<long long> dist(to_rate * v);
    noise[i] = static_cast<double>(dist(rng)) * to_pixels - v;
  }
  return noise;
}

std::vector<double> sample_noise(const ImageBuffer& base, const NoiseLevel& level, Rng& rng) {
  std::vector<double> noise = level.lambda > 0.0
                                  ? sample_poisson_noise(base, level.lambda, rng)
                                  : std::vector<double>(base.size(), 0.0);
  if (level.sigma > 0.0) {
    const std::vector<double> g = sample_gaussian_noise(base.size(), level.sigma, rng);
    for (std::size_t i = 0; i < noise.size(); ++i) noise[i] += g[i];
  } else if (level.sigma < 0.0) {
    throw Error(ErrorKind::invalid_argument, "gaussian noise sigma must be >= 0");
  }
  return noise;
}

namespace {

ImageBuffer add_noise(const ImageBuffer& base, const NoiseLevel& level, Role role, Rng& rng) {
  const std::vector<double> noise = sample_noise(base, level, rng);
  ImageBuffer out = base.with_role(role);
  std::span<double> s = out.samples();
  for (std::size_t i = 0; i < s.size(); ++i) s[i] += noise[i];
  out.set_noise_level(level);
  return out;
}

}  // namespace

ImageBuffer make_observed(const ImageBuffer& clean, const NoiseSpec& spec, Rng& rng) {
  require_role(clean, Role::clean, "make_observed");
  spec.validate();
  return add_noise(clean, spec.concrete_level(), Role::observed, rng);
}

ImageBuffer make_simulated(const ImageBuffer& observed, const NoiseSpec& spec, Rng& rng) {
  require_role(observed, Role::observed, "make_simulated");
  spec.validate();
  const NoiseLevel level = spec.is_blind() ? draw_blind_level(spec, rng) : spec.concrete_level();
  return add_noise(observed, level, Role::simulated, rng);
}

NoiseLevel draw_blind_level(const NoiseSpec& spec, Rng& rng) {
  if (!spec.is_blind()) {
    throw Error(ErrorKind::invalid_argument,
                "draw_blind_level needs a blind spec, got " + std::string(to_string(spec.kind)));
  }
  spec.validate();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  // Uniform on (lo, hi].
  auto half_open = [&](const Range& r) { return r.hi - (r.hi - r.lo) * unit(rng); };

  if (spec.kind == NoiseKind::blind_mixed) {
    const double sigma = half_open(spec.sigma_range);
    const double lambda = half_open(spec.lambda_range);
    return NoiseLevel{sigma, lambda};
  }
  const Range& r = spec.sigma_range;
  if (r.hi == r.lo) return NoiseLevel{r.lo, 0.0};
  if (spec.blind_distribution == BlindDistribution::uniform) {
    return NoiseLevel{std::uniform_real_distribution<double>(r.lo, r.hi)(rng), 0.0};
  }
  std::normal_distribution<double> dist(0.5 * (r.lo + r.hi), 0.25 * (r.hi - r.lo));
  for (;;) {
    const double s = dist(rng);
    if (s >= r.lo && s <= r.hi) return NoiseLevel{s, 0.0};
  }
}

}  // namespace nac
