#include "nac/theory.hpp"

#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <limits>

#include "nac/desk_set.hpp"
#include "nac/error.hpp"

namespace nac {
namespace {

struct Moments {
  double mean = 0.0;
  double variance = 0.0;  // population
};

Moments moments(std::span<const double> v) {
  Moments m;
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  for (double x : v) m.variance += (x - m.mean) * (x - m.mean);
  m.variance /= static_cast<double>(v.size());
  return m;
}

TheoryRow make_row(std::string claim, double estimated, double predicted, double error,
                   double tolerance) {
  return TheoryRow{std::move(claim), estimated, predicted, error, tolerance, error <= tolerance};
}

std::string fmt(const char* pattern, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, a);
  return buf;
}

void require_trials(std::size_t trials) {
  if (trials < kMinTheoryTrials) {
    throw Error(ErrorKind::invalid_argument,
                "theory trials must be >= " + std::to_string(kMinTheoryTrials) + ", got " +
                    std::to_string(trials));
  }
}

// `trials` clean samples: the image pixels repeated (first channel layout kept).
ImageBuffer tiled(const ImageBuffer& clean, std::size_t trials) {
  std::vector<double> samples(trials);
  std::span<const double> src = clean.samples();
  for (std::size_t i = 0; i < trials; ++i) samples[i] = src[i % src.size()];
  return ImageBuffer(Role::clean, 1, static_cast<int>(trials), 1, std::move(samples));
}

}  // namespace

void TheoryTrialSpec::validate() const {
  require_trials(trials);
  if (!(std::abs(rho) <= 1.0)) throw Error(ErrorKind::invalid_argument, "|rho| must be <= 1");
  if (sigma_o < 0.0 || sigma_s < 0.0 || lambda_o < 0.0 || lambda_s < 0.0) {
    throw Error(ErrorKind::invalid_argument, "noise parameters must be nonnegative");
  }
  if (level < 0.0 || level > 255.0) {
    throw Error(ErrorKind::invalid_argument, "level must lie in [0, 255]");
  }
}

bool TheoryReport::all_pass() const {
  for (const TheoryRow& r : rows) {
    if (!r.pass) return false;
  }
  return !rows.empty();
}

void TheoryReport::append(const TheoryReport& other) {
  rows.insert(rows.end(), other.rows.begin(), other.rows.end());
}

std::string TheoryReport::to_json() const {
  nlohmann::ordered_json j;
  j["rows"] = nlohmann::ordered_json::array();
  for (const TheoryRow& r : rows) {
    j["rows"].push_back({{"claim", r.claim},
                         {"estimated", r.estimated},
                         {"predicted", r.predicted},
                         {"error", r.error},
                         {"tolerance", r.tolerance},
                         {"pass", r.pass}});
  }
  j["all_pass"] = all_pass();
  return j.dump(2) + "\n";
}

std::string TheoryReport::to_table() const {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-52s %14s %14s %10s %6s  %s\n", "claim", "estimated",
                "predicted", "error", "tol", "result");
  out += line;
  for (const TheoryRow& r : rows) {
    std::snprintf(line, sizeof line, "%-52s %14.6g %14.6g %10.4g %6.3g  %s\n", r.claim.c_str(),
                  r.estimated, r.predicted, r.error, r.tolerance, r.pass ? "PASS" : "FAIL");
    out += line;
  }
  return out;
}

TheoryReport verify_weak_noise(const ImageBuffer& clean, const NoiseSpec& spec,
                               std::size_t trials, std::uint64_t seed, double threshold) {
  require_trials(trials);
  spec.validate();
  const ImageBuffer x = clean.with_role(Role::clean);
  const Moments signal = moments(x.samples());

  Rng rng = make_stream(seed, 0);
  const std::size_t repeats = (trials + x.size() - 1) / x.size();
  std::vector<double> noise;
  noise.reserve(repeats * x.size());
  for (std::size_t r = 0; r < repeats; ++r) {
    const std::vector<double> n = sample_noise(x, spec.concrete_level(), rng);
    noise.insert(noise.end(), n.begin(), n.end());
  }
  const Moments n = moments(noise);

  auto ratio = [](double num, double den) {
    if (den == 0.0) return kRatioCap;
    return std::min(kRatioCap, num / den);
  };
  const double mean_ratio = ratio(signal.mean, std::abs(n.mean));
  const double var_ratio = ratio(signal.variance, n.variance);
  const std::string tag = "weak_noise(sigma=" + fmt("%g", spec.concrete_level().sigma) +
                          ",lambda=" + fmt("%g", spec.concrete_level().lambda) + ")";
  TheoryReport report;
  report.rows.push_back(
      make_row(tag + " E[x]/|E[n_o]|", mean_ratio, threshold, threshold / mean_ratio, 1.0));
  report.rows.push_back(
      make_row(tag + " Var[x]/Var[n_o]", var_ratio, threshold, threshold / var_ratio, 1.0));
  return report;
}

TheoryReport verify_expectation_chain(const ImageBuffer& clean, const NoiseSpec& spec,
                                      std::size_t trials, std::uint64_t seed) {
  require_trials(trials);
  spec.validate();
  const ImageBuffer x = tiled(clean, trials);
  Rng rng = make_stream(seed, 1);
  const ImageBuffer y = make_observed(x, spec, rng);
  const ImageBuffer z = make_simulated(y, spec, rng);

  std::vector<double> dy(trials), dz(trials);
  for (std::size_t i = 0; i < trials; ++i) {
    dy[i] = y.samples()[i] - x.samples()[i];
    dz[i] = z.samples()[i] - y.samples()[i];
  }
  const NoiseLevel level = spec.concrete_level();
  const std::string tag = "expectation(" + std::string(to_string(spec.kind)) +
                          ",sigma=" + fmt("%g", level.sigma) +
                          ",lambda=" + fmt("%g", level.lambda) + ")";
  TheoryReport report;
  auto add = [&](const std::vector<double>& d, const std::string& name) {
    const Moments m = moments(d);
    const double se = std::sqrt(m.variance / static_cast<double>(d.size()));
    double error = 0.0;
    if (m.mean != 0.0) {
      error = se > 0.0 ? std::abs(m.mean) / (3.0 * se) : std::numeric_limits<double>::infinity();
    }
    report.rows.push_back(make_row(tag + " " + name, m.mean, 0.0, error, 1.0));
  };
  add(dy, "E[y]-E[x]");
  add(dz, "E[z]-E[y]");
  return report;
}

TheoryReport verify_additivity(const TheoryTrialSpec& spec) {
  spec.validate();
  Rng rng = make_stream(spec.seed, 2);
  const std::size_t n = spec.trials;
  std::vector<double> sum(n, 0.0);

  if (spec.sigma_o > 0.0 || spec.sigma_s > 0.0) {
    // Cholesky factor of [[so^2, rho so ss], [rho so ss, ss^2]].
    const double cross = std::sqrt(std::max(0.0, 1.0 - spec.rho * spec.rho));
    std::normal_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double g1 = unit(rng);
      const double g2 = unit(rng);
      const double n_o = spec.sigma_o * g1;
      const double n_s = spec.sigma_s * (spec.rho * g1 + cross * g2);
      sum[i] = n_o + n_s;
    }
  }
  double predicted = spec.sigma_o * spec.sigma_o + spec.sigma_s * spec.sigma_s +
                     2.0 * spec.rho * spec.sigma_o * spec.sigma_s;
  if (spec.lambda_o > 0.0 || spec.lambda_s > 0.0) {
    const ImageBuffer base(Role::clean, 1, static_cast<int>(n), 1, spec.level);
    for (double lambda : {spec.lambda_o, spec.lambda_s}) {
      if (lambda <= 0.0) continue;
      const std::vector<double> p = sample_poisson_noise(base, lambda, rng);
      for (std::size_t i = 0; i < n; ++i) sum[i] += p[i];
      predicted += 255.0 * spec.level / lambda;
    }
  }
  const Moments m = moments(sum);
  // A perfectly anti-correlated pair cancels, so the prediction can be 0; the
  // deviation is then measured against the total component variance.
  double scale = predicted;
  if (scale <= 0.0) {
    scale = spec.sigma_o * spec.sigma_o + spec.sigma_s * spec.sigma_s;
    for (double lambda : {spec.lambda_o, spec.lambda_s}) {
      if (lambda > 0.0) scale += 255.0 * spec.level / lambda;
    }
  }
  double error = 0.0;
  if (scale > 0.0) {
    error = std::abs(m.variance - predicted) / scale;
  } else if (m.variance != 0.0) {
    error = std::numeric_limits<double>::infinity();
  }
  const std::string claim = "additivity(rho=" + fmt("%g", spec.rho) + ",sigma_o=" +
                            fmt("%g", spec.sigma_o) + ",sigma_s=" + fmt("%g", spec.sigma_s) +
                            ",lambda_o=" + fmt("%g", spec.lambda_o) + ",lambda_s=" +
                            fmt("%g", spec.lambda_s) + ")";
  TheoryReport report;
  report.rows.push_back(make_row(claim, m.variance, predicted, error, 0.05));
  return report;
}

TheoryReport run_theory_suite(const TheorySuiteConfig& config) {
  require_trials(config.trials);
  TheoryReport report;
  std::uint64_t stream = 0;
  auto next_seed = [&] { return stream_seed(config.seed, stream++); };

  const ImageBuffer natural = desk_set().front().image;
  report.append(verify_weak_noise(natural, NoiseSpec::gaussian(5.0), config.trials, next_seed(),
                                  config.weak_noise_threshold));

  const ImageBuffer gray(Role::clean, 1, 1, 1, 128.0);
  report.append(
      verify_expectation_chain(gray, NoiseSpec::gaussian(10.0), config.trials, next_seed()));
  report.append(
      verify_expectation_chain(gray, NoiseSpec::poisson(25.0), config.trials, next_seed()));

  for (double rho : {-1.0, 0.0, 0.5, 1.0}) {
    for (double sigma_o : {5.0, 25.0}) {
      for (double sigma_s : {5.0, 25.0}) {
        TheoryTrialSpec t;
        t.trials = config.trials;
        t.rho = rho;
        t.sigma_o = sigma_o;
        t.sigma_s = sigma_s;
        t.seed = next_seed();
        report.append(verify_additivity(t));
      }
    }
  }
  for (double rho : {0.0, 1.0}) {
    TheoryTrialSpec t;
    t.trials = config.trials;
    t.rho = rho;
    t.sigma_o = 10.0;
    t.sigma_s = 10.0;
    t.seed = next_seed();
    report.append(verify_additivity(t));
  }
  TheoryTrialSpec p;
  p.trials = config.trials;
  p.lambda_o = 25.0;
  p.lambda_s = 25.0;
  p.level = 128.0;
  p.seed = next_seed();
  report.append(verify_additivity(p));
  return report;
}

}  // namespace nac
