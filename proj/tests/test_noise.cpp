#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "nac/error.hpp"
#include "nac/metrics.hpp"
#include "nac/noise.hpp"

namespace nac {
namespace {

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

Moments moments(std::span<const double> v) {
  Moments m;
  m.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  for (double x : v) m.variance += (x - m.mean) * (x - m.mean);
  m.variance /= static_cast<double>(v.size());
  return m;
}

ImageBuffer constant(double v, int side = 1000, Role role = Role::clean) {
  return ImageBuffer(role, side, side, 1, v);
}

// ----------------------------------------------------------------- gaussian

TEST(GaussianNoise, ZeroSigmaGivesZeros) {
  Rng rng(1);
  for (double v : sample_gaussian_noise(1000, 0.0, rng)) EXPECT_EQ(v, 0.0);
}

TEST(GaussianNoise, MomentsOfAMillionSamples) {
  Rng rng(2);
  const auto n = sample_gaussian_noise(1'000'000, 25.0, rng);
  const Moments m = moments(n);
  EXPECT_NEAR(m.mean, 0.0, 0.1);
  EXPECT_NEAR(std::sqrt(m.variance), 25.0, 0.1);
}

TEST(GaussianNoise, DeterministicUnderSeed) {
  Rng a(3), b(3);
  EXPECT_EQ(sample_gaussian_noise(1000, 7.0, a), sample_gaussian_noise(1000, 7.0, b));
}

TEST(GaussianNoise, NegativeSigmaRejected) {
  Rng rng(4);
  EXPECT_THROW(sample_gaussian_noise(10, -1.0, rng), Error);
}

TEST(GaussianNoise, WithinThreeStandardErrorsAcrossLevels) {
  for (double sigma : {1.0, 5.0, 15.0, 55.0}) {
    Rng rng(static_cast<std::uint64_t>(sigma * 10));
    const std::size_t count = 1'000'000;
    const Moments m = moments(sample_gaussian_noise(count, sigma, rng));
    const double se_mean = sigma / std::sqrt(static_cast<double>(count));
    const double se_std = sigma / std::sqrt(2.0 * static_cast<double>(count));
    EXPECT_LT(std::abs(m.mean), 3 * se_mean) << sigma;
    EXPECT_LT(std::abs(std::sqrt(m.variance) - sigma), 3 * se_std) << sigma;
  }
}

// ------------------------------------------------------------------ poisson

TEST(PoissonNoise, ZeroImageGivesZeros) {
  Rng rng(5);
  for (double v : sample_poisson_noise(constant(0.0, 32), 25.0, rng)) EXPECT_EQ(v, 0.0);
}

TEST(PoissonNoise, MomentsAtMidGray) {
  Rng rng(6);
  const Moments m = moments(sample_poisson_noise(constant(128.0), 25.0, rng));
  EXPECT_NEAR(m.mean, 0.0, 0.2);
  EXPECT_NEAR(m.variance, 1305.6, 0.05 * 1305.6);
}

TEST(PoissonNoise, VarianceIsLinearInSignal) {
  Rng rng(7);
  const double v128 = moments(sample_poisson_noise(constant(128.0), 25.0, rng)).variance;
  const double v64 = moments(sample_poisson_noise(constant(64.0), 25.0, rng)).variance;
  EXPECT_NEAR(v64 / v128, 0.5, 0.05 * 0.5);
}

TEST(PoissonNoise, RateUsesClampedSignal) {
  Rng a(8), b(8);
  const auto above = sample_poisson_noise(constant(300.0, 64), 10.0, a);
  const auto at = sample_poisson_noise(constant(255.0, 64), 10.0, b);
  EXPECT_EQ(above, at);
}

TEST(PoissonNoise, NonPositiveLambdaRejected) {
  Rng rng(9);
  EXPECT_THROW(sample_poisson_noise(constant(10.0, 8), 0.0, rng), Error);
  EXPECT_THROW(sample_poisson_noise(constant(10.0, 8), -2.0, rng), Error);
}

TEST(PoissonNoise, DeterministicUnderSeed) {
  Rng a(10), b(10);
  EXPECT_EQ(sample_poisson_noise(constant(90.0, 64), 5.0, a),
            sample_poisson_noise(constant(90.0, 64), 5.0, b));
}

// ------------------------------------------------------------ NoiseSpec

TEST(NoiseSpec, Validation) {
  EXPECT_THROW(NoiseSpec::gaussian(-1.0).validate(), Error);
  EXPECT_THROW(NoiseSpec::poisson(0.0).validate(), Error);
  NoiseSpec bad_range = NoiseSpec::blind_gaussian(10.0, {20.0, 10.0});
  EXPECT_THROW(bad_range.validate(), Error);
  NoiseSpec negative = NoiseSpec::blind_gaussian(10.0, {-1.0, 10.0});
  EXPECT_THROW(negative.validate(), Error);
  EXPECT_NO_THROW(NoiseSpec::mixed(5.0, 25.0).validate());
  EXPECT_NO_THROW(NoiseSpec::blind_mixed(5.0, 25.0).validate());
}

TEST(NoiseSpec, KindNamesRoundTrip) {
  for (NoiseKind k : {NoiseKind::gaussian, NoiseKind::poisson, NoiseKind::mixed,
                      NoiseKind::blind_gaussian, NoiseKind::blind_mixed}) {
    EXPECT_EQ(parse_noise_kind(to_string(k)), k);
  }
  EXPECT_FALSE(parse_noise_kind("speckle").has_value());
}

// ------------------------------------------------------------ make_observed

TEST(MakeObserved, ZeroSigmaIsIdentity) {
  Rng rng(11);
  const ImageBuffer x = constant(77.0, 16);
  const ImageBuffer y = make_observed(x, NoiseSpec::gaussian(0.0), rng);
  EXPECT_EQ(y.role(), Role::observed);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(y.samples()[i], x.samples()[i]);
}

TEST(MakeObserved, RequiresCleanRole) {
  Rng rng(12);
  EXPECT_THROW(make_observed(constant(1.0, 8, Role::observed), NoiseSpec::gaussian(1.0), rng),
               Error);
}

TEST(MakeObserved, PsnrAnchorAtSigma15) {
  Rng rng(13);
  const ImageBuffer x = constant(128.0, 256);
  EXPECT_NEAR(psnr(make_observed(x, NoiseSpec::gaussian(15.0), rng), x), 24.61, 0.15);
}

TEST(MakeObserved, PsnrAnchorAtSigma5) {
  Rng rng(14);
  const ImageBuffer x = constant(128.0, 256);
  EXPECT_NEAR(psnr(make_observed(x, NoiseSpec::gaussian(5.0), rng), x), 34.15, 0.15);
}

TEST(MakeObserved, SamplesAreNotClipped) {
  Rng rng(15);
  const ImageBuffer y = make_observed(constant(2.0, 64), NoiseSpec::gaussian(20.0), rng);
  EXPECT_LT(*std::min_element(y.samples().begin(), y.samples().end()), 0.0);
}

TEST(MakeObserved, RecordsConcreteLevel) {
  Rng rng(16);
  const ImageBuffer y = make_observed(constant(50.0, 8), NoiseSpec::mixed(7.0, 20.0), rng);
  ASSERT_TRUE(y.noise_level().has_value());
  EXPECT_EQ(y.noise_level()->sigma, 7.0);
  EXPECT_EQ(y.noise_level()->lambda, 20.0);
}

// ----------------------------------------------------------- make_simulated

TEST(MakeSimulated, ZeroSpecIsIdentity) {
  Rng rng(17);
  const ImageBuffer y = constant(33.0, 16, Role::observed);
  const ImageBuffer z = make_simulated(y, NoiseSpec::gaussian(0.0), rng);
  EXPECT_EQ(z.role(), Role::simulated);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_EQ(z.samples()[i], y.samples()[i]);
}

TEST(MakeSimulated, RequiresObservedRole) {
  Rng rng(18);
  EXPECT_THROW(make_simulated(constant(1.0, 8), NoiseSpec::gaussian(1.0), rng), Error);
}

TEST(MakeSimulated, GaussianVarianceAdds) {
  Rng rng(19);
  const ImageBuffer x = constant(128.0);
  const ImageBuffer y = make_observed(x, NoiseSpec::gaussian(5.0), rng);
  const ImageBuffer z = make_simulated(y, NoiseSpec::gaussian(5.0), rng);
  std::vector<double> diff(x.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = z.samples()[i] - x.samples()[i];
  EXPECT_NEAR(moments(diff).variance, 50.0, 0.05 * 50.0);
}

TEST(MakeSimulated, IndependentGaussianComponentsAdd) {
  Rng rng(20);
  const ImageBuffer x = constant(128.0);
  const ImageBuffer y = make_observed(x, NoiseSpec::gaussian(10.0), rng);
  const ImageBuffer z = make_simulated(y, NoiseSpec::gaussian(20.0), rng);
  std::vector<double> diff(x.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = z.samples()[i] - x.samples()[i];
  EXPECT_NEAR(moments(diff).variance, 500.0, 0.05 * 500.0);
}

TEST(MakeSimulated, PoissonVariancesAdd) {
  Rng rng(21);
  const ImageBuffer x = constant(128.0);
  const ImageBuffer y = make_observed(x, NoiseSpec::poisson(25.0), rng);
  const ImageBuffer z = make_simulated(y, NoiseSpec::poisson(10.0), rng);
  std::vector<double> diff(x.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = z.samples()[i] - x.samples()[i];
  // The simulated rate follows y, whose mean is 128.
  const double expected = 255.0 * 128.0 / 25.0 + 255.0 * 128.0 / 10.0;
  EXPECT_NEAR(moments(diff).variance, expected, 0.05 * expected);
}

TEST(MakeSimulated, BlindLevelRecordedWithinRange) {
  Rng rng(22);
  const ImageBuffer y = constant(100.0, 8, Role::observed);
  const NoiseSpec spec = NoiseSpec::blind_gaussian(10.0, {0.0, 55.0});
  for (int i = 0; i < 200; ++i) {
    const ImageBuffer z = make_simulated(y, spec, rng);
    ASSERT_TRUE(z.noise_level().has_value());
    EXPECT_GE(z.noise_level()->sigma, 0.0);
    EXPECT_LE(z.noise_level()->sigma, 55.0);
  }
}

// --------------------------------------------------------- draw_blind_level

TEST(BlindLevel, DegenerateRange) {
  Rng rng(23);
  const NoiseSpec spec = NoiseSpec::blind_gaussian(10.0, {10.0, 10.0});
  for (int i = 0; i < 100; ++i) EXPECT_EQ(draw_blind_level(spec, rng).sigma, 10.0);
}

TEST(BlindLevel, TruncatedGaussianMean) {
  Rng rng(24);
  const NoiseSpec spec = NoiseSpec::blind_gaussian(10.0, {0.0, 55.0});
  double sum = 0.0;
  for (int i = 0; i < 100'000; ++i) {
    const double s = draw_blind_level(spec, rng).sigma;
    ASSERT_GE(s, 0.0);
    ASSERT_LE(s, 55.0);
    sum += s;
  }
  EXPECT_NEAR(sum / 100'000, 27.5, 1.0);
}

TEST(BlindLevel, TruncatedGaussianSpreadMatchesSimulation) {
  // Independent rejection sampler with the same parameters.
  std::mt19937_64 gen(99);
  std::normal_distribution<double> normal(27.5, 55.0 / 4.0);
  double ref_sq = 0.0;
  int kept = 0;
  while (kept < 100'000) {
    const double s = normal(gen);
    if (s < 0.0 || s > 55.0) continue;
    ref_sq += (s - 27.5) * (s - 27.5);
    ++kept;
  }
  const double ref_std = std::sqrt(ref_sq / kept);
  Rng rng(25);
  const NoiseSpec spec = NoiseSpec::blind_gaussian(10.0, {0.0, 55.0});
  double sq = 0.0;
  for (int i = 0; i < 100'000; ++i) sq += std::pow(draw_blind_level(spec, rng).sigma - 27.5, 2);
  EXPECT_NEAR(std::sqrt(sq / 100'000), ref_std, 0.02 * ref_std);
}

TEST(BlindLevel, UniformOption) {
  Rng rng(26);
  NoiseSpec spec = NoiseSpec::blind_gaussian(10.0, {0.0, 55.0});
  spec.blind_distribution = BlindDistribution::uniform;
  double sum = 0.0, sq = 0.0;
  const int n = 100'000;
  for (int i = 0; i < n; ++i) {
    const double s = draw_blind_level(spec, rng).sigma;
    sum += s;
    sq += s * s;
  }
  const double mean = sum / n;
  EXPECT_NEAR(mean, 27.5, 0.5);
  EXPECT_NEAR(sq / n - mean * mean, 55.0 * 55.0 / 12.0, 0.03 * 55.0 * 55.0 / 12.0);
}

TEST(BlindLevel, BlindMixedPairsInHalfOpenBox) {
  Rng rng(27);
  const NoiseSpec spec = NoiseSpec::blind_mixed(10.0, 20.0);
  for (int i = 0; i < 10'000; ++i) {
    const NoiseLevel l = draw_blind_level(spec, rng);
    EXPECT_GT(l.sigma, 0.0);
    EXPECT_LE(l.sigma, 25.0);
    EXPECT_GT(l.lambda, 0.0);
    EXPECT_LE(l.lambda, 25.0);
  }
}

TEST(BlindLevel, NonBlindSpecRejected) {
  Rng rng(28);
  EXPECT_THROW(draw_blind_level(NoiseSpec::gaussian(5.0), rng), Error);
}

}  // namespace
}  // namespace nac
