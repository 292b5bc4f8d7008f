#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nac/error.hpp"
#include "nac/gradcheck.hpp"
#include "nac/layers.hpp"
#include "nac/network.hpp"
#include "nac/optimizer.hpp"

namespace nac {
namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, scale);
  Tensor t(shape);
  for (double& v : t.data()) v = normal(gen);
  return t;
}

// Direct same-padded cross-correlation.
Tensor conv_oracle(const Tensor& x, const Tensor& w, const Tensor& b) {
  const Shape s = x.shape();
  const int out = w.shape().n;
  const int k = w.shape().h;
  const int pad = (k - 1) / 2;
  Tensor y(Shape{s.n, out, s.h, s.w});
  for (int n = 0; n < s.n; ++n)
    for (int o = 0; o < out; ++o)
      for (int i = 0; i < s.h; ++i)
        for (int j = 0; j < s.w; ++j) {
          double acc = b[o];
          for (int c = 0; c < s.c; ++c)
            for (int u = 0; u < k; ++u)
              for (int v = 0; v < k; ++v) {
                const int yy = i + u - pad;
                const int xx = j + v - pad;
                if (yy < 0 || yy >= s.h || xx < 0 || xx >= s.w) continue;
                acc += w.at(o, c, u, v) * x.at(n, c, yy, xx);
              }
          y.at(n, o, i, j) = acc;
        }
  return y;
}

// Batch statistics computed in two explicit passes.
Tensor batch_norm_oracle(const Tensor& x, const Tensor& scale, const Tensor& shift, double eps) {
  const Shape s = x.shape();
  Tensor y(s);
  const double count = static_cast<double>(s.n) * s.h * s.w;
  for (int c = 0; c < s.c; ++c) {
    double mean = 0.0;
    for (int n = 0; n < s.n; ++n)
      for (int i = 0; i < s.h; ++i)
        for (int j = 0; j < s.w; ++j) mean += x.at(n, c, i, j);
    mean /= count;
    double var = 0.0;
    for (int n = 0; n < s.n; ++n)
      for (int i = 0; i < s.h; ++i)
        for (int j = 0; j < s.w; ++j) var += std::pow(x.at(n, c, i, j) - mean, 2);
    var /= count;
    for (int n = 0; n < s.n; ++n)
      for (int i = 0; i < s.h; ++i)
        for (int j = 0; j < s.w; ++j)
          y.at(n, c, i, j) = scale[c] * (x.at(n, c, i, j) - mean) / std::sqrt(var + eps) + shift[c];
  }
  return y;
}

void expect_near_all(const Tensor& a, const Tensor& b, double tol) {
  ASSERT_EQ(a.shape(), b.shape());
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(a[i], b[i], tol) << "at " << i;
}

ErrorKind kind_of_failure(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorKind::io_failure;
}

// ----------------------------------------------------------------- Tensor

TEST(Tensor, RejectsNonPositiveExtents) {
  EXPECT_EQ(kind_of_failure([] { Tensor t(Shape{1, 0, 2, 2}); }), ErrorKind::invalid_argument);
}

TEST(Tensor, RejectsDataOfWrongLength) {
  EXPECT_EQ(kind_of_failure([] { Tensor t(Shape{1, 1, 2, 2}, std::vector<double>(3, 0.0)); }),
            ErrorKind::shape_mismatch);
}

TEST(Tensor, RejectsNonFiniteData) {
  EXPECT_EQ(kind_of_failure([] {
              Tensor t(Shape{1, 1, 1, 2}, std::vector<double>{1.0, std::nan("")});
            }),
            ErrorKind::non_finite);
}

TEST(Tensor, GradHasSameShapeWhenEnabled) {
  Tensor t(Shape{2, 3, 4, 5});
  EXPECT_FALSE(t.has_grad());
  t.enable_grad();
  EXPECT_EQ(t.grad().size(), t.size());
}

// ----------------------------------------------------------------- conv2d

TEST(Conv2d, ScalingKernelOnOnes) {
  Conv2d conv(1, 1, 1);
  conv.weight[0] = 2.0;
  const Tensor y = conv2d(Tensor(Shape{1, 1, 3, 3}, 1.0), conv);
  for (double v : y.data()) EXPECT_EQ(v, 2.0);
}

TEST(Conv2d, DeltaKernelIsIdentity) {
  Conv2d conv(3, 3, 3);
  for (int c = 0; c < 3; ++c) conv.weight.at(c, c, 1, 1) = 1.0;
  const Tensor x = random_tensor({2, 3, 7, 5}, 1);
  const Tensor y = conv2d(x, conv);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(y[i], x[i]);
}

TEST(Conv2d, MatchesNestedLoopOracle) {
  Conv2d conv(2, 4, 3);
  conv.weight = random_tensor({4, 2, 3, 3}, 2);
  conv.bias = random_tensor({4, 1, 1, 1}, 3);
  const Tensor x = random_tensor({1, 2, 5, 5}, 4);
  expect_near_all(conv2d(x, conv), conv_oracle(x, conv.weight, conv.bias), 1e-12);
}

TEST(Conv2d, MatchesOracleOnBatchesAndLargerKernels) {
  Conv2d conv(3, 2, 5);
  conv.weight = random_tensor({2, 3, 5, 5}, 5);
  conv.bias = random_tensor({2, 1, 1, 1}, 6);
  const Tensor x = random_tensor({3, 3, 9, 4}, 7);
  expect_near_all(conv2d(x, conv), conv_oracle(x, conv.weight, conv.bias), 1e-12);
}

TEST(Conv2d, PreservesSpatialShape) {
  Conv2d conv(1, 6, 3);
  EXPECT_EQ(conv2d(Tensor(Shape{2, 1, 11, 13}), conv).shape(), (Shape{2, 6, 11, 13}));
}

TEST(Conv2d, IsLinear) {
  Conv2d conv(2, 3, 3);
  conv.weight = random_tensor({3, 2, 3, 3}, 8);
  const Tensor u = random_tensor({1, 2, 6, 6}, 9);
  const Tensor v = random_tensor({1, 2, 6, 6}, 10);
  const double a = 1.7, b = -0.6;
  Tensor mix(u.shape());
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = a * u[i] + b * v[i];
  const Tensor lhs = conv2d(mix, conv);
  const Tensor cu = conv2d(u, conv);
  const Tensor cv = conv2d(v, conv);
  for (std::size_t i = 0; i < lhs.size(); ++i) {
    const double rhs = a * cu[i] + b * cv[i];
    EXPECT_LE(std::abs(lhs[i] - rhs), 1e-10 * std::max(1.0, std::abs(rhs)));
  }
}

TEST(Conv2d, ShapeMismatchNamesBothShapes) {
  Conv2d conv(2, 1, 3);
  try {
    conv2d(Tensor(Shape{1, 3, 4, 4}), conv);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::shape_mismatch);
    EXPECT_NE(std::string(e.what()).find('3'), std::string::npos);
    EXPECT_NE(std::string(e.what()).find('2'), std::string::npos);
  }
}

TEST(Conv2d, RejectsEvenKernel) {
  EXPECT_EQ(kind_of_failure([] { Conv2d conv(1, 1, 4); }), ErrorKind::invalid_argument);
}

TEST(Conv2d, HeInitializationScale) {
  Conv2d conv(32, 32, 3);
  Rng rng(11);
  conv.initialize(rng);
  double sq = 0.0;
  for (double w : conv.weight.data()) sq += w * w;
  const double std_dev = std::sqrt(sq / static_cast<double>(conv.weight.size()));
  EXPECT_NEAR(std_dev, std::sqrt(2.0 / (32 * 9)), 0.05 * std::sqrt(2.0 / (32 * 9)));
  for (double b : conv.bias.data()) EXPECT_EQ(b, 0.0);
}

TEST(ResidualBlock, FreshBlockIsIdentity) {
  ResidualBlock block(4, 3);
  Rng rng(12);
  block.initialize(rng);
  for (double g : block.bn1.scale.data()) EXPECT_EQ(g, 1.0);
  for (double g : block.bn2.scale.data()) EXPECT_EQ(g, 0.0);
  const Tensor x = random_tensor({2, 4, 6, 6}, 13);
  const Tensor y = block.forward(x, Mode::train);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(y.data()[i], x.data()[i]);
}

// -------------------------------------------------------------- batch_norm

TEST(BatchNorm, ConstantInputGivesZeros) {
  BatchNorm bn(2);
  const Tensor y = batch_norm(Tensor(Shape{2, 2, 3, 3}, 7.0), bn, Mode::train);
  for (double v : y.data()) {
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_EQ(v, 0.0);
  }
}

TEST(BatchNorm, NormalizesToUnitVariance) {
  // Per-channel mean 5 and variance 4 by construction (values 3 and 7).
  Tensor x(Shape{2, 1, 2, 2});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = i % 2 == 0 ? 3.0 : 7.0;
  BatchNorm bn(1);
  const Tensor y = batch_norm(x, bn, Mode::train);
  double mean = 0.0, var = 0.0;
  for (double v : y.data()) mean += v;
  mean /= static_cast<double>(y.size());
  for (double v : y.data()) var += (v - mean) * (v - mean);
  var /= static_cast<double>(y.size());
  EXPECT_NEAR(mean, 0.0, 1e-12);
  EXPECT_NEAR(var, 1.0, 1e-6);
}

TEST(BatchNorm, MatchesTwoPassOracle) {
  BatchNorm bn(3);
  bn.scale = random_tensor({3, 1, 1, 1}, 12);
  bn.shift = random_tensor({3, 1, 1, 1}, 13);
  const Tensor x = random_tensor({4, 3, 5, 6}, 14, 3.0);
  const Tensor expected = batch_norm_oracle(x, bn.scale, bn.shift, bn.epsilon());
  expect_near_all(batch_norm(x, bn, Mode::train), expected, 1e-10);
}

TEST(BatchNorm, TrainModeStatisticsProperty) {
  for (std::uint64_t seed = 20; seed < 30; ++seed) {
    BatchNorm bn(4);
    const Tensor x = random_tensor({3, 4, 6, 6}, seed, 1.0 + static_cast<double>(seed % 5));
    const Tensor y = batch_norm(x, bn, Mode::train);
    const Shape s = y.shape();
    for (int c = 0; c < s.c; ++c) {
      double mean = 0.0, var = 0.0;
      const double count = static_cast<double>(s.n) * s.h * s.w;
      for (int n = 0; n < s.n; ++n)
        for (std::size_t i = 0; i < s.plane(); ++i) mean += y.plane(n, c)[i];
      mean /= count;
      for (int n = 0; n < s.n; ++n)
        for (std::size_t i = 0; i < s.plane(); ++i) var += std::pow(y.plane(n, c)[i] - mean, 2);
      var /= count;
      EXPECT_LT(std::abs(mean), 1e-6);
      EXPECT_NEAR(var, 1.0, 1e-4);
    }
  }
}

TEST(BatchNorm, RunningStatisticsFollowMomentum) {
  BatchNorm bn(1);
  Tensor x(Shape{1, 1, 1, 4}, std::vector<double>{1.0, 2.0, 3.0, 6.0});
  batch_norm(x, bn, Mode::train);
  // mean 3, unbiased variance 14 / 3
  EXPECT_NEAR(bn.running_mean[0], 0.1 * 3.0, 1e-12);
  EXPECT_NEAR(bn.running_var[0], 0.9 + 0.1 * 14.0 / 3.0, 1e-12);
}

TEST(BatchNorm, EvalModeUsesRunningStatistics) {
  BatchNorm bn(1);
  bn.running_mean[0] = 2.0;
  bn.running_var[0] = 4.0;
  bn.scale[0] = 3.0;
  bn.shift[0] = 1.0;
  const Tensor y = batch_norm(Tensor(Shape{1, 1, 1, 2}, std::vector<double>{2.0, 6.0}), bn,
                              Mode::eval);
  EXPECT_NEAR(y[0], 1.0, 1e-9);
  EXPECT_NEAR(y[1], 3.0 * 4.0 / std::sqrt(4.0 + bn.epsilon()) + 1.0, 1e-12);
  EXPECT_EQ(bn.running_mean[0], 2.0);
}

// -------------------------------------------------------------------- relu

TEST(Relu, Definition) {
  const Tensor y = relu(Tensor(Shape{1, 1, 1, 3}, std::vector<double>{-1.0, 0.0, 2.0}));
  EXPECT_EQ(y[0], 0.0);
  EXPECT_EQ(y[1], 0.0);
  EXPECT_EQ(y[2], 2.0);
}

TEST(Relu, AllNegativeAndAllNonNegative) {
  Tensor neg = random_tensor({1, 2, 3, 3}, 31);
  Tensor pos = neg;
  for (double& v : neg.data()) v = -std::abs(v) - 1e-3;
  for (double& v : pos.data()) v = std::abs(v);
  const Tensor zeros = relu(neg);
  for (double v : zeros.data()) EXPECT_EQ(v, 0.0);
  const Tensor same = relu(pos);
  for (std::size_t i = 0; i < pos.size(); ++i) EXPECT_EQ(same[i], pos[i]);
}

// ----------------------------------------------------------------- network

TEST(Network, ZeroBlockIdentityReproducesInput) {
  Network net(NetworkConfig{0, 4, 3, 1});
  net.set_identity();
  const Tensor x = random_tensor({2, 1, 9, 9}, 40, 50.0);
  expect_near_all(net.forward(x, Mode::eval), x, 1e-12);
}

TEST(Network, IdentityWithResidualBlocks) {
  Rng rng(41);
  Network net(NetworkConfig{2, 4, 3, 3}, rng);
  net.set_identity();
  const Tensor x = random_tensor({2, 3, 8, 8}, 42);
  expect_near_all(net.forward(x, Mode::train), x, 1e-12);
}

TEST(Network, ForwardIsDeterministic) {
  const Tensor x = random_tensor({2, 1, 10, 10}, 43);
  Rng a(44), b(44);
  Network n1(NetworkConfig{2, 8, 3, 1}, a);
  Network n2(NetworkConfig{2, 8, 3, 1}, b);
  const Tensor y1 = n1.forward(x, Mode::train);
  const Tensor y2 = n2.forward(x, Mode::train);
  ASSERT_EQ(y1.values(), y2.values());
  EXPECT_EQ(n1.checksum(), n2.checksum());
}

TEST(Network, MatchesManualComposition) {
  Rng rng(45);
  Network net(NetworkConfig{3, 6, 3, 1}, rng);
  const Tensor x = random_tensor({3, 1, 8, 8}, 46);
  // Independent composition from the oracles above and the layer parameters.
  auto& layers = net.layers();
  const auto& head = std::get<Conv2d>(layers.front());
  Tensor h = conv_oracle(x, head.weight, head.bias);
  for (std::size_t l = 1; l + 1 < layers.size(); ++l) {
    const auto& block = std::get<ResidualBlock>(layers[l]);
    Tensor t = conv_oracle(h, block.conv1.weight, block.conv1.bias);
    t = batch_norm_oracle(t, block.bn1.scale, block.bn1.shift, block.bn1.epsilon());
    for (double& v : t.data()) v = std::max(v, 0.0);
    t = conv_oracle(t, block.conv2.weight, block.conv2.bias);
    t = batch_norm_oracle(t, block.bn2.scale, block.bn2.shift, block.bn2.epsilon());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] += h[i];
    h = t;
  }
  const auto& tail = std::get<Conv2d>(layers.back());
  const Tensor expected = conv_oracle(h, tail.weight, tail.bias);
  expect_near_all(net.forward(x, Mode::train), expected, 1e-9);
}

TEST(Network, OutputShapeEqualsInputShape) {
  Rng rng(47);
  Network net(NetworkConfig{1, 5, 3, 3}, rng);
  EXPECT_EQ(net.forward(Tensor(Shape{2, 3, 9, 12}), Mode::eval).shape(), (Shape{2, 3, 9, 12}));
}

TEST(Network, RejectsWrongChannelCount) {
  Rng rng(48);
  Network net(NetworkConfig{1, 5, 3, 1}, rng);
  EXPECT_EQ(kind_of_failure([&] { net.forward(Tensor(Shape{1, 3, 8, 8}), Mode::eval); }),
            ErrorKind::shape_mismatch);
}

TEST(NetworkConfig, Validation) {
  EXPECT_EQ(kind_of_failure([] { NetworkConfig{-1, 4, 3, 1}.validate(); }),
            ErrorKind::invalid_argument);
  EXPECT_EQ(kind_of_failure([] { NetworkConfig{1, 0, 3, 1}.validate(); }),
            ErrorKind::invalid_argument);
  EXPECT_EQ(kind_of_failure([] { NetworkConfig{1, 4, 2, 1}.validate(); }),
            ErrorKind::invalid_argument);
  EXPECT_EQ(kind_of_failure([] { NetworkConfig{1, 4, 3, 2}.validate(); }),
            ErrorKind::invalid_argument);
  EXPECT_EQ(NetworkConfig{}.num_residual_blocks, 10);
}

// ----------------------------------------------------------------- l2 loss

TEST(L2Loss, IdenticalTensors) {
  const Tensor a = random_tensor({1, 1, 4, 4}, 50);
  const LossResult r = l2_loss(a, a);
  EXPECT_EQ(r.value, 0.0);
  for (double g : r.grad.data()) EXPECT_EQ(g, 0.0);
}

TEST(L2Loss, UnitOffset) {
  const Tensor t = random_tensor({2, 1, 3, 3}, 51);
  Tensor p = t;
  for (double& v : p.data()) v += 1.0;
  EXPECT_NEAR(l2_loss(p, t).value, 1.0, 1e-12);
}

TEST(L2Loss, GradientMatchesCentralDifferences) {
  Tensor p = random_tensor({1, 2, 3, 3}, 52);
  const Tensor t = random_tensor({1, 2, 3, 3}, 53);
  const LossResult r = l2_loss(p, t);
  const double h = 1e-6;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double saved = p[i];
    p[i] = saved + h;
    const double up = l2_loss(p, t).value;
    p[i] = saved - h;
    const double down = l2_loss(p, t).value;
    p[i] = saved;
    const double numeric = (up - down) / (2 * h);
    EXPECT_LE(std::abs(numeric - r.grad[i]), 1e-6 * std::max(std::abs(numeric), 1e-3));
  }
}

TEST(L2Loss, ShapeMismatch) {
  EXPECT_EQ(kind_of_failure([] { l2_loss(Tensor(Shape{1, 1, 2, 2}), Tensor(Shape{1, 1, 2, 3})); }),
            ErrorKind::shape_mismatch);
}

// ---------------------------------------------------------------- backward

TEST(Backward, ZeroOutputGradientGivesZeroParameterGradients) {
  Rng rng(60);
  Network net(NetworkConfig{2, 4, 3, 1}, rng);
  const Tensor x = random_tensor({2, 1, 6, 6}, 61);
  net.forward(x, Mode::train);
  const Tensor gin = net.backward(Tensor(Shape{2, 1, 6, 6}));
  for (Tensor* p : net.parameters())
    for (double g : p->grad()) EXPECT_EQ(g, 0.0);
  for (double g : gin.data()) EXPECT_EQ(g, 0.0);
}

TEST(Backward, RequiresRetainedActivations) {
  Rng rng(62);
  Network net(NetworkConfig{1, 4, 3, 1}, rng);
  EXPECT_EQ(kind_of_failure([&] { net.backward(Tensor(Shape{1, 1, 6, 6})); }),
            ErrorKind::missing_activations);
  net.forward(Tensor(Shape{1, 1, 6, 6}), Mode::eval);
  EXPECT_EQ(kind_of_failure([&] { net.backward(Tensor(Shape{1, 1, 6, 6})); }),
            ErrorKind::missing_activations);
}

TEST(Backward, GradientsAreFinite) {
  Rng rng(63);
  Network net(NetworkConfig{3, 8, 3, 1}, rng);
  const Tensor x = random_tensor({2, 1, 8, 8}, 64);
  const Tensor y = net.forward(x, Mode::train);
  net.backward(l2_loss(y, x).grad);
  for (Tensor* p : net.parameters())
    for (double g : p->grad()) EXPECT_TRUE(std::isfinite(g));
}

// Independent finite-difference check on a single conv layer, sampling five
// parameters as the example prescribes.
TEST(Backward, SingleConvFiniteDifferences) {
  Conv2d conv(2, 3, 3);
  Rng rng(65);
  conv.initialize(rng);
  const Tensor x = random_tensor({2, 2, 5, 5}, 66);
  const Tensor r = random_tensor({2, 3, 5, 5}, 67);
  auto objective = [&] {
    const Tensor y = conv2d(x, conv);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * r[i];
    return s;
  };
  conv.forward(x, Mode::train);
  conv.weight.zero_grad();
  conv.bias.zero_grad();
  conv.backward(r);
  std::mt19937_64 pick(68);
  std::uniform_int_distribution<std::size_t> index(0, conv.weight.size() - 1);
  for (int s = 0; s < 5; ++s) {
    const std::size_t i = index(pick);
    const double saved = conv.weight[i];
    const double h = 1e-5;
    conv.weight[i] = saved + h;
    const double up = objective();
    conv.weight[i] = saved - h;
    const double down = objective();
    conv.weight[i] = saved;
    const double numeric = (up - down) / (2 * h);
    const double analytic = conv.weight.grad()[i];
    EXPECT_LT(std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), 1e-8}),
              1e-4);
  }
}

TEST(Backward, ThreeBlockNetworkFiniteDifferences) {
  Rng rng(70);
  Network net(NetworkConfig{3, 4, 3, 1}, rng);
  const Tensor x = random_tensor({2, 1, 6, 6}, 71);
  const Tensor r = random_tensor({2, 1, 6, 6}, 72);
  auto objective = [&] {
    const Tensor y = net.forward(x, Mode::train);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * r[i];
    return s;
  };
  net.forward(x, Mode::train);
  net.backward(r);
  std::vector<Tensor*> params = net.parameters();
  std::vector<std::vector<double>> analytic;
  for (Tensor* p : params) analytic.emplace_back(p->grad().begin(), p->grad().end());
  std::mt19937_64 pick(73);
  for (int s = 0; s < 10; ++s) {
    const std::size_t t = std::uniform_int_distribution<std::size_t>(0, params.size() - 1)(pick);
    const std::size_t i = std::uniform_int_distribution<std::size_t>(0, params[t]->size() - 1)(pick);
    const double saved = (*params[t])[i];
    const double h = 1e-5;
    (*params[t])[i] = saved + h;
    const double up = objective();
    (*params[t])[i] = saved - h;
    const double down = objective();
    (*params[t])[i] = saved;
    const double numeric = (up - down) / (2 * h);
    const double a = analytic[t][i];
    EXPECT_LT(std::abs(numeric - a) / std::max({std::abs(numeric), std::abs(a), 1e-3}), 1e-4)
        << "tensor " << t << " index " << i;
  }
}

TEST(Gradcheck, DefaultSeedPasses) {
  const GradcheckReport report = run_gradcheck();
  EXPECT_TRUE(report.all_pass()) << report.to_table();
  EXPECT_LT(report.worst(), 1e-4);
}

TEST(Gradcheck, OneRowPerLayerKindPlusComposed) {
  const GradcheckReport report = run_gradcheck();
  ASSERT_EQ(report.rows.size(), 5u);
  EXPECT_EQ(report.rows[0].subject, "conv2d");
  EXPECT_EQ(report.rows[1].subject, "batch_norm");
  EXPECT_EQ(report.rows[2].subject, "relu");
  EXPECT_EQ(report.rows[3].subject, "residual_block");
  EXPECT_EQ(report.rows[4].subject, "network");
}

TEST(Gradcheck, CorruptedGradientFails) {
  GradcheckOptions options;
  options.inject_fault = true;
  EXPECT_FALSE(run_gradcheck(options).all_pass());
}

TEST(Gradcheck, PassesAcrossSeeds) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    GradcheckOptions options;
    options.seed = seed;
    const GradcheckReport report = run_gradcheck(options);
    EXPECT_TRUE(report.all_pass()) << "seed " << seed << "\n" << report.to_table();
  }
}

// -------------------------------------------------------------------- adam

TEST(Adam, ZeroGradientLeavesParametersAndIncrementsStep) {
  Tensor w(Shape{1, 1, 1, 3}, std::vector<double>{1.0, -2.0, 3.0});
  w.enable_grad();
  AdamState state;
  Tensor* params[] = {&w};
  adam_step(params, state);
  EXPECT_EQ(state.step, 1);
  EXPECT_EQ(w[0], 1.0);
  EXPECT_EQ(w[1], -2.0);
  EXPECT_EQ(w[2], 3.0);
}

TEST(Adam, FirstStepMatchesHandComputedUpdate) {
  Tensor w(Shape{1, 1, 1, 1}, 0.0);
  w.enable_grad();
  w.grad()[0] = 1.0;
  AdamState state;
  Tensor* params[] = {&w};
  adam_step(params, state);
  // m_hat = 1, v_hat = 1, so w = -lr * 1 / (1 + eps).
  EXPECT_NEAR(w[0], -0.001 / (1.0 + 1e-8), 1e-15);
  EXPECT_NEAR(w[0], -0.001, 1e-9);
}

TEST(Adam, SecondStepMatchesHandComputedUpdate) {
  Tensor w(Shape{1, 1, 1, 1}, 0.0);
  w.enable_grad();
  AdamState state;
  Tensor* params[] = {&w};
  w.grad()[0] = 1.0;
  adam_step(params, state);
  w.grad()[0] = -2.0;
  adam_step(params, state);
  const double m = 0.9 * 0.1 + 0.1 * -2.0;
  const double v = 0.999 * 0.001 + 0.001 * 4.0;
  const double m_hat = m / (1 - 0.81);
  const double v_hat = v / (1 - 0.999 * 0.999);
  const double expected = -0.001 / (1 + 1e-8) - 0.001 * m_hat / (std::sqrt(v_hat) + 1e-8);
  EXPECT_NEAR(w[0], expected, 1e-15);
}

TEST(Adam, QuadraticBowlConverges) {
  Tensor w(Shape{1, 1, 1, 1}, 0.0);
  w.enable_grad();
  AdamState state(AdamConfig{.learning_rate = 1e-2});
  Tensor* params[] = {&w};
  for (int i = 0; i < 5000; ++i) {
    w.grad()[0] = 2.0 * (w[0] - 3.0);
    adam_step(params, state);
  }
  EXPECT_LT(std::abs(w[0] - 3.0), 1e-2);
}

TEST(Adam, QuadraticBowlAtDefaultRateMatchesScalarOracle) {
  Tensor w(Shape{1, 1, 1, 1}, 0.0);
  w.enable_grad();
  AdamState state;
  Tensor* params[] = {&w};
  double ow = 0.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 5000; ++t) {
    w.grad()[0] = 2.0 * (w[0] - 3.0);
    adam_step(params, state);
    const double g = 2.0 * (ow - 3.0);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    ow -= 1e-3 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
  }
  EXPECT_NEAR(w[0], ow, 1e-9);
  // Steps of about lr cover only part of the distance in 5000 iterations.
  EXPECT_NEAR(w[0], 2.9377, 1e-3);
}

TEST(Adam, NonFiniteGradientRejectsWholeStep) {
  Tensor a(Shape{1, 1, 1, 2}, 1.0), b(Shape{1, 1, 1, 1}, 1.0);
  a.enable_grad();
  b.enable_grad();
  a.grad()[0] = 0.5;
  b.grad()[0] = std::numeric_limits<double>::infinity();
  AdamState state;
  Tensor* params[] = {&a, &b};
  EXPECT_EQ(kind_of_failure([&] { adam_step(params, state); }), ErrorKind::non_finite);
  EXPECT_EQ(state.step, 0);
  EXPECT_EQ(a[0], 1.0);
}

TEST(Adam, TrainingStepIsBitReproducible) {
  auto run = [] {
    Rng rng(80);
    Network net(NetworkConfig{2, 4, 3, 1}, rng);
    AdamState state;
    const Tensor x = random_tensor({2, 1, 8, 8}, 81);
    for (int i = 0; i < 3; ++i) {
      const Tensor y = net.forward(x, Mode::train);
      net.backward(l2_loss(y, x).grad);
      adam_step(net, state);
    }
    return net.checksum();
  };
  EXPECT_EQ(run(), run());
}

}  // namespace
}  // namespace nac
