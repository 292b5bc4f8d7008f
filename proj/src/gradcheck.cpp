#include "nac/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "nac/layers.hpp"
#include "nac/network.hpp"
#include "nac/rng.hpp"

namespace nac {
namespace {

constexpr double kFaultFactor = 1.01;

Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t(shape);
  std::normal_distribution<double> normal(0.0, scale);
  for (double& v : t.data()) v = normal(rng);
  return t;
}

// ReLU is not differentiable at 0, so its inputs keep a margin from it.
Tensor away_from_zero(Shape shape, Rng& rng) {
  Tensor t(shape);
  std::uniform_real_distribution<double> magnitude(0.1, 1.0);
  std::bernoulli_distribution sign(0.5);
  for (double& v : t.data()) v = sign(rng) ? magnitude(rng) : -magnitude(rng);
  return t;
}

double project(const Tensor& out, const Tensor& weights) {
  double sum = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) sum += out[i] * weights[i];
  return sum;
}

template <class Subject>
Tensor run_backward(Subject& subject, const Tensor& grad_out) {
  for (Tensor* p : subject.parameters()) {
    p->enable_grad();
    p->zero_grad();
  }
  return subject.backward(grad_out);
}

template <class Subject>
GradcheckRow check(const std::string& name, Subject& subject, Tensor input, int param_samples,
                   const GradcheckOptions& options, Rng& rng) {
  GradcheckRow row{name, 0, 0.0, false};
  const Tensor out = subject.forward(input, Mode::train);
  const Tensor projection = random_tensor(out.shape(), rng);
  const Tensor input_grad = run_backward(subject, projection);

  auto objective = [&]() { return project(subject.forward(input, Mode::train), projection); };
  auto compare = [&](double& value, double analytic) {
    const double saved = value;
    value = saved + options.step;
    const double plus = objective();
    value = saved - options.step;
    const double minus = objective();
    value = saved;
    const double numeric = (plus - minus) / (2.0 * options.step);
    if (options.inject_fault) analytic *= kFaultFactor;
    row.worst_relative_error = std::max(row.worst_relative_error, relative_error(analytic, numeric));
    ++row.checked;
  };

  std::vector<Tensor*> params = subject.parameters();
  std::size_t total = 0;
  for (const Tensor* p : params) total += p->size();
  if (total > 0) {
    std::uniform_int_distribution<std::size_t> pick(0, total - 1);
    for (int s = 0; s < param_samples; ++s) {
      std::size_t flat = pick(rng);
      for (Tensor* p : params) {
        if (flat < p->size()) {
          const double analytic = p->grad()[flat];
          compare(p->data()[flat], analytic);
          break;
        }
        flat -= p->size();
      }
    }
  }
  std::uniform_int_distribution<std::size_t> pick_input(0, input.size() - 1);
  for (int s = 0; s < options.input_samples; ++s) {
    const std::size_t i = pick_input(rng);
    compare(input[i], input_grad[i]);
  }
  subject.clear_activations();
  row.pass = row.worst_relative_error < options.threshold;
  return row;
}

// Adapter giving Network the layer-style parameter hooks used above.
struct NetworkSubject {
  Network& net;
  Tensor forward(const Tensor& x, Mode mode) { return net.forward(x, mode); }
  Tensor backward(const Tensor& g) { return net.backward(g); }
  std::vector<Tensor*> parameters() { return net.parameters(); }
  void clear_activations() { net.clear_activations(); }
};

// Nonzero BN scale/shift so their gradients are exercised.
void randomize_bn(BatchNorm& bn, Rng& rng) {
  std::uniform_real_distribution<double> scale(0.5, 1.5);
  std::uniform_real_distribution<double> shift(-0.2, 0.2);
  for (double& v : bn.scale.data()) v = scale(rng);
  for (double& v : bn.shift.data()) v = shift(rng);
}

}  // namespace

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), kGradcheckFloor});
  return std::abs(analytic - numeric) / denom;
}

double GradcheckReport::worst() const {
  double w = 0.0;
  for (const GradcheckRow& r : rows) w = std::max(w, r.worst_relative_error);
  return w;
}

bool GradcheckReport::all_pass() const {
  return !rows.empty() &&
         std::all_of(rows.begin(), rows.end(), [](const GradcheckRow& r) { return r.pass; });
}

std::string GradcheckReport::to_table() const {
  std::string out = "subject          checked  worst_rel_error  status\n";
  char line[128];
  for (const GradcheckRow& r : rows) {
    std::snprintf(line, sizeof line, "%-16s %7d  %15.3e  %s\n", r.subject.c_str(), r.checked,
                  r.worst_relative_error, r.pass ? "PASS" : "FAIL");
    out += line;
  }
  std::snprintf(line, sizeof line, "worst %.3e\n", worst());
  return out + line;
}

GradcheckReport run_gradcheck(const GradcheckOptions& options) {
  Rng rng = make_stream(options.seed, 0);
  GradcheckReport report;
  const Shape small{2, 3, 6, 6};

  Conv2d conv(3, 4, 3);
  conv.initialize(rng);
  for (double& b : conv.bias.data()) b = std::normal_distribution<double>(0.0, 0.1)(rng);
  report.rows.push_back(
      check("conv2d", conv, random_tensor(small, rng), options.parameter_samples, options, rng));

  BatchNorm bn(3);
  randomize_bn(bn, rng);
  report.rows.push_back(
      check("batch_norm", bn, random_tensor(small, rng), options.parameter_samples, options, rng));

  Relu act;
  report.rows.push_back(
      check("relu", act, away_from_zero(small, rng), options.parameter_samples, options, rng));

  ResidualBlock block(3, 3);
  block.initialize(rng);
  randomize_bn(block.bn1, rng);
  randomize_bn(block.bn2, rng);
  report.rows.push_back(check("residual_block", block, random_tensor(small, rng),
                              options.parameter_samples, options, rng));

  NetworkConfig cfg;
  cfg.num_residual_blocks = 3;
  cfg.hidden_channels = 4;
  Network net(cfg, rng);
  for (Layer& layer : net.layers()) {
    if (auto* rb = std::get_if<ResidualBlock>(&layer)) {
      randomize_bn(rb->bn1, rng);
      randomize_bn(rb->bn2, rng);
    }
  }
  NetworkSubject subject{net};
  report.rows.push_back(check("network", subject, random_tensor({2, 1, 8, 8}, rng),
                              options.network_parameter_samples, options, rng));
  return report;
}

}  // namespace nac
