#include "nac/optimizer.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "nac/error.hpp"

namespace nac {

AdamState::AdamState(AdamConfig cfg) : config(cfg) {
  if (!(cfg.learning_rate > 0.0)) {
    throw Error(ErrorKind::invalid_argument, "learning rate must be > 0");
  }
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0) || !(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) {
    throw Error(ErrorKind::invalid_argument, "Adam betas must lie in [0, 1)");
  }
}

void adam_step(std::span<Tensor* const> parameters, AdamState& state) {
  if (state.first_moment.empty()) {
    for (const Tensor* p : parameters) {
      state.first_moment.emplace_back(p->size(), 0.0);
      state.second_moment.emplace_back(p->size(), 0.0);
    }
  }
  if (state.first_moment.size() != parameters.size()) {
    throw Error(ErrorKind::shape_mismatch, "optimizer state does not match parameter list");
  }
  for (std::size_t i = 0; i < parameters.size(); ++i) {
    const Tensor& p = *parameters[i];
    if (!p.has_grad() || state.first_moment[i].size() != p.size()) {
      throw Error(ErrorKind::shape_mismatch,
                  "gradient/moment shape mismatch for parameter " + std::to_string(i));
    }
    for (double g : p.grad()) {
      if (!std::isfinite(g)) {
        throw Error(ErrorKind::non_finite,
                    "non-finite gradient in parameter " + std::to_string(i) +
                        " at step " + std::to_string(state.step + 1));
      }
    }
  }

  ++state.step;
  const AdamConfig& c = state.config;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < parameters.size(); ++i) {
    std::span<double> w = parameters[i]->data();
    std::span<const double> g = std::as_const(*parameters[i]).grad();
    std::vector<double>& m = state.first_moment[i];
    std::vector<double>& v = state.second_moment[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      w[j] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

void adam_step(Network& net, AdamState& state) {
  const std::vector<Tensor*> params = net.parameters();
  adam_step(std::span<Tensor* const>(params), state);
}

}  // namespace nac
