#include "nac/network.hpp"

#include "nac/digest.hpp"
#include "nac/error.hpp"

namespace nac {

void NetworkConfig::validate() const {
  if (num_residual_blocks < 0) {
    throw Error(ErrorKind::invalid_argument, "num_residual_blocks must be >= 0");
  }
  if (hidden_channels < 1) {
    throw Error(ErrorKind::invalid_argument, "hidden_channels must be >= 1");
  }
  if (kernel_size < 1 || kernel_size % 2 == 0) {
    throw Error(ErrorKind::invalid_argument, "kernel_size must be a positive odd integer");
  }
  if (input_channels != 1 && input_channels != 3) {
    throw Error(ErrorKind::invalid_argument, "input_channels must be 1 or 3");
  }
}

Network::Network(const NetworkConfig& config) : config_(config) {
  config.validate();
  layers_.reserve(static_cast<std::size_t>(config.num_residual_blocks) + 2);
  layers_.emplace_back(std::in_place_type<Conv2d>, config.input_channels,
                       config.hidden_channels, config.kernel_size);
  for (int b = 0; b < config.num_residual_blocks; ++b) {
    layers_.emplace_back(std::in_place_type<ResidualBlock>, config.hidden_channels,
                         config.kernel_size);
  }
  layers_.emplace_back(std::in_place_type<Conv2d>, config.hidden_channels,
                       config.input_channels, config.kernel_size);
}

Network::Network(const NetworkConfig& config, Rng& rng) : Network(config) {
  for (Layer& layer : layers_) {
    std::visit(
        [&rng](auto& l) {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, Conv2d> || std::is_same_v<T, ResidualBlock>) {
            l.initialize(rng);
          }
        },
        layer);
  }
}

Tensor Network::forward(const Tensor& input, Mode mode) {
  if (input.shape().c != config_.input_channels) {
    throw Error(ErrorKind::shape_mismatch,
                "network expects " + std::to_string(config_.input_channels) +
                    " input channels, got tensor " + to_string(input.shape()));
  }
  Tensor x = input;
  for (Layer& layer : layers_) {
    x = std::visit([&](auto& l) { return l.forward(x, mode); }, layer);
  }
  return x;
}

Tensor Network::backward(const Tensor& output_grad) {
  for (const Layer& layer : layers_) {
    const bool retained = std::visit([](const auto& l) { return l.has_activations(); }, layer);
    if (!retained) {
      throw Error(ErrorKind::missing_activations,
                  "backward requires a preceding train-mode forward pass");
    }
  }
  zero_grad();
  Tensor g = output_grad;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    g = std::visit([&](auto& l) { return l.backward(g); }, *it);
  }
  return g;
}

std::vector<Tensor*> Network::parameters() {
  std::vector<Tensor*> params;
  for (Layer& layer : layers_) {
    for (Tensor* p : std::visit([](auto& l) { return l.parameters(); }, layer)) {
      params.push_back(p);
    }
  }
  return params;
}

std::size_t Network::parameter_count() {
  std::size_t count = 0;
  for (const Tensor* p : parameters()) count += p->size();
  return count;
}

void Network::zero_grad() {
  for (Tensor* p : parameters()) {
    p->enable_grad();
    p->zero_grad();
  }
}

void Network::clear_activations() {
  for (Layer& layer : layers_) {
    std::visit([](auto& l) { l.clear_activations(); }, layer);
  }
}

void Network::set_identity() {
  if (config_.hidden_channels < config_.input_channels) {
    throw Error(ErrorKind::invalid_argument,
                "identity network needs hidden_channels >= input_channels");
  }
  const int k = config_.kernel_size;
  const int center = k / 2;
  auto& head = std::get<Conv2d>(layers_.front());
  auto& tail = std::get<Conv2d>(layers_.back());
  head.weight.fill(0.0);
  head.bias.fill(0.0);
  tail.weight.fill(0.0);
  tail.bias.fill(0.0);
  for (int c = 0; c < config_.input_channels; ++c) {
    head.weight.at(c, c, center, center) = 1.0;
    tail.weight.at(c, c, center, center) = 1.0;
  }
  for (Layer& layer : layers_) {
    if (auto* block = std::get_if<ResidualBlock>(&layer)) {
      block->bn2.scale.fill(0.0);
      block->bn2.shift.fill(0.0);
    }
  }
}

std::uint64_t Network::checksum() const {
  Fnv1a h;
  auto add = [&h](const Tensor& t) { h.update(t.data()); };
  for (const Layer& layer : layers_) {
    std::visit(
        [&](const auto& l) {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, Conv2d>) {
            add(l.weight);
            add(l.bias);
          } else if constexpr (std::is_same_v<T, BatchNorm>) {
            add(l.scale);
            add(l.shift);
            add(l.running_mean);
            add(l.running_var);
          } else if constexpr (std::is_same_v<T, ResidualBlock>) {
            for (const Conv2d* c : {&l.conv1, &l.conv2}) {
              add(c->weight);
              add(c->bias);
            }
            for (const BatchNorm* b : {&l.bn1, &l.bn2}) {
              add(b->scale);
              add(b->shift);
              add(b->running_mean);
              add(b->running_var);
            }
          }
        },
        layer);
  }
  return h.value();
}

LossResult l2_loss(const Tensor& prediction, const Tensor& target) {
  require_same_shape(prediction.shape(), target.shape(), "l2_loss");
  LossResult result{0.0, Tensor(prediction.shape())};
  std::span<const double> p = prediction.data();
  std::span<const double> t = target.data();
  std::span<double> g = result.grad.data();
  const double n = static_cast<double>(p.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - t[i];
    sum += d * d;
    g[i] = 2.0 * d / n;
  }
  result.value = sum / n;
  return result;
}

}  // namespace nac
