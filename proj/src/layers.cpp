#include "nac/layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstring>

#include "nac/error.hpp"

namespace nac {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

// Channel-major buffer holding every sample of a batch zero-padded and laid
// end to end: row c is [sample 0 (Hp x Wp) | sample 1 | ... | slack]. With
// this layout the input window of kernel tap (ky, kx) for all output pixels
// is one contiguous column range starting at ky * Wp + kx, so the
// convolution becomes k * k dense GEMMs. Output columns are indexed the same
// way; those with x >= W or falling between samples are discarded.
// Column tile processed for all taps at once, sized to stay cache resident.
constexpr Eigen::Index kColumnBlock = 2048;

struct PaddedLayout {
  PaddedLayout(const Shape& in, int k)
      : k(k),
        pad((k - 1) / 2),
        hp(in.h + 2 * pad),
        wp(in.w + 2 * pad),
        sample_stride(static_cast<Eigen::Index>(hp) * wp),
        span((in.n - 1) * sample_stride + static_cast<Eigen::Index>(in.h) * wp),
        row_length(in.n * sample_stride + k - 1) {}

  Eigen::Index tap_offset(int t) const { return (t / k) * wp + t % k; }
  Eigen::Index column(int n, int y, int x) const {
    return n * sample_stride + static_cast<Eigen::Index>(y) * wp + x;
  }

  int k, pad, hp, wp;
  Eigen::Index sample_stride, span, row_length;
};

void pad_input(const Tensor& input, const PaddedLayout& layout, std::vector<double>& padded) {
  const Shape in = input.shape();
  padded.assign(static_cast<std::size_t>(in.c * layout.row_length), 0.0);
  for (int c = 0; c < in.c; ++c) {
    double* row = padded.data() + c * layout.row_length;
    for (int n = 0; n < in.n; ++n) {
      const double* src = input.plane(n, c);
      for (int y = 0; y < in.h; ++y) {
        std::memcpy(row + layout.column(n, y + layout.pad, layout.pad),
                    src + static_cast<std::size_t>(y) * in.w, sizeof(double) * in.w);
      }
    }
  }
}

// Weight out x in x k x k regrouped as k*k contiguous (out x in) blocks.
std::vector<double> pack_taps(const Tensor& weight) {
  const Shape s = weight.shape();
  const int taps = s.h * s.w;
  std::vector<double> packed(weight.size());
  for (int o = 0; o < s.n; ++o) {
    for (int c = 0; c < s.c; ++c) {
      for (int t = 0; t < taps; ++t) {
        packed[(static_cast<std::size_t>(t) * s.n + o) * s.c + c] =
            weight[(static_cast<std::size_t>(o) * s.c + c) * taps + t];
      }
    }
  }
  return packed;
}

void require_channels(int got, int expected, const char* what) {
  if (got != expected) {
    throw Error(ErrorKind::shape_mismatch,
                std::string(what) + ": input has " + std::to_string(got) +
                    " channels, layer expects " + std::to_string(expected));
  }
}

Tensor conv_forward(const Tensor& input, const Conv2d& layer, std::vector<double>& padded) {
  const Shape in = input.shape();
  require_channels(in.c, layer.in_channels(), "conv2d");
  const int out_ch = layer.out_channels();
  const PaddedLayout layout(in, layer.kernel_size());
  pad_input(input, layout, padded);
  const std::vector<double> taps = pack_taps(layer.weight);
  ConstMatrixMap source(padded.data(), in.c, layout.row_length);

  RowMatrix result(out_ch, layout.span);
  const int tap_count = layout.k * layout.k;
  for (Eigen::Index j = 0; j < layout.span; j += kColumnBlock) {
    const Eigen::Index cols = std::min(kColumnBlock, layout.span - j);
    auto block = result.middleCols(j, cols);
    for (int t = 0; t < tap_count; ++t) {
      ConstMatrixMap w(taps.data() + static_cast<std::size_t>(t) * out_ch * in.c, out_ch, in.c);
      if (t == 0) {
        block.noalias() = w * source.middleCols(j + layout.tap_offset(t), cols);
      } else {
        block.noalias() += w * source.middleCols(j + layout.tap_offset(t), cols);
      }
    }
  }

  Tensor output(Shape{in.n, out_ch, in.h, in.w});
  for (int n = 0; n < in.n; ++n) {
    for (int o = 0; o < out_ch; ++o) {
      double* dst = output.plane(n, o);
      const double b = layer.bias[o];
      for (int y = 0; y < in.h; ++y) {
        const double* src = result.data() + o * layout.span + layout.column(n, y, 0);
        for (int x = 0; x < in.w; ++x) dst[y * in.w + x] = src[x] + b;
      }
    }
  }
  return output;
}

}  // namespace

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::batch_norm: return "batch_norm";
    case LayerKind::relu: return "relu";
    case LayerKind::residual_block: return "residual_block";
  }
  return "unknown";
}

LayerKind kind_of(const Layer& layer) {
  return static_cast<LayerKind>(layer.index());
}

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(int in_channels, int out_channels, int kernel_size)
    : weight(Shape{std::max(out_channels, 1), std::max(in_channels, 1),
                   std::max(kernel_size, 1), std::max(kernel_size, 1)}),
      bias(Shape{std::max(out_channels, 1), 1, 1, 1}) {
  if (in_channels < 1 || out_channels < 1) {
    throw Error(ErrorKind::invalid_argument, "conv2d channel counts must be >= 1");
  }
  if (kernel_size < 1 || kernel_size % 2 == 0) {
    throw Error(ErrorKind::invalid_argument,
                "conv2d kernel size must be odd, got " + std::to_string(kernel_size));
  }
  weight.enable_grad();
  bias.enable_grad();
}

void Conv2d::initialize(Rng& rng) {
  const double fan_in = static_cast<double>(in_channels()) * kernel_size() * kernel_size();
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
  for (double& w : weight.data()) w = dist(rng);
  bias.fill(0.0);
}

Tensor conv2d(const Tensor& input, const Conv2d& layer) {
  std::vector<double> padded;
  return conv_forward(input, layer, padded);
}

Tensor Conv2d::forward(const Tensor& input, Mode mode) {
  Tensor output = conv_forward(input, *this, padded_);
  if (mode == Mode::train) {
    input_shape_ = input.shape();
  } else {
    clear_activations();
  }
  return output;
}

Tensor Conv2d::backward(const Tensor& grad_output) {
  if (!input_shape_) {
    throw Error(ErrorKind::missing_activations,
                "conv2d backward called without a train-mode forward pass");
  }
  const Shape in = *input_shape_;
  require_same_shape(grad_output.shape(), Shape{in.n, out_channels(), in.h, in.w},
                     "conv2d backward");
  const int out_ch = out_channels();
  const int k = kernel_size();
  const int tap_count = k * k;
  const PaddedLayout layout(in, k);

  // Output gradient in the padded column layout; discarded columns stay 0.
  RowMatrix g = RowMatrix::Zero(out_ch, layout.span);
  std::span<double> grad_b = bias.grad();
  for (int n = 0; n < in.n; ++n) {
    for (int o = 0; o < out_ch; ++o) {
      const double* src = grad_output.plane(n, o);
      double* dst = g.data() + o * layout.span + layout.column(n, 0, 0);
      double sum = 0.0;
      for (int y = 0; y < in.h; ++y) {
        for (int x = 0; x < in.w; ++x) {
          dst[static_cast<Eigen::Index>(y) * layout.wp + x] = src[y * in.w + x];
          sum += src[y * in.w + x];
        }
      }
      grad_b[o] += sum;
    }
  }

  ConstMatrixMap source(padded_.data(), in.c, layout.row_length);
  const std::vector<double> taps = pack_taps(weight);
  RowMatrix grad_source = RowMatrix::Zero(in.c, layout.row_length);
  std::vector<RowMatrix> grad_taps(tap_count, RowMatrix::Zero(out_ch, in.c));
  for (Eigen::Index j = 0; j < layout.span; j += kColumnBlock) {
    const Eigen::Index cols = std::min(kColumnBlock, layout.span - j);
    const auto g_block = g.middleCols(j, cols);
    for (int t = 0; t < tap_count; ++t) {
      const Eigen::Index offset = j + layout.tap_offset(t);
      grad_taps[t].noalias() += g_block * source.middleCols(offset, cols).transpose();
      ConstMatrixMap w(taps.data() + static_cast<std::size_t>(t) * out_ch * in.c, out_ch, in.c);
      grad_source.middleCols(offset, cols).noalias() += w.transpose() * g_block;
    }
  }
  std::span<double> grad_w = weight.grad();
  for (int t = 0; t < tap_count; ++t) {
    for (int o = 0; o < out_ch; ++o) {
      for (int c = 0; c < in.c; ++c) {
        grad_w[(static_cast<std::size_t>(o) * in.c + c) * tap_count + t] += grad_taps[t](o, c);
      }
    }
  }

  Tensor grad_input(in);
  for (int n = 0; n < in.n; ++n) {
    for (int c = 0; c < in.c; ++c) {
      double* dst = grad_input.plane(n, c);
      for (int y = 0; y < in.h; ++y) {
        const double* src =
            grad_source.data() + c * layout.row_length + layout.column(n, y + layout.pad, layout.pad);
        std::memcpy(dst + static_cast<std::size_t>(y) * in.w, src, sizeof(double) * in.w);
      }
    }
  }
  return grad_input;
}

// ------------------------------------------------------------- BatchNorm

BatchNorm::BatchNorm(int channels, double momentum, double epsilon)
    : scale(Shape{std::max(channels, 1), 1, 1, 1}, 1.0),
      shift(Shape{std::max(channels, 1), 1, 1, 1}, 0.0),
      running_mean(Shape{std::max(channels, 1), 1, 1, 1}, 0.0),
      running_var(Shape{std::max(channels, 1), 1, 1, 1}, 1.0),
      momentum_(momentum),
      epsilon_(epsilon) {
  if (channels < 1) {
    throw Error(ErrorKind::invalid_argument, "batch_norm channels must be >= 1");
  }
  if (!(epsilon > 0.0) || !(momentum >= 0.0 && momentum <= 1.0)) {
    throw Error(ErrorKind::invalid_argument, "batch_norm epsilon/momentum out of range");
  }
  scale.enable_grad();
  shift.enable_grad();
}

namespace {

// Shared by the free function and the layer; fills the cache when given.
Tensor batch_norm_impl(const Tensor& input, BatchNorm& layer, Mode mode,
                       std::optional<Tensor>* normalized_cache,
                       std::vector<double>* inv_std_cache) {
  const Shape s = input.shape();
  require_channels(s.c, layer.channels(), "batch_norm");
  const std::size_t plane = s.plane();
  const double count = static_cast<double>(s.n) * static_cast<double>(plane);
  Tensor output(s);
  Tensor normalized(s);
  std::vector<double> inv_std(s.c);

  for (int c = 0; c < s.c; ++c) {
    double mean = 0.0;
    double var = 0.0;
    if (mode == Mode::train) {
      for (int n = 0; n < s.n; ++n) {
        const double* p = input.plane(n, c);
        for (std::size_t i = 0; i < plane; ++i) mean += p[i];
      }
      mean /= count;
      for (int n = 0; n < s.n; ++n) {
        const double* p = input.plane(n, c);
        for (std::size_t i = 0; i < plane; ++i) {
          const double d = p[i] - mean;
          var += d * d;
        }
      }
      var /= count;
      const double m = layer.momentum();
      const double unbiased = count > 1.0 ? var * count / (count - 1.0) : var;
      layer.running_mean[c] = (1.0 - m) * layer.running_mean[c] + m * mean;
      layer.running_var[c] = (1.0 - m) * layer.running_var[c] + m * unbiased;
    } else {
      mean = layer.running_mean[c];
      var = layer.running_var[c];
    }
    const double is = 1.0 / std::sqrt(var + layer.epsilon());
    inv_std[c] = is;
    const double gamma = layer.scale[c];
    const double beta = layer.shift[c];
    for (int n = 0; n < s.n; ++n) {
      const double* p = input.plane(n, c);
      double* xh = normalized.plane(n, c);
      double* o = output.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) {
        xh[i] = (p[i] - mean) * is;
        o[i] = gamma * xh[i] + beta;
      }
    }
  }
  if (normalized_cache) {
    if (mode == Mode::train) {
      *normalized_cache = std::move(normalized);
      *inv_std_cache = std::move(inv_std);
    } else {
      normalized_cache->reset();
      inv_std_cache->clear();
    }
  }
  return output;
}

}  // namespace

Tensor batch_norm(const Tensor& input, BatchNorm& layer, Mode mode) {
  return batch_norm_impl(input, layer, mode, nullptr, nullptr);
}

Tensor BatchNorm::forward(const Tensor& input, Mode mode) {
  return batch_norm_impl(input, *this, mode, &normalized_, &inv_std_);
}

Tensor BatchNorm::backward(const Tensor& grad_output) {
  if (!normalized_) {
    throw Error(ErrorKind::missing_activations,
                "batch_norm backward called without a train-mode forward pass");
  }
  const Tensor& xhat = *normalized_;
  const Shape s = xhat.shape();
  require_same_shape(grad_output.shape(), s, "batch_norm backward");
  const std::size_t plane = s.plane();
  const double count = static_cast<double>(s.n) * static_cast<double>(plane);
  std::span<double> grad_scale = scale.grad();
  std::span<double> grad_shift = shift.grad();
  Tensor grad_input(s);

  for (int c = 0; c < s.c; ++c) {
    double sum_g = 0.0;
    double sum_gx = 0.0;
    for (int n = 0; n < s.n; ++n) {
      const double* g = grad_output.plane(n, c);
      const double* xh = xhat.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) {
        sum_g += g[i];
        sum_gx += g[i] * xh[i];
      }
    }
    grad_scale[c] += sum_gx;
    grad_shift[c] += sum_g;
    const double factor = scale[c] * inv_std_[c] / count;
    for (int n = 0; n < s.n; ++n) {
      const double* g = grad_output.plane(n, c);
      const double* xh = xhat.plane(n, c);
      double* gi = grad_input.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) {
        gi[i] = factor * (count * g[i] - sum_g - xh[i] * sum_gx);
      }
    }
  }
  return grad_input;
}

// ------------------------------------------------------------------ Relu

Tensor relu(const Tensor& input) {
  Tensor output(input.shape());
  std::span<const double> in = input.data();
  std::span<double> out = output.data();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
  return output;
}

Tensor Relu::forward(const Tensor& input, Mode mode) {
  if (mode == Mode::train) {
    input_ = input;
  } else {
    input_.reset();
  }
  return relu(input);
}

Tensor Relu::backward(const Tensor& grad_output) {
  if (!input_) {
    throw Error(ErrorKind::missing_activations,
                "relu backward called without a train-mode forward pass");
  }
  require_same_shape(grad_output.shape(), input_->shape(), "relu backward");
  Tensor grad_input(grad_output.shape());
  std::span<const double> x = input_->data();
  std::span<const double> g = grad_output.data();
  std::span<double> gi = grad_input.data();
  for (std::size_t i = 0; i < x.size(); ++i) gi[i] = x[i] > 0.0 ? g[i] : 0.0;
  return grad_input;
}

// --------------------------------------------------------- ResidualBlock

ResidualBlock::ResidualBlock(int channels, int kernel_size)
    : conv1(channels, channels, kernel_size),
      bn1(channels),
      conv2(channels, channels, kernel_size),
      bn2(channels) {}

void ResidualBlock::initialize(Rng& rng) {
  conv1.initialize(rng);
  conv2.initialize(rng);
  bn2.scale.fill(0.0);
}

Tensor ResidualBlock::forward(const Tensor& input, Mode mode) {
  require_channels(input.shape().c, channels(), "residual_block");
  Tensor t = conv1.forward(input, mode);
  t = bn1.forward(t, mode);
  t = act.forward(t, mode);
  t = conv2.forward(t, mode);
  t = bn2.forward(t, mode);
  std::span<double> out = t.data();
  std::span<const double> skip = input.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += skip[i];
  return t;
}

Tensor ResidualBlock::backward(const Tensor& grad_output) {
  Tensor g = bn2.backward(grad_output);
  g = conv2.backward(g);
  g = act.backward(g);
  g = bn1.backward(g);
  g = conv1.backward(g);
  std::span<double> gi = g.data();
  std::span<const double> skip = grad_output.data();
  for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += skip[i];
  return g;
}

bool ResidualBlock::has_activations() const {
  return conv1.has_activations() && bn1.has_activations() &&
         act.has_activations() && conv2.has_activations() && bn2.has_activations();
}

void ResidualBlock::clear_activations() {
  conv1.clear_activations();
  bn1.clear_activations();
  act.clear_activations();
  conv2.clear_activations();
  bn2.clear_activations();
}

std::vector<Tensor*> ResidualBlock::parameters() {
  return {&conv1.weight, &conv1.bias, &bn1.scale, &bn1.shift,
          &conv2.weight, &conv2.bias, &bn2.scale, &bn2.shift};
}

}  // namespace nac
