#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nac/tensor.hpp"

namespace nac {

enum class Role { clean, observed, simulated, denoised };

std::string_view to_string(Role role);

/// Concrete noise level that produced an image (recorded by the samplers).
struct NoiseLevel {
  double sigma = 0.0;
  double lambda = 0.0;  // 0 means no Poisson component
};

/// Planar (channel-major) raster in nominal [0, 255] units, labeled with the
/// role it plays in the NAC procedure.
class ImageBuffer {
 public:
  ImageBuffer() = default;
  ImageBuffer(Role role, int height, int width, int channels, double fill = 0.0);
  ImageBuffer(Role role, int height, int width, int channels, std::vector<double> samples);

  Role role() const { return role_; }
  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t size() const { return samples_.size(); }
  std::size_t plane_size() const { return static_cast<std::size_t>(height_) * width_; }

  std::span<double> samples() { return samples_; }
  std::span<const double> samples() const { return samples_; }

  double& at(int c, int y, int x) {
    return samples_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x];
  }
  double at(int c, int y, int x) const {
    return samples_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x];
  }

  bool same_dimensions(const ImageBuffer& other) const {
    return height_ == other.height_ && width_ == other.width_ &&
           channels_ == other.channels_;
  }

  /// Copy carrying a different role (and no noise provenance).
  ImageBuffer with_role(Role role) const;

  const std::optional<NoiseLevel>& noise_level() const { return noise_level_; }
  void set_noise_level(NoiseLevel level) { noise_level_ = level; }

 private:
  Role role_ = Role::clean;
  int height_ = 0;
  int width_ = 0;
  int channels_ = 1;
  std::vector<double> samples_;
  std::optional<NoiseLevel> noise_level_;
};

struct LabeledImage {
  std::string id;
  ImageBuffer image;
};

/// Throws ErrorKind::role_mismatch unless `image` has role `expected`.
void require_role(const ImageBuffer& image, Role expected, std::string_view what);
void require_same_dimensions(const ImageBuffer& a, const ImageBuffer& b, std::string_view what);

/// Batches images (all the same dimensions) into an N x C x H x W tensor
/// holding (sample - offset) / scale.
Tensor to_tensor(std::span<const ImageBuffer* const> images, double scale, double offset = 0.0);
Tensor to_tensor(const ImageBuffer& image, double scale, double offset = 0.0);
/// Sample `n` of `tensor` mapped back as value * scale + offset.
ImageBuffer from_tensor(const Tensor& tensor, int n, Role role, double scale,
                        double offset = 0.0);

/// Copy with samples clamped to [0, 255].
ImageBuffer clipped(const ImageBuffer& image);

}  // namespace nac
