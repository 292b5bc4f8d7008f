#include "nac/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nac/error.hpp"

namespace nac {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::clean: return "clean";
    case Role::observed: return "observed";
    case Role::simulated: return "simulated";
    case Role::denoised: return "denoised";
  }
  return "unknown";
}

namespace {

void validate_dimensions(int height, int width, int channels) {
  if (height < 1 || width < 1 || channels < 1) {
    throw Error(ErrorKind::invalid_argument,
                "image dimensions must be positive, got " + std::to_string(height) +
                    "x" + std::to_string(width) + "x" + std::to_string(channels));
  }
}

}  // namespace

ImageBuffer::ImageBuffer(Role role, int height, int width, int channels, double fill)
    : role_(role), height_(height), width_(width), channels_(channels) {
  validate_dimensions(height, width, channels);
  samples_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

ImageBuffer::ImageBuffer(Role role, int height, int width, int channels,
                         std::vector<double> samples)
    : role_(role), height_(height), width_(width), channels_(channels),
      samples_(std::move(samples)) {
  validate_dimensions(height, width, channels);
  if (samples_.size() != static_cast<std::size_t>(height) * width * channels) {
    throw Error(ErrorKind::shape_mismatch, "image sample count does not match dimensions");
  }
  if (!std::all_of(samples_.begin(), samples_.end(), [](double v) { return std::isfinite(v); })) {
    throw Error(ErrorKind::non_finite, "image samples must be finite");
  }
}

ImageBuffer ImageBuffer::with_role(Role role) const {
  ImageBuffer copy = *this;
  copy.role_ = role;
  copy.noise_level_.reset();
  return copy;
}

void require_role(const ImageBuffer& image, Role expected, std::string_view what) {
  if (image.role() != expected) {
    throw Error(ErrorKind::role_mismatch,
                std::string(what) + ": expected a " + std::string(to_string(expected)) +
                    " image, got " + std::string(to_string(image.role())));
  }
}

void require_same_dimensions(const ImageBuffer& a, const ImageBuffer& b, std::string_view what) {
  if (!a.same_dimensions(b)) {
    throw Error(ErrorKind::shape_mismatch,
                std::string(what) + ": image " + std::to_string(a.height()) + "x" +
                    std::to_string(a.width()) + "x" + std::to_string(a.channels()) +
                    " vs " + std::to_string(b.height()) + "x" + std::to_string(b.width()) +
                    "x" + std::to_string(b.channels()));
  }
}

Tensor to_tensor(std::span<const ImageBuffer* const> images, double scale, double offset) {
  if (images.empty()) throw Error(ErrorKind::invalid_argument, "no images to batch");
  const ImageBuffer& first = *images.front();
  Tensor t(Shape{static_cast<int>(images.size()), first.channels(), first.height(),
                 first.width()});
  const double inv = 1.0 / scale;
  std::span<double> dst = t.data();
  std::size_t next = 0;
  for (const ImageBuffer* img : images) {
    require_same_dimensions(first, *img, "to_tensor");
    for (double v : img->samples()) dst[next++] = (v - offset) * inv;
  }
  return t;
}

Tensor to_tensor(const ImageBuffer& image, double scale, double offset) {
  const ImageBuffer* one[] = {&image};
  return to_tensor(one, scale, offset);
}

ImageBuffer from_tensor(const Tensor& tensor, int n, Role role, double scale, double offset) {
  const Shape s = tensor.shape();
  ImageBuffer img(role, s.h, s.w, s.c);
  const double* src = tensor.plane(n, 0);
  std::span<double> dst = img.samples();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[i] * scale + offset;
  return img;
}

ImageBuffer clipped(const ImageBuffer& image) {
  ImageBuffer out = image;
  for (double& v : out.samples()) v = std::clamp(v, 0.0, 255.0);
  return out;
}

}  // namespace nac
