#include "nac/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "nac/error.hpp"

namespace nac {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::shape_mismatch: return "shape-mismatch";
    case ErrorKind::role_mismatch: return "role-mismatch";
    case ErrorKind::input_not_found: return "input-not-found";
    case ErrorKind::unknown_format: return "unknown-format";
    case ErrorKind::truncated_file: return "truncated-file";
    case ErrorKind::unsupported_bit_depth: return "unsupported-bit-depth";
    case ErrorKind::io_failure: return "io-failure";
    case ErrorKind::non_finite: return "non-finite";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::missing_activations: return "missing-activations";
  }
  return "unknown";
}

std::string to_string(const Shape& s) {
  return std::to_string(s.n) + "x" + std::to_string(s.c) + "x" +
         std::to_string(s.h) + "x" + std::to_string(s.w);
}

namespace {

void validate_shape(const Shape& s) {
  if (s.n < 1 || s.c < 1 || s.h < 1 || s.w < 1) {
    throw Error(ErrorKind::invalid_argument,
                "tensor extents must be >= 1, got " + to_string(s));
  }
}

}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(shape) {
  validate_shape(shape);
  data_.assign(shape.size(), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(shape), data_(std::move(data)) {
  validate_shape(shape);
  if (data_.size() != shape.size()) {
    throw Error(ErrorKind::shape_mismatch,
                "tensor " + to_string(shape) + " needs " +
                    std::to_string(shape.size()) + " elements, got " +
                    std::to_string(data_.size()));
  }
  if (!all_finite()) throw Error(ErrorKind::non_finite, "tensor data must be finite");
}

void Tensor::enable_grad() {
  if (!grad_) grad_.emplace(data_.size(), 0.0);
}

void Tensor::zero_grad() {
  if (grad_) std::fill(grad_->begin(), grad_->end(), 0.0);
}

std::span<double> Tensor::grad() {
  enable_grad();
  return *grad_;
}

std::span<const double> Tensor::grad() const {
  if (!grad_) throw Error(ErrorKind::invalid_argument, "tensor has no gradient");
  return *grad_;
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (a != b) {
    throw Error(ErrorKind::shape_mismatch, std::string(what) + ": shape " +
                                               to_string(a) + " vs " +
                                               to_string(b));
  }
}

}  // namespace nac
