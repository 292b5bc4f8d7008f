#include "nac/desk_set.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>

#include "nac/error.hpp"

namespace nac {
namespace {

constexpr double kLow = 40.0;
constexpr double kHigh = 215.0;

// Integer lattice hash mapped to [0, 1).
double lattice(int x, int y, std::uint32_t salt) {
  std::uint32_t h = static_cast<std::uint32_t>(x) * 0x27d4eb2du ^
                    static_cast<std::uint32_t>(y) * 0x165667b1u ^ salt * 0x9e3779b9u;
  h ^= h >> 15;
  h *= 0x85ebca6bu;
  h ^= h >> 13;
  h *= 0xc2b2ae35u;
  h ^= h >> 16;
  return (h & 0xffffffu) / 16777216.0;
}

double smooth_noise(double u, double v, std::uint32_t salt) {
  const int x0 = static_cast<int>(std::floor(u));
  const int y0 = static_cast<int>(std::floor(v));
  const double fx = u - x0;
  const double fy = v - y0;
  const double sx = fx * fx * (3.0 - 2.0 * fx);
  const double sy = fy * fy * (3.0 - 2.0 * fy);
  const double a = lattice(x0, y0, salt);
  const double b = lattice(x0 + 1, y0, salt);
  const double c = lattice(x0, y0 + 1, salt);
  const double d = lattice(x0 + 1, y0 + 1, salt);
  return (a + (b - a) * sx) * (1.0 - sy) + (c + (d - c) * sx) * sy;
}

// Fractal value noise in [0, 1).
double fbm(double u, double v, std::uint32_t salt) {
  double sum = 0.0;
  double amp = 0.5;
  double norm = 0.0;
  for (int octave = 0; octave < 4; ++octave) {
    sum += amp * smooth_noise(u, v, salt + octave);
    norm += amp;
    u *= 2.0;
    v *= 2.0;
    amp *= 0.5;
  }
  return sum / norm;
}

// f maps normalized coordinates in [0, 1) to an intensity in [0, 1].
ImageBuffer render(int size, const std::function<double(double, double)>& f) {
  ImageBuffer img(Role::clean, size, size, 1);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double t = std::clamp(f((x + 0.5) / size, (y + 0.5) / size), 0.0, 1.0);
      img.at(0, y, x) = kLow + (kHigh - kLow) * t;
    }
  }
  return img;
}

double disks(double u, double v) {
  struct Disk {
    double cx, cy, r, level;
  };
  static constexpr Disk kDisks[] = {{0.30, 0.32, 0.20, 0.85}, {0.70, 0.40, 0.15, 0.15},
                                    {0.45, 0.72, 0.18, 0.65}, {0.80, 0.80, 0.10, 0.95}};
  double value = 0.40 + 0.15 * u;
  for (const Disk& d : kDisks) {
    if (std::hypot(u - d.cx, v - d.cy) < d.r) value = d.level;
  }
  return value;
}

double stripes(double u, double v) {
  const double phase = 2.0 * std::numbers::pi * (6.0 * u + 2.0 * v);
  const double wave = 0.5 + 0.35 * std::sin(phase);
  return v < 0.5 ? wave : (std::sin(phase) > 0.0 ? 0.8 : 0.2);
}

double blocks(double u, double v) {
  const int bx = static_cast<int>(u * 4.0);
  const int by = static_cast<int>(v * 4.0);
  return 0.1 + 0.8 * lattice(bx, by, 11u) + 0.1 * (u - 0.5);
}

double rings(double u, double v) {
  const double r = std::hypot(u - 0.5, v - 0.5);
  return 0.5 + 0.4 * std::cos(2.0 * std::numbers::pi * 14.0 * r * r);
}

double clouds(double u, double v) {
  return 0.05 + 0.9 * fbm(4.0 * u, 4.0 * v, 29u);
}

}  // namespace

std::vector<LabeledImage> desk_set(int size) {
  if (size < 8) throw Error(ErrorKind::invalid_argument, "desk set size must be >= 8");
  return {{"disks", render(size, disks)},
          {"stripes", render(size, stripes)},
          {"blocks", render(size, blocks)},
          {"rings", render(size, rings)},
          {"clouds", render(size, clouds)}};
}

}  // namespace nac
