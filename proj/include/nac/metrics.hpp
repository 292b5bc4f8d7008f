#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nac/image.hpp"

namespace nac {

/// Reported when the two images are identical.
inline constexpr double kPsnrCap = 99.0;

/// Peak signal-to-noise ratio in dB, 10 log10(peak^2 / MSE), with the MSE
/// taken jointly over all channels after clamping both images to [0, peak].
/// Zero MSE yields kPsnrCap.
double psnr(const ImageBuffer& a, const ImageBuffer& b, double peak = 255.0);

struct SsimOptions {
  int window = 11;
  double gaussian_sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 255.0;
};

/// Mean single-scale SSIM over all fully-contained Gaussian windows,
/// averaged over channels. Both images are clamped to [0, dynamic_range].
double ssim(const ImageBuffer& a, const ImageBuffer& b, const SsimOptions& options = {});

struct EvalRow {
  std::string id;
  double sigma = 0.0;
  double lambda = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
  double noisy_psnr = 0.0;
  double noisy_ssim = 0.0;
  bool ok = true;
  std::string error;
};

/// Per-image results plus aggregates. Failed rows are kept but excluded from
/// the means.
struct EvalReport {
  std::vector<EvalRow> rows;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  double mean_noisy_psnr = 0.0;
  double mean_noisy_ssim = 0.0;
  std::uint64_t seed = 0;
  std::string config_digest;
  double wall_seconds = 0.0;

  /// Recomputes the means from the rows.
  void finalize();
  std::size_t failures() const;

  /// {rows: [{id, sigma, lambda, psnr, ssim, ...}], mean_psnr, mean_ssim,
  /// seed, config_digest}. Wall-clock time is left out so reports are
  /// reproducible byte for byte.
  std::string to_json() const;
  /// Header plus one line per row and a final "mean" row.
  std::string to_csv() const;
};

}  // namespace nac
