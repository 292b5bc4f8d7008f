#include "nac/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>

#include "nac/error.hpp"

namespace nac {

double psnr(const ImageBuffer& a, const ImageBuffer& b, double peak) {
  require_same_dimensions(a, b, "psnr");
  std::span<const double> sa = a.samples();
  std::span<const double> sb = b.samples();
  double sum = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i) {
    const double d = std::clamp(sa[i], 0.0, peak) - std::clamp(sb[i], 0.0, peak);
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(sa.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

namespace {

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(size);
  const int half = size / 2;
  double total = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - half;
    w[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    total += w[i];
  }
  for (double& v : w) v /= total;
  return w;
}

// Separable "valid" filtering of an h x w plane.
std::vector<double> filter_valid(const std::vector<double>& plane, int h, int w,
                                 const std::vector<double>& kernel) {
  const int k = static_cast<int>(kernel.size());
  const int ow = w - k + 1;
  const int oh = h - k + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < k; ++i) acc += kernel[i] * plane[static_cast<std::size_t>(y) * w + x + i];
      rows[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < k; ++i) acc += kernel[i] * rows[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  return out;
}

}  // namespace

double ssim(const ImageBuffer& a, const ImageBuffer& b, const SsimOptions& opt) {
  require_same_dimensions(a, b, "ssim");
  if (a.height() < opt.window || a.width() < opt.window) {
    throw Error(ErrorKind::invalid_argument,
                "ssim needs images of at least " + std::to_string(opt.window) + "x" +
                    std::to_string(opt.window) + ", got " + std::to_string(a.height()) +
                    "x" + std::to_string(a.width()));
  }
  const std::vector<double> kernel = gaussian_window(opt.window, opt.gaussian_sigma);
  const double c1 = (opt.k1 * opt.dynamic_range) * (opt.k1 * opt.dynamic_range);
  const double c2 = (opt.k2 * opt.dynamic_range) * (opt.k2 * opt.dynamic_range);
  const int h = a.height();
  const int w = a.width();
  const std::size_t plane = a.plane_size();

  double total = 0.0;
  for (int c = 0; c < a.channels(); ++c) {
    std::vector<double> pa(plane), pb(plane), aa(plane), bb(plane), ab(plane);
    for (std::size_t i = 0; i < plane; ++i) {
      pa[i] = std::clamp(a.samples()[c * plane + i], 0.0, opt.dynamic_range);
      pb[i] = std::clamp(b.samples()[c * plane + i], 0.0, opt.dynamic_range);
      aa[i] = pa[i] * pa[i];
      bb[i] = pb[i] * pb[i];
      ab[i] = pa[i] * pb[i];
    }
    const auto mu_a = filter_valid(pa, h, w, kernel);
    const auto mu_b = filter_valid(pb, h, w, kernel);
    const auto e_aa = filter_valid(aa, h, w, kernel);
    const auto e_bb = filter_valid(bb, h, w, kernel);
    const auto e_ab = filter_valid(ab, h, w, kernel);
    double sum = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
      const double ma2 = mu_a[i] * mu_a[i];
      const double mb2 = mu_b[i] * mu_b[i];
      const double mab = mu_a[i] * mu_b[i];
      const double var_a = e_aa[i] - ma2;
      const double var_b = e_bb[i] - mb2;
      const double cov = e_ab[i] - mab;
      sum += ((2.0 * mab + c1) * (2.0 * cov + c2)) / ((ma2 + mb2 + c1) * (var_a + var_b + c2));
    }
    total += sum / static_cast<double>(mu_a.size());
  }
  return total / a.channels();
}

// ------------------------------------------------------------ EvalReport

void EvalReport::finalize() {
  double p = 0.0, s = 0.0, np = 0.0, ns = 0.0;
  std::size_t n = 0;
  for (const EvalRow& r : rows) {
    if (!r.ok) continue;
    p += r.psnr;
    s += r.ssim;
    np += r.noisy_psnr;
    ns += r.noisy_ssim;
    ++n;
  }
  const double inv = n > 0 ? 1.0 / static_cast<double>(n) : 0.0;
  mean_psnr = p * inv;
  mean_ssim = s * inv;
  mean_noisy_psnr = np * inv;
  mean_noisy_ssim = ns * inv;
}

std::size_t EvalReport::failures() const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const EvalRow& r) { return !r.ok; }));
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["rows"] = nlohmann::ordered_json::array();
  for (const EvalRow& r : rows) {
    nlohmann::ordered_json row;
    row["id"] = r.id;
    row["sigma"] = r.sigma;
    row["lambda"] = r.lambda;
    row["psnr"] = r.psnr;
    row["ssim"] = r.ssim;
    row["noisy_psnr"] = r.noisy_psnr;
    row["noisy_ssim"] = r.noisy_ssim;
    row["status"] = r.ok ? "ok" : "failed";
    if (!r.ok) row["error"] = r.error;
    j["rows"].push_back(std::move(row));
  }
  j["mean_psnr"] = mean_psnr;
  j["mean_ssim"] = mean_ssim;
  j["mean_noisy_psnr"] = mean_noisy_psnr;
  j["mean_noisy_ssim"] = mean_noisy_ssim;
  j["seed"] = seed;
  j["config_digest"] = config_digest;
  j["failures"] = failures();
  return j.dump(2) + "\n";
}

std::string EvalReport::to_csv() const {
  std::string out = "id,sigma,lambda,psnr,ssim,noisy_psnr,noisy_ssim\n";
  char line[256];
  for (const EvalRow& r : rows) {
    if (r.ok) {
      std::snprintf(line, sizeof line, "%s,%.4f,%.4f,%.4f,%.6f,%.4f,%.6f\n", r.id.c_str(),
                    r.sigma, r.lambda, r.psnr, r.ssim, r.noisy_psnr, r.noisy_ssim);
    } else {
      std::snprintf(line, sizeof line, "%s,%.4f,%.4f,,,,\n", r.id.c_str(), r.sigma, r.lambda);
    }
    out += line;
  }
  std::snprintf(line, sizeof line, "mean,,,%.4f,%.6f,%.4f,%.6f\n", mean_psnr, mean_ssim,
                mean_noisy_psnr, mean_noisy_ssim);
  out += line;
  return out;
}

}  // namespace nac
