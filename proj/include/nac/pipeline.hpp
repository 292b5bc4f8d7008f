#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nac/image.hpp"
#include "nac/metrics.hpp"
#include "nac/network.hpp"
#include "nac/noise.hpp"

namespace nac {

/// Affine map between pixel values and network units: images enter as
/// (v - offset) / scale and leave through the inverse.
struct PixelNormalization {
  /// Smallest scale used, so flat images do not blow up.
  static constexpr double kMinScale = 1.0;

  double offset = 0.0;
  double scale = 1.0;

  /// Mean and standard deviation of the observed image. Training and
  /// inference on that image both use it, and it needs no clean data.
  static PixelNormalization of(const ImageBuffer& observed);
};
/// Smallest height/width accepted for training.
inline constexpr int kMinTrainingExtent = 8;

enum class BatchMode {
  all_transforms,  // one optimizer step per epoch over all augmented copies
  per_transform,   // one step per augmented copy
};

enum class BlindScope {
  per_image,  // a fresh blind level for every augmented copy
  per_epoch,  // one blind level shared by the whole epoch
};

struct TrainConfig {
  int epochs = 500;
  double learning_rate = 1e-3;
  bool augment = true;
  std::uint64_t seed = 0;
  bool blind = false;
  /// Draw the simulated images once and reuse them every epoch.
  bool fixed_z = false;
  /// Ask run_experiment to record per-epoch PSNR against the clean image.
  bool record_curve = false;
  BatchMode batch_mode = BatchMode::all_transforms;
  BlindScope blind_scope = BlindScope::per_image;

  void validate() const;
};

struct TrainingRecord {
  std::vector<double> loss;  // one entry per epoch
  std::vector<double> psnr;  // filled only by an epoch probe
  /// PSNR of the trained network's output on a freshly simulated input
  /// against the training target (eval mode, identity transform).
  double training_output_psnr = 0.0;
  double wall_seconds = 0.0;
  std::uint64_t checksum = 0;

  /// "epoch,loss,psnr" lines; psnr is blank when not recorded.
  std::string to_csv() const;
};

/// Called after every epoch's update. A returned value is appended to
/// TrainingRecord::psnr.
using EpochProbe = std::function<std::optional<double>(int epoch, Network& net)>;

struct TrainResult {
  Network network;
  TrainingRecord record;
};

/// Self-supervised training on (z, y) pairs, z = y + n_s drawn from `noise`.
/// Never sees the clean image.
TrainResult train_nac(const ImageBuffer& observed, const NoiseSpec& noise,
                      const NetworkConfig& net_config, const TrainConfig& config,
                      const EpochProbe& probe = {});

/// Supervised reference: same loop on the fixed pair (y, x).
TrainResult train_oracle(const ImageBuffer& observed, const ImageBuffer& clean,
                         const NetworkConfig& net_config, const TrainConfig& config,
                         const EpochProbe& probe = {});

/// One eval-mode forward pass on y. The output is not clipped.
ImageBuffer denoise(Network& net, const ImageBuffer& observed);

struct ImageOutcome {
  std::string id;
  ImageBuffer observed;
  ImageBuffer denoised;
  TrainingRecord record;
};

struct ExperimentOptions {
  /// 0 picks the hardware concurrency unless NAC_SERIAL=1 is set.
  int workers = 0;
  /// When set, receives one entry per successfully processed image, in
  /// dataset order.
  std::vector<ImageOutcome>* outcomes = nullptr;
};

/// make_observed -> train_nac -> denoise -> PSNR/SSIM against the clean
/// image, for every image. Image i uses the seed stream (config.seed, i), so
/// the report does not depend on scheduling. Failures are recorded per row.
EvalReport run_experiment(std::span<const LabeledImage> dataset, const NoiseSpec& noise,
                          const NetworkConfig& net_config, const TrainConfig& config,
                          const ExperimentOptions& options = {});

/// Worker count honoring NAC_SERIAL.
int default_worker_count();

/// Seed used for image `index` of an experiment.
std::uint64_t image_seed(std::uint64_t experiment_seed, std::size_t index);

/// Observed image that run_experiment synthesizes for dataset image `index`.
ImageBuffer observed_for(const ImageBuffer& clean, const NoiseSpec& noise,
                         std::uint64_t experiment_seed, std::size_t index);

}  // namespace nac
