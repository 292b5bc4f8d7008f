#include "nac/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <thread>

#include "nac/augment.hpp"
#include "nac/error.hpp"
#include "nac/optimizer.hpp"

namespace nac {
namespace {

// Stream ids derived from a training seed.
constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kNoiseStream = 1;
constexpr std::uint64_t kProbeStream = 2;
// Stream id derived from an image seed for the observed noise.
constexpr std::uint64_t kObservedStream = 7;

void require_trainable(const ImageBuffer& image, const NetworkConfig& net_config) {
  if (image.height() < kMinTrainingExtent || image.width() < kMinTrainingExtent) {
    throw Error(ErrorKind::invalid_argument,
                "training images must be at least " + std::to_string(kMinTrainingExtent) +
                    "x" + std::to_string(kMinTrainingExtent));
  }
  if (image.channels() != net_config.input_channels) {
    throw Error(ErrorKind::shape_mismatch,
                "image has " + std::to_string(image.channels()) +
                    " channels, network expects " + std::to_string(net_config.input_channels));
  }
}

std::vector<ImageBuffer> augmented(const ImageBuffer& image, bool augment) {
  std::vector<ImageBuffer> out;
  if (!augment) {
    out.push_back(image);
    return out;
  }
  for (AugmentedImage& a : augment_dihedral(image)) out.push_back(std::move(a.image));
  return out;
}

// Index groups that form one optimizer step each. Transposing transforms of
// a non-square image cannot share a batch with the others.
std::vector<std::vector<std::size_t>> make_batches(const std::vector<ImageBuffer>& images,
                                                   BatchMode mode) {
  std::vector<std::vector<std::size_t>> batches;
  if (mode == BatchMode::per_transform) {
    for (std::size_t i = 0; i < images.size(); ++i) batches.push_back({i});
    return batches;
  }
  std::map<std::pair<int, int>, std::size_t> slot;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto key = std::make_pair(images[i].height(), images[i].width());
    auto [it, inserted] = slot.emplace(key, batches.size());
    if (inserted) batches.emplace_back();
    batches[it->second].push_back(i);
  }
  return batches;
}

// Produces the network input for augmented copy `index` in `epoch`.
using InputSource = std::function<const ImageBuffer&(int epoch, std::size_t index)>;

TrainResult train_loop(const std::vector<ImageBuffer>& targets, const InputSource& input_for,
                       const PixelNormalization& norm, const NetworkConfig& net_config,
                       const TrainConfig& config, const EpochProbe& probe) {
  const auto start = std::chrono::steady_clock::now();
  Rng init_rng = make_stream(config.seed, kInitStream);
  TrainResult result{Network(net_config, init_rng), {}};
  Network& net = result.network;
  AdamState adam(AdamConfig{.learning_rate = config.learning_rate});
  const auto batches = make_batches(targets, config.batch_mode);

  std::vector<Tensor> target_tensors;
  for (const auto& batch : batches) {
    std::vector<const ImageBuffer*> members;
    for (std::size_t i : batch) members.push_back(&targets[i]);
    target_tensors.push_back(to_tensor(members, norm.scale, norm.offset));
  }

  result.record.loss.reserve(static_cast<std::size_t>(config.epochs));
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    double weighted = 0.0;
    std::size_t count = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      std::vector<const ImageBuffer*> inputs;
      for (std::size_t i : batches[b]) inputs.push_back(&input_for(epoch, i));
      const Tensor x = to_tensor(inputs, norm.scale, norm.offset);
      const Tensor out = net.forward(x, Mode::train);
      const LossResult loss = l2_loss(out, target_tensors[b]);
      if (!std::isfinite(loss.value)) {
        throw Error(ErrorKind::divergence,
                    "training diverged: non-finite loss at epoch " + std::to_string(epoch));
      }
      net.backward(loss.grad);
      try {
        adam_step(net, adam);
      } catch (const Error& e) {
        throw Error(ErrorKind::divergence, "training diverged at epoch " +
                                               std::to_string(epoch) + ": " + e.what());
      }
      weighted += loss.value * static_cast<double>(batches[b].size());
      count += batches[b].size();
    }
    result.record.loss.push_back(weighted / static_cast<double>(count));
    if (probe) {
      net.clear_activations();
      if (auto value = probe(epoch, net)) result.record.psnr.push_back(*value);
    }
  }
  net.clear_activations();

  // Training-output quality on the identity transform.
  const Tensor probe_input = to_tensor(input_for(config.epochs + 1, 0), norm.scale, norm.offset);
  const Tensor check = net.forward(probe_input, Mode::eval);
  result.record.training_output_psnr =
      psnr(from_tensor(check, 0, Role::denoised, norm.scale, norm.offset), targets.front());

  result.record.checksum = net.checksum();
  result.record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

ImageBuffer simulate(const ImageBuffer& base, const NoiseLevel& level, Rng& rng) {
  const std::vector<double> noise = sample_noise(base, level, rng);
  ImageBuffer z = base.with_role(Role::simulated);
  std::span<double> s = z.samples();
  for (std::size_t i = 0; i < s.size(); ++i) s[i] += noise[i];
  z.set_noise_level(level);
  return z;
}

}  // namespace

PixelNormalization PixelNormalization::of(const ImageBuffer& observed) {
  std::span<const double> v = observed.samples();
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(v.size());
  return {mean, std::max(std::sqrt(var), kMinScale)};
}

void TrainConfig::validate() const {
  if (epochs < 1) throw Error(ErrorKind::invalid_argument, "epochs must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorKind::invalid_argument, "learning rate must be > 0");
  }
}

std::string TrainingRecord::to_csv() const {
  std::string out = "epoch,loss,psnr\n";
  char line[128];
  for (std::size_t e = 0; e < loss.size(); ++e) {
    if (e < psnr.size()) {
      std::snprintf(line, sizeof line, "%zu,%.10e,%.6f\n", e + 1, loss[e], psnr[e]);
    } else {
      std::snprintf(line, sizeof line, "%zu,%.10e,\n", e + 1, loss[e]);
    }
    out += line;
  }
  return out;
}

TrainResult train_nac(const ImageBuffer& observed, const NoiseSpec& noise,
                      const NetworkConfig& net_config, const TrainConfig& config,
                      const EpochProbe& probe) {
  require_role(observed, Role::observed, "train_nac");
  net_config.validate();
  config.validate();
  noise.validate();
  require_trainable(observed, net_config);
  if (config.blind != noise.is_blind()) {
    throw Error(ErrorKind::invalid_argument,
                config.blind ? "blind training needs a blind noise spec"
                             : "blind noise spec requires blind training");
  }

  const std::vector<ImageBuffer> targets = augmented(observed, config.augment);
  Rng noise_rng = make_stream(config.seed, kNoiseStream);
  std::vector<ImageBuffer> inputs(targets.size());
  int drawn_epoch = 0;
  NoiseLevel epoch_level = noise.concrete_level();

  auto level_for = [&](int epoch) {
    if (!noise.is_blind()) return noise.concrete_level();
    if (config.blind_scope == BlindScope::per_image) return draw_blind_level(noise, noise_rng);
    if (drawn_epoch != epoch) {
      epoch_level = draw_blind_level(noise, noise_rng);
      drawn_epoch = epoch;
    }
    return epoch_level;
  };

  if (config.fixed_z) {
    for (std::size_t i = 0; i < targets.size(); ++i) {
      inputs[i] = simulate(targets[i], level_for(1), noise_rng);
    }
  }
  Rng probe_rng = make_stream(config.seed, kProbeStream);
  const InputSource source = [&](int epoch, std::size_t index) -> const ImageBuffer& {
    if (epoch > config.epochs) {
      // Post-training check input; drawn from its own stream so it does not
      // perturb the training sequence.
      const NoiseLevel level = noise.is_blind() ? draw_blind_level(noise, probe_rng)
                                                : noise.concrete_level();
      inputs[index] = simulate(targets[index], level, probe_rng);
    } else if (!config.fixed_z) {
      inputs[index] = simulate(targets[index], level_for(epoch), noise_rng);
    }
    return inputs[index];
  };
  return train_loop(targets, source, PixelNormalization::of(observed), net_config, config, probe);
}

TrainResult train_oracle(const ImageBuffer& observed, const ImageBuffer& clean,
                         const NetworkConfig& net_config, const TrainConfig& config,
                         const EpochProbe& probe) {
  require_role(observed, Role::observed, "train_oracle");
  require_role(clean, Role::clean, "train_oracle");
  require_same_dimensions(observed, clean, "train_oracle");
  net_config.validate();
  config.validate();
  require_trainable(observed, net_config);

  const std::vector<ImageBuffer> inputs = augmented(observed, config.augment);
  const std::vector<ImageBuffer> targets = augmented(clean, config.augment);
  const InputSource source = [&](int, std::size_t index) -> const ImageBuffer& {
    return inputs[index];
  };
  return train_loop(targets, source, PixelNormalization::of(observed), net_config, config, probe);
}

ImageBuffer denoise(Network& net, const ImageBuffer& observed) {
  require_role(observed, Role::observed, "denoise");
  if (observed.channels() != net.config().input_channels) {
    throw Error(ErrorKind::shape_mismatch,
                "image has " + std::to_string(observed.channels()) +
                    " channels, network expects " +
                    std::to_string(net.config().input_channels));
  }
  const PixelNormalization norm = PixelNormalization::of(observed);
  const Tensor out = net.forward(to_tensor(observed, norm.scale, norm.offset), Mode::eval);
  return from_tensor(out, 0, Role::denoised, norm.scale, norm.offset);
}

int default_worker_count() {
  if (const char* serial = std::getenv("NAC_SERIAL"); serial && std::string(serial) == "1") {
    return 1;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

std::uint64_t image_seed(std::uint64_t experiment_seed, std::size_t index) {
  return stream_seed(experiment_seed, index);
}

ImageBuffer observed_for(const ImageBuffer& clean, const NoiseSpec& noise,
                         std::uint64_t experiment_seed, std::size_t index) {
  Rng rng = make_stream(image_seed(experiment_seed, index), kObservedStream);
  return make_observed(clean, noise, rng);
}

EvalReport run_experiment(std::span<const LabeledImage> dataset, const NoiseSpec& noise,
                          const NetworkConfig& net_config, const TrainConfig& config,
                          const ExperimentOptions& options) {
  if (dataset.empty()) throw Error(ErrorKind::invalid_argument, "dataset is empty");
  net_config.validate();
  config.validate();
  noise.validate();
  const auto start = std::chrono::steady_clock::now();

  EvalReport report;
  report.seed = config.seed;
  report.rows.resize(dataset.size());
  std::vector<std::optional<ImageOutcome>> outcomes(dataset.size());

  auto process = [&](std::size_t index) {
    const LabeledImage& item = dataset[index];
    EvalRow& row = report.rows[index];
    row.id = item.id;
    const NoiseLevel level = noise.concrete_level();
    row.sigma = level.sigma;
    row.lambda = level.lambda;
    try {
      const ImageBuffer& clean = item.image;
      ImageBuffer observed = observed_for(clean, noise, config.seed, index);
      TrainConfig image_config = config;
      image_config.seed = image_seed(config.seed, index);
      EpochProbe probe;
      if (config.record_curve) {
        probe = [&](int, Network& net) -> std::optional<double> {
          return psnr(denoise(net, observed), clean);
        };
      }
      TrainResult trained = train_nac(observed, noise, net_config, image_config, probe);
      ImageBuffer restored = denoise(trained.network, observed);
      row.psnr = psnr(restored, clean);
      row.ssim = ssim(restored, clean);
      row.noisy_psnr = psnr(observed, clean);
      row.noisy_ssim = ssim(observed, clean);
      if (options.outcomes) {
        outcomes[index] = ImageOutcome{item.id, std::move(observed), std::move(restored),
                                       std::move(trained.record)};
      }
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
  };

  const int workers = std::min<int>(options.workers > 0 ? options.workers : default_worker_count(),
                                    static_cast<int>(dataset.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < dataset.size(); ++i) process(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < dataset.size(); i = next++) process(i);
      });
    }
    for (std::thread& t : pool) t.join();
  }

  if (options.outcomes) {
    for (auto& o : outcomes) {
      if (o) options.outcomes->push_back(std::move(*o));
    }
  }
  report.finalize();
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace nac
