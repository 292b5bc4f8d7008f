#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "nac/desk_set.hpp"
#include "nac/digest.hpp"
#include "nac/error.hpp"
#include "nac/gradcheck.hpp"
#include "nac/image_io.hpp"
#include "nac/metrics.hpp"
#include "nac/pipeline.hpp"
#include "nac/theory.hpp"

namespace nac::cli {
namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

constexpr std::size_t kRunIdLength = 12;

Range parse_range(const std::string& text, const char* flag) {
  const auto colon = text.find(':');
  try {
    if (colon == std::string::npos) throw std::invalid_argument("missing ':'");
    std::size_t used_lo = 0, used_hi = 0;
    const std::string lo_text = text.substr(0, colon);
    const std::string hi_text = text.substr(colon + 1);
    const double lo = std::stod(lo_text, &used_lo);
    const double hi = std::stod(hi_text, &used_hi);
    if (used_lo != lo_text.size() || used_hi != hi_text.size()) {
      throw std::invalid_argument("trailing characters");
    }
    return {lo, hi};
  } catch (const std::exception&) {
    throw Error(ErrorKind::invalid_argument,
                std::string(flag) + " expects LO:HI, got '" + text + "'");
  }
}

std::string format_level(double level) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", level);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io_failure, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::io_failure, "write failed: " + path.string());
}

fs::path prepare_run_dir(const RunConfig& cfg, bool images) {
  const fs::path dir = fs::path(cfg.out) / cfg.run_id();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (images) {
    fs::create_directories(dir / "denoised", ec);
    fs::create_directories(dir / "curves", ec);
  }
  if (ec) throw Error(ErrorKind::io_failure, "cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

std::string digest_comment(const RunConfig& cfg) { return "config_digest " + cfg.digest(); }

std::string csv_with_digest(const RunConfig& cfg, const std::string& body) {
  return "# config_digest=" + cfg.digest() + "\n" + body;
}

NetworkConfig network_config(const RunConfig& cfg) {
  NetworkConfig net;
  net.num_residual_blocks = cfg.blocks;
  net.hidden_channels = cfg.channels;
  net.input_channels = cfg.color ? 3 : 1;
  net.validate();
  return net;
}

TrainConfig train_config(const RunConfig& cfg, const NoiseSpec& spec, bool record_curve) {
  TrainConfig train;
  train.epochs = cfg.epochs;
  train.learning_rate = cfg.learning_rate;
  train.seed = cfg.seed;
  train.blind = spec.is_blind();
  train.fixed_z = cfg.fixed_z;
  train.record_curve = record_curve;
  train.validate();
  return train;
}

LabeledImage prepare(LabeledImage item, const RunConfig& cfg) {
  item.image = cfg.color ? to_color(item.image) : to_grayscale(item.image);
  if (cfg.crop) item.image = center_crop(item.image, *cfg.crop);
  return item;
}

std::vector<LabeledImage> load_dataset(const RunConfig& cfg) {
  if (cfg.dataset.empty()) throw Error(ErrorKind::invalid_argument, "--dataset is required");
  std::vector<LabeledImage> images;
  if (cfg.dataset == "desk") {
    for (LabeledImage& item : desk_set()) images.push_back(prepare(std::move(item), cfg));
    return images;
  }
  const Dataset dataset = Dataset::from_directory(
      cfg.dataset, cfg.color ? ChannelMode::color : ChannelMode::grayscale, cfg.crop);
  return dataset.load();
}

Json metrics_json(double value) { return std::isfinite(value) ? Json(value) : Json(nullptr); }

void print_error(ErrorKind kind, const std::string& message) {
  Json record;
  record["error"]["kind"] = std::string(to_string(kind));
  record["error"]["message"] = message;
  std::cerr << record.dump() << '\n';
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io_failure:
    case ErrorKind::non_finite:
    case ErrorKind::divergence:
    case ErrorKind::missing_activations:
      return kExitRuntime;
    default:
      return kExitValidation;
  }
}

// ------------------------------------------------------------- commands

int cmd_denoise(const RunConfig& cfg) {
  if (cfg.input.empty()) throw Error(ErrorKind::invalid_argument, "--input is required");
  const NoiseSpec spec = cfg.noise_spec(cfg.noise == "poisson" ? cfg.lambda : cfg.sigma);
  const NetworkConfig net = network_config(cfg);
  const LabeledImage item = prepare({fs::path(cfg.input).stem().string(), load_image(cfg.input)}, cfg);
  const TrainConfig train_base = train_config(cfg, spec, cfg.synthesize);

  ImageBuffer observed;
  std::optional<ImageBuffer> clean;
  if (cfg.synthesize) {
    clean = item.image;
    observed = observed_for(*clean, spec, cfg.seed, 0);
  } else {
    observed = item.image.with_role(Role::observed);
  }
  TrainConfig train = train_base;
  train.seed = image_seed(cfg.seed, 0);
  EpochProbe probe;
  if (clean) {
    probe = [&](int, Network& n) -> std::optional<double> {
      return psnr(denoise(n, observed), *clean);
    };
  }
  const fs::path dir = prepare_run_dir(cfg, true);
  TrainResult trained = train_nac(observed, spec, net, train, probe);
  const ImageBuffer restored = denoise(trained.network, observed);

  const std::string ext = cfg.color ? ".ppm" : ".pgm";
  save_image(restored, dir / "denoised" / (item.id + ext), digest_comment(cfg));
  write_text(dir / "curves" / (item.id + ".csv"), csv_with_digest(cfg, trained.record.to_csv()));

  Json report;
  report["config_digest"] = cfg.digest();
  report["run_id"] = cfg.run_id();
  report["seed"] = cfg.seed;
  report["id"] = item.id;
  report["noise"] = {{"kind", cfg.noise},
                     {"sigma", spec.concrete_level().sigma},
                     {"lambda", spec.concrete_level().lambda},
                     {"synthesized", cfg.synthesize}};
  if (clean) {
    report["metrics"] = {{"psnr", psnr(restored, *clean)},
                         {"ssim", metrics_json(ssim(restored, *clean))},
                         {"noisy_psnr", psnr(observed, *clean)},
                         {"noisy_ssim", metrics_json(ssim(observed, *clean))}};
  } else {
    report["metrics"] = nullptr;
  }
  report["training"] = {{"epochs", cfg.epochs},
                        {"final_loss", trained.record.loss.back()},
                        {"training_output_psnr", trained.record.training_output_psnr},
                        {"checksum", to_hex(trained.record.checksum)}};
  write_text(dir / "report.json", report.dump(2) + "\n");

  std::printf("run %s\n", dir.string().c_str());
  if (clean) {
    std::printf("%s: noisy %.2f dB -> denoised %.2f dB\n", item.id.c_str(),
                psnr(observed, *clean), psnr(restored, *clean));
  }
  return kExitOk;
}

int cmd_benchmark(const RunConfig& cfg) {
  if (cfg.levels.empty()) throw Error(ErrorKind::invalid_argument, "--levels must not be empty");
  const std::vector<LabeledImage> images = load_dataset(cfg);
  const NetworkConfig net = network_config(cfg);
  for (double level : cfg.levels) cfg.noise_spec(level).validate();
  const fs::path dir = prepare_run_dir(cfg, true);

  std::string table = "level,psnr,ssim,noisy_psnr,noisy_ssim\n";
  Json report;
  report["config_digest"] = cfg.digest();
  report["run_id"] = cfg.run_id();
  report["seed"] = cfg.seed;
  report["levels"] = Json::array();
  std::size_t failures = 0;
  const std::string ext = cfg.color ? ".ppm" : ".pgm";

  for (double level : cfg.levels) {
    const NoiseSpec spec = cfg.noise_spec(level);
    const TrainConfig train = train_config(cfg, spec, true);
    std::vector<ImageOutcome> outcomes;
    const auto start = std::chrono::steady_clock::now();
    EvalReport result = run_experiment(images, spec, net, train, {0, &outcomes});
    result.config_digest = cfg.digest();
    failures += result.failures();

    const std::string tag = format_level(level);
    for (const ImageOutcome& o : outcomes) {
      save_image(o.denoised, dir / "denoised" / (o.id + "_" + tag + ext), digest_comment(cfg));
      write_text(dir / "curves" / (o.id + "_" + tag + ".csv"), csv_with_digest(cfg, o.record.to_csv()));
    }
    char line[160];
    std::snprintf(line, sizeof line, "%s,%.4f,%.4f,%.4f,%.4f\n", tag.c_str(), result.mean_psnr,
                  result.mean_ssim, result.mean_noisy_psnr, result.mean_noisy_ssim);
    table += line;
    report["levels"].push_back({{"level", level}, {"report", Json::parse(result.to_json())}});

    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("level %-5s psnr %.2f ssim %.4f (noisy %.2f / %.4f) %zu images %.1f s\n",
                tag.c_str(), result.mean_psnr, result.mean_ssim, result.mean_noisy_psnr,
                result.mean_noisy_ssim, images.size(), seconds);
    for (const EvalRow& row : result.rows) {
      if (!row.ok) print_error(ErrorKind::io_failure, row.id + ": " + row.error);
    }
  }
  write_text(dir / "benchmark.csv", csv_with_digest(cfg, table));
  write_text(dir / "report.json", report.dump(2) + "\n");
  std::printf("run %s\n", dir.string().c_str());
  return failures == 0 ? kExitOk : kExitRuntime;
}

int cmd_verify_theory(const RunConfig& cfg) {
  TheorySuiteConfig suite;
  suite.trials = cfg.trials;
  suite.seed = cfg.seed;
  const TheoryReport result = run_theory_suite(suite);
  const fs::path dir = prepare_run_dir(cfg, false);
  Json report;
  report["config_digest"] = cfg.digest();
  report["run_id"] = cfg.run_id();
  report["seed"] = cfg.seed;
  report["trials"] = cfg.trials;
  report["all_pass"] = result.all_pass();
  report["rows"] = Json::parse(result.to_json());
  write_text(dir / "report.json", report.dump(2) + "\n");
  std::printf("%s", result.to_table().c_str());
  std::printf("run %s\n", dir.string().c_str());
  return result.all_pass() ? kExitOk : kExitAcceptance;
}

int cmd_gradcheck(const RunConfig& cfg) {
  GradcheckOptions options;
  options.seed = cfg.seed;
  options.inject_fault = cfg.inject_fault;
  const GradcheckReport result = run_gradcheck(options);
  const fs::path dir = prepare_run_dir(cfg, false);
  Json report;
  report["config_digest"] = cfg.digest();
  report["run_id"] = cfg.run_id();
  report["seed"] = cfg.seed;
  report["threshold"] = options.threshold;
  report["rows"] = Json::array();
  for (const GradcheckRow& row : result.rows) {
    report["rows"].push_back({{"subject", row.subject},
                              {"checked", row.checked},
                              {"worst_relative_error", row.worst_relative_error},
                              {"pass", row.pass}});
  }
  report["worst_relative_error"] = result.worst();
  report["all_pass"] = result.all_pass();
  write_text(dir / "report.json", report.dump(2) + "\n");
  std::printf("%s", result.to_table().c_str());
  std::printf("run %s\n", dir.string().c_str());
  return result.all_pass() ? kExitOk : kExitAcceptance;
}

int cmd_desk_set(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.out, ec);
  if (ec) throw Error(ErrorKind::io_failure, "cannot create " + cfg.out + ": " + ec.message());
  for (const LabeledImage& item : desk_set(cfg.crop.value_or(64))) {
    const fs::path path = fs::path(cfg.out) / (item.id + ".pgm");
    save_image(item.image, path, digest_comment(cfg));
    std::printf("%s\n", path.string().c_str());
  }
  return kExitOk;
}

}  // namespace

std::string RunConfig::canonical_json() const {
  Json j;
  j["subcommand"] = subcommand;
  j["input"] = input;
  j["dataset"] = dataset;
  j["synthesize"] = synthesize;
  j["color"] = color;
  j["crop"] = crop ? Json(*crop) : Json(nullptr);
  j["noise"] = noise;
  j["sigma"] = sigma;
  j["lambda"] = lambda;
  j["sigma_range"] = {sigma_range.lo, sigma_range.hi};
  j["lambda_range"] = {lambda_range.lo, lambda_range.hi};
  j["blind_distribution"] = blind_distribution;
  j["levels"] = levels;
  j["blocks"] = blocks;
  j["channels"] = channels;
  j["epochs"] = epochs;
  j["learning_rate"] = learning_rate;
  j["seed"] = seed;
  j["blind"] = blind;
  j["fixed_z"] = fixed_z;
  j["trials"] = trials;
  j["inject_fault"] = inject_fault;
  return j.dump();
}

std::string RunConfig::digest() const { return digest_hex(canonical_json()); }

std::string RunConfig::run_id() const { return digest().substr(0, kRunIdLength); }

NoiseSpec RunConfig::noise_spec(double level) const {
  const std::optional<NoiseKind> parsed = parse_noise_kind(noise);
  if (!parsed) throw Error(ErrorKind::invalid_argument, "unknown noise kind '" + noise + "'");
  NoiseKind kind = *parsed;
  if (blind) {
    if (kind == NoiseKind::gaussian) kind = NoiseKind::blind_gaussian;
    if (kind == NoiseKind::mixed) kind = NoiseKind::blind_mixed;
    if (kind == NoiseKind::poisson) {
      throw Error(ErrorKind::invalid_argument, "--blind needs gaussian or mixed noise");
    }
  }
  NoiseSpec spec;
  switch (kind) {
    case NoiseKind::gaussian: spec = NoiseSpec::gaussian(level); break;
    case NoiseKind::poisson: spec = NoiseSpec::poisson(level); break;
    case NoiseKind::mixed: spec = NoiseSpec::mixed(level, lambda); break;
    case NoiseKind::blind_gaussian: spec = NoiseSpec::blind_gaussian(level, sigma_range); break;
    case NoiseKind::blind_mixed:
      spec = NoiseSpec::blind_mixed(level, lambda);
      spec.sigma_range = sigma_range;
      spec.lambda_range = lambda_range;
      break;
  }
  if (blind_distribution == "uniform") {
    spec.blind_distribution = BlindDistribution::uniform;
  } else if (blind_distribution != "gaussian") {
    throw Error(ErrorKind::invalid_argument,
                "unknown blind distribution '" + blind_distribution + "'");
  }
  spec.validate();
  return spec;
}

int run(int argc, const char* const* argv) {
  RunConfig cfg;
  CLI::App app{"Per-image self-supervised denoising trained on noisy-as-clean pairs"};
  app.set_config("--config", "", "TOML or INI file with option values; flags override it");
  app.require_subcommand(1);

  std::string sigma_range = "0:55";
  std::string lambda_range = "0:25";
  int crop = 0;

  auto add_seed_out = [&](CLI::App* sub) {
    sub->add_option("--seed", cfg.seed, "Random seed");
    sub->add_option("--out", cfg.out, "Output root directory")->capture_default_str();
  };
  auto add_training = [&](CLI::App* sub) {
    sub->add_option("--noise", cfg.noise,
                    "gaussian | poisson | mixed | blind-gaussian | blind-mixed")
        ->capture_default_str();
    sub->add_option("--sigma", cfg.sigma, "AWGN standard deviation")->capture_default_str();
    sub->add_option("--lambda", cfg.lambda, "Poisson photon scale")->capture_default_str();
    sub->add_option("--sigma-range", sigma_range, "Blind sigma range LO:HI")->capture_default_str();
    sub->add_option("--lambda-range", lambda_range, "Blind lambda range LO:HI")
        ->capture_default_str();
    sub->add_option("--blind-distribution", cfg.blind_distribution, "gaussian | uniform")
        ->capture_default_str();
    sub->add_option("--blocks", cfg.blocks, "Residual blocks")->capture_default_str();
    sub->add_option("--channels", cfg.channels, "Hidden channels")->capture_default_str();
    sub->add_option("--epochs", cfg.epochs, "Training epochs")->capture_default_str();
    sub->add_option("--lr", cfg.learning_rate, "Adam learning rate")->capture_default_str();
    sub->add_flag("--blind", cfg.blind, "Train with randomly drawn noise levels");
    sub->add_flag("--fixed-z", cfg.fixed_z, "Draw the simulated noise once");
    sub->add_flag("--color", cfg.color, "Process three channels");
    sub->add_option("--crop", crop, "Center crop to N x N");
    add_seed_out(sub);
  };

  CLI::App* denoise_cmd = app.add_subcommand("denoise", "Train on one image and denoise it");
  denoise_cmd->add_option("--input", cfg.input, "Image file (PGM, PPM or PNG)");
  bool no_synthesis = false;
  denoise_cmd->add_flag("--no-synthesis", no_synthesis,
                        "Treat the input as already noisy (no metrics)");
  add_training(denoise_cmd);

  CLI::App* bench_cmd = app.add_subcommand("benchmark", "Run every image at every noise level");
  bench_cmd->add_option("--dataset", cfg.dataset, "Image directory, or 'desk'");
  bench_cmd->add_option("--levels", cfg.levels, "Noise levels")->delimiter(',')
      ->capture_default_str();
  add_training(bench_cmd);

  CLI::App* theory_cmd = app.add_subcommand("verify-theory", "Monte Carlo checks of the noise model");
  theory_cmd->add_option("--trials", cfg.trials, "Samples per estimate")->capture_default_str();
  add_seed_out(theory_cmd);

  CLI::App* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  grad_cmd->add_flag("--inject-fault", cfg.inject_fault)->group("");
  add_seed_out(grad_cmd);

  CLI::App* desk_cmd = app.add_subcommand("desk-set", "Write the built-in test images");
  desk_cmd->add_option("--size", crop, "Image size [64]");
  desk_cmd->add_option("--out", cfg.out, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    print_error(ErrorKind::invalid_argument, e.what());
    return kExitValidation;
  }

  try {
    cfg.subcommand = app.get_subcommands().front()->get_name();
    cfg.synthesize = !no_synthesis;
    if (crop != 0) {
      if (crop < 1) throw Error(ErrorKind::invalid_argument, "--crop must be positive");
      cfg.crop = crop;
    }
    cfg.sigma_range = parse_range(sigma_range, "--sigma-range");
    cfg.lambda_range = parse_range(lambda_range, "--lambda-range");

    if (cfg.subcommand == "denoise") return cmd_denoise(cfg);
    if (cfg.subcommand == "benchmark") return cmd_benchmark(cfg);
    if (cfg.subcommand == "verify-theory") return cmd_verify_theory(cfg);
    if (cfg.subcommand == "gradcheck") return cmd_gradcheck(cfg);
    return cmd_desk_set(cfg);
  } catch (const Error& e) {
    print_error(e.kind(), e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    print_error(ErrorKind::io_failure, e.what());
    return kExitRuntime;
  }
}

}  // namespace nac::cli
