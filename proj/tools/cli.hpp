#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nac/noise.hpp"

namespace nac::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 1,
  kExitRuntime = 2,
  kExitAcceptance = 3,
};

/// Fully merged invocation (flags over config file over defaults).
struct RunConfig {
  std::string subcommand;
  std::string input;
  std::string dataset;
  bool synthesize = true;
  bool color = false;
  std::optional<int> crop;

  std::string noise = "gaussian";
  double sigma = 10.0;
  double lambda = 25.0;
  Range sigma_range{0.0, 55.0};
  Range lambda_range{0.0, 25.0};
  std::string blind_distribution = "gaussian";
  std::vector<double> levels{5.0, 10.0, 15.0, 20.0, 25.0};

  int blocks = 3;
  int channels = 32;
  int epochs = 500;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  bool blind = false;
  bool fixed_z = false;

  std::size_t trials = 1'000'000;
  bool inject_fault = false;

  std::string out = "runs";

  /// Canonical JSON of every field; the digest is computed over it.
  std::string canonical_json() const;
  std::string digest() const;
  /// Output directory name: a prefix of the digest.
  std::string run_id() const;

  NoiseSpec noise_spec(double level) const;
};

/// Parses and executes one invocation. Errors are written to stderr as a
/// single-line JSON record {"error": {"kind": ..., "message": ...}}.
int run(int argc, const char* const* argv);

}  // namespace nac::cli
