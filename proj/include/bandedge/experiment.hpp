#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bandedge/serialize.hpp"

namespace bandedge {

inline constexpr int kConfigSchema = 1;

struct ModelSpec {
  int dimension = 1;
  int points_per_unit = 32;
  PeriodicBackground background{1};
  std::vector<Bump> bumps;
  CouplingBounds bounds{1.0, 3.0};
};

struct SweepSpec {
  int n_theta = 129;
  int n_bands = 4;
  double band_lambda = 0.0;
  std::vector<double> lambda_ladder;   // ascending from 0
  std::vector<double> alphabet;        // empty: {omega^-, mid, omega^+}
  LatticeVector max_period;            // empty: 3 (d = 1) or (2, 2)
  double quadratic_delta = 0.3;
};

struct CheckSpec {
  std::string verify_kind = "auto";    // auto | min-location | fixed-sign
  std::vector<double> lambdas;         // absolute values; if empty use fractions of lambda0
  std::vector<double> lambda_fractions{0.1, 0.25};
  double small_fraction = 0.25;
  bool box_sampling = true;
  std::size_t box_samples = 200;
  std::vector<int> box_ladder{1, 2, 4, 8};
  bool projection = true;
  std::size_t projection_samples = 50;
  double projection_fraction = 0.25;
  LatticeVector projection_period;     // empty: max_period
  double projection_tolerance = 1e-8;
  std::uint64_t seed = 1;
  double refine_tol = 1e-7;
  double singular_tol = 1e-8;
  double gap_threshold = 1e-6;
  double absolute_floor = 1e-8;
  int supercell_n_theta = 17;
  int projection_n_theta = 5;
};

struct OutputSpec {
  std::string directory = "out";
  std::vector<std::string> formats{"csv", "json", "svg", "md"};
};

struct ExperimentConfig {
  int schema = kConfigSchema;
  ModelSpec model;
  SweepSpec sweep;
  CheckSpec checks;
  OutputSpec output;

  bool wants(std::string_view format) const;
};

/// Throws Error(ConfigError) with the source name, line and field on bad input.
ExperimentConfig parse_experiment_config(std::string_view text, std::string_view source = "<config>");
ExperimentConfig load_experiment_config(const std::string& path);

/// Unit-cell model at lambda = 0 with the constant omega^- configuration.
BlochModel base_model(const ExperimentConfig& config);

/// Stable hash of everything that determines the coupling scan.
std::string coupling_fingerprint(const ExperimentConfig& config);

/// Independent seed for one random stream of an experiment (splitmix64 mix).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

enum class Stage { All, Bands, Minima, Coupling, Verify, ProjectCheck };

std::string_view to_string(Stage s);
Stage parse_stage(std::string_view name);

struct RunOptions {
  Stage stage = Stage::All;
  std::optional<std::string> out_dir;   // overrides output.directory
  bool strict = false;
  bool recompute = true;                // false: missing upstream artifacts are an error
  std::ostream* log = nullptr;
};

struct RunResult {
  int exit_code = 0;                    // 0 iff every requested verdict passed
  std::vector<std::string> files;
  std::vector<std::string> warnings;
  std::vector<std::string> failures;
};

RunResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

}  // namespace bandedge
