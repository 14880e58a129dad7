#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mfga/models.hpp"
#include "mfga/monotonicity.hpp"

namespace mfga::harness {

enum class ModelSource { Explicit, Example72 };

struct Example72Config {
  double alpha_lo = 1.0;
  double alpha_hi = 1.0;
  double gamma_lo = 0.5;
  double gamma_hi = 2.0;
  double l2_g = 1.0;
  double l2_h0 = 1.0;
  double m0_start = 2.0;
  int max_doublings = 60;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  int t_steps = 500;
  double dx = 1e-2;
  double x_lo = std::numeric_limits<double>::quiet_NaN();
  double x_hi = std::numeric_limits<double>::quiet_NaN();
  double tol = 1e-9;
  int max_picard = 100;
  double relaxation = 1.0;
  std::string init = "zero"; // zero | terminal | both

  std::string mu0_kind = "normal"; // normal | uniform | points
  int mu0_atoms = 32;
  double mu0_mean = 0.0;
  double mu0_sd = 1.0;
  std::vector<double> mu0_points;

  std::string eta_kind = "constant"; // constant | linear | normal
  int mc_trials = 64;
  int mc_atoms = 32;
  double mc_radius = 1.0;
  std::vector<double> mc_times{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  double field_dx = 0.02;
  double field_dt = 2e-3;
  double fd_eps = 1e-2;

  std::vector<double> bump_scales{0.2, 0.1, 0.05};
  std::vector<double> x_probes{-1.0, 0.0, 1.0};
  std::string lipschitz_mode = "W2";
  int lipschitz_directions = 2;

  int fbsde_steps = 200;
  int flow_steps = 200;
  int paths_per_atom = 8;
  double gamma_c = 1.0;

  std::string sweep_key;
  std::vector<double> sweep_values;
  int jobs = 1;
};

struct OutputConfig {
  std::string dir;
  int t_stride = 50;
  int x_stride = 10;
  bool write_csv = true;
};

struct RunConfig {
  ModelSource source = ModelSource::Explicit;
  ModelSpec model;
  double a0_scale = 1.0;
  Example72Config ex72;
  /// Explicit λ⃗; for source = example72, λ₀ is derived and only λ₁..λ₃ are used.
  double lambda[4] = {1.0, 0.0, 1.0, 0.0};
  ExperimentConfig experiment;
  OutputConfig output;
  /// Every recognised key with its effective value, defaults included.
  std::vector<std::pair<std::string, std::map<std::string, std::string>>> echo;

  VecLambda lam() const { return {lambda[0], lambda[1], lambda[2], lambda[3]}; }
};

/// Parses an INI document: [section] headers, key = value lines, # comments.
/// Throws ConfigError with line numbers.
RunConfig parse_config(const std::string &text);
RunConfig load_config(const std::string &path);

/// Model and λ⃗ the run operates on (runs the construction for example72 sources).
struct ResolvedModel {
  ModelSpec model;
  VecLambda lam;
  double m0 = std::numeric_limits<double>::quiet_NaN();
};
ResolvedModel resolve_model(const RunConfig &cfg);

/// Sets one numeric model/λ parameter by key, as used by parameter sweeps.
void set_parameter(RunConfig &cfg, const std::string &key, double value);

EmpiricalMeasure initial_measure(const ExperimentConfig &e);

} // namespace mfga::harness
