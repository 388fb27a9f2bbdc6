#pragma once

// Run configuration (key=value text with dotted section keys) and the experiment driver.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nullctrl/hum.hpp"
#include "nullctrl/io.hpp"
#include "nullctrl/picard.hpp"
#include "nullctrl/weights.hpp"

namespace nullctrl {

enum class Experiment { Trajectory, LinearControl, NonlinearControl, CarlemanRatio, NeumannDemo, WeightReport };

std::string experiment_name(Experiment e);

struct RunConfig {
  Experiment experiment = Experiment::WeightReport;
  std::uint64_t seed = 1;
  std::string output_dir = "out";

  DomainSpec domain;
  int nx = 32;
  int ny = 32;
  int nt = 64;
  double s = 2.0;
  double lambda = 1.5;

  DualConfig dual;
  std::vector<double> epsilons;  // linear-control sweep; empty means {dual.epsilon}
  PicardConfig picard;

  double theta_bar_amplitude = 1.0;  // θ̄⁰ = A sin(π x₂ / L₂)
  double theta0_amplitude = 1e-2;    // linear-control θ⁰ = a sin(π x₁/L₁) sin(π x₂/L₂)
  int save_every = 16;               // trajectory field dumps

  int samples = 50;
  std::vector<double> s_sweep;  // carleman-ratio; empty means {s}
  bool alpha_family = false;

  int neumann_steps = 1000;
  double neumann_mass = 0.7;
  bool neumann_advect = true;

  GridSpec grid() const;
  /// Every key with its resolved value, in a fixed order.
  Manifest entries() const;
};

/// Parses and validates. Throws ParseError (with line number) or ValidationError.
RunConfig parse_config(const std::string& text);

/// Checks cross-field invariants; parse_config already calls it.
void validate(const RunConfig& cfg);

struct RunOutcome {
  int exit_code = 0;  // 0 ok, 3 non-convergence
  std::string status;
  std::vector<std::string> files;  // relative to the output directory
};

/// Executes the configured experiment and writes its artifacts plus manifest.txt.
/// With `check_only`, only validation and the weight-inequality report run.
RunOutcome run(const RunConfig& cfg, bool check_only = false);

/// Machine-readable error record, written to `<dir>/error.json` when possible; returns the JSON text.
std::string write_error_record(const std::filesystem::path& dir, const std::string& kind,
                               const std::string& message, int line, int exit_code);

}  // namespace nullctrl
