#pragma once

// Desk-scale checks of the paper's inequalities: the observability (Carleman)
// ratio on random adjoint data, and the mass obstruction of the Neumann variant.

#include <cstdint>
#include <string>
#include <vector>

#include "nullctrl/adjoint.hpp"
#include "nullctrl/weights.hpp"

namespace nullctrl {

/// Sum of the first modes×modes Dirichlet sine modes sampled at arbitrary points.
struct SineSeries {
  int modes = 8;
  std::vector<double> coeff;  // modes × modes, N(0,1)

  double operator()(double x, double y, double lx, double ly) const;
};

struct CarlemanData {
  VectorField phiT;
  ScalarField psiT;
  VectorField g;   // time-independent sources
  ScalarField g0;
};

/// Random smooth data for one seed: each field is a normalized sine series; φT is
/// projected before normalization. Depends only on the seed, not on the grid.
CarlemanData carleman_data(const GridSpec& grid, std::uint64_t seed, int modes = 8);

struct CarlemanSample {
  std::uint64_t seed = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;  // 0 when both sides vanish, +∞ when only rhs does
};

/// Evaluates the weighted inequality for one datum. Every weight is divided by its
/// value on the [0,T/2] plateau of the β-family.
CarlemanSample carleman_evaluate(const StepKernel& kernel, const TrajectoryBar& bar, const WeightBundle& w,
                                 const CarlemanData& data, bool use_alpha_family);

struct CarlemanConfig {
  int samples = 50;
  std::uint64_t seed = 1;
  bool use_alpha_family = false;
  int modes = 8;
  int threads = 1;
};

struct CarlemanReport {
  std::vector<CarlemanSample> samples;
  double s = 0.0;
  double lambda = 0.0;
  int nx = 0;
  int ny = 0;
  double max_ratio = 0.0;
  double median_ratio = 0.0;
  bool all_finite = true;
};

/// Sample i uses seed cfg.seed + i.
CarlemanReport carleman_ratio(const StepKernel& kernel, const TrajectoryBar& bar, const WeightBundle& w,
                              const CarlemanConfig& cfg);

struct NeumannReport {
  int steps = 0;
  double mass_initial = 0.0;
  double mass_final = 0.0;
  double max_drift = 0.0;      // max over steps of |mass_n − mass_0|
  double l1_final = 0.0;       // ‖θ(T)‖_{L¹}
  double lower_bound = 0.0;    // |mass_0|: ‖θ(T)‖_{L¹} cannot go below it
  bool obstruction = false;
  std::string statement;
  std::vector<double> mass_history;
};

/// Runs the Neumann heat/advection solver for `steps` steps and reports the conserved mass.
NeumannReport neumann_obstruction(const FactorizedOperators& ops, const ScalarField& theta0,
                                  const VectorField& y, int steps);

double discrete_mass(const GridSpec& g, const ScalarField& f);
double discrete_l1(const GridSpec& g, const ScalarField& f);

}  // namespace nullctrl
