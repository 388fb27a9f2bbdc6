#pragma once

// Outer fixed point for the reduced nonlinear system: solve the linear control
// problem with the quadratic terms of the previous nonlinear iterate as sources,
// then drive the nonlinear system with the resulting controls.

#include <string>
#include <vector>

#include "nullctrl/hum.hpp"

namespace nullctrl {

struct PicardConfig {
  double delta = 1e-3;  // expected bound on ‖(y⁰, θ⁰ − θ̄⁰)‖
  int max_outer = 8;
  double outer_tol = 1e-8;
  bool geometric_epsilon = false;  // ε_k = ε₀·2^{−k} instead of a fixed ε
};

struct PicardRow {
  int outer_iter = 0;
  double epsilon = 0.0;
  double terminal_norm_linear = 0.0;
  double terminal_norm_nonlinear = 0.0;
  double diff = 0.0;              // ‖traj_k − traj_{k−1}‖ / ‖traj_k‖, the zero trajectory before k = 0
  double f_norm_weighted = 0.0;   // log ‖e^{(5/2)sβ*}(γ*)^{−2} f^k‖
  double f0_norm_weighted = 0.0;  // log ‖e^{(5/2)sβ*}(γ*)^{−5/2} f₀^k‖
  int cg_iters = 0;
};

struct PicardResult {
  ControlPair controls;
  std::vector<FlowState> trajectory;  // tilde variables (ỹ, θ̃) of the last nonlinear run
  std::vector<PicardRow> history;
  bool converged = false;
  std::string status;  // "converged", "max_outer", "cfl_violation", "inner_cg_no_converge"
  double data_norm = 0.0;
  bool delta_exceeded = false;
  HumResult last_linear;
};

/// theta0 is the full initial temperature; the loop works with θ̃⁰ = θ⁰ − θ̄⁰.
/// Never throws on non-convergence: the outcome is in `status`.
PicardResult picard_control(const StepKernel& kernel, const VectorField& y0, const ScalarField& theta0,
                            const TrajectoryBar& bar, const WeightBundle& w, const ControlWeights& weights,
                            const DualConfig& dual, const PicardConfig& cfg);

}  // namespace nullctrl
