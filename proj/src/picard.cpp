#include "nullctrl/picard.hpp"

#include <cmath>

#include "nullctrl/errors.hpp"

namespace nullctrl {

PicardResult picard_control(const StepKernel& kernel, const VectorField& y0, const ScalarField& theta0,
                            const TrajectoryBar& bar, const WeightBundle& w, const ControlWeights& weights,
                            const DualConfig& dual, const PicardConfig& cfg) {
  if (!(cfg.delta >= 0.0)) throw ValidationError("picard.delta must be nonnegative");
  if (!(cfg.outer_tol > 0.0)) throw ValidationError("picard.outer_tol must be positive");
  if (cfg.max_outer < 1) throw ValidationError("picard.max_outer must be at least 1");

  const GridSpec& g = kernel.grid();
  const ControlWeights cw = weights.calibrated ? weights : calibrate_gramian(kernel, bar, weights);

  ControlData data{y0, theta0, {}};
  axpy(-1.0, bar.theta_bar0, data.theta0);

  PicardResult res;
  res.data_norm = std::sqrt(inner(g, data.y0, data.y0) + inner(g, data.theta0, data.theta0));
  res.delta_exceeded = res.data_norm > cfg.delta * (1.0 + 1e-12);

  std::vector<FlowState> previous(g.nt + 1, initial_state(g, vector_zeros(g), scalar_zeros(g)));
  const TerminalPair* warm = nullptr;
  res.status = "max_outer";

  for (int k = 0; k < cfg.max_outer; ++k) {
    PicardRow row;
    row.outer_iter = k;
    DualConfig dk = dual;
    if (cfg.geometric_epsilon) dk.epsilon = dual.epsilon * std::ldexp(1.0, -k);
    row.epsilon = dk.epsilon;

    data.src.clear();
    if (k > 0) {
      data.src.reserve(g.nt);
      for (int step = 1; step <= g.nt; ++step) data.src.push_back(nonlinear_sources(g, previous[step - 1]));
    }

    HumResult lin = hum_solve(kernel, data, bar, w, cw, dk, warm);
    row.terminal_norm_linear = lin.terminal_norm;
    row.cg_iters = lin.cg_iters;
    row.f_norm_weighted = lin.e_norm.log_norm("f_residual");
    row.f0_norm_weighted = lin.e_norm.log_norm("f0_residual");

    std::vector<FlowState> traj;
    try {
      traj = solve_nonlinear(kernel, data.y0, data.theta0, lin.controls, bar);
    } catch (const CflViolation&) {
      res.history.push_back(row);
      res.status = "cfl_violation";
      res.controls = lin.controls;
      res.last_linear = std::move(lin);
      res.trajectory = std::move(previous);
      return res;
    }
    row.terminal_norm_nonlinear = state_norm(g, traj.back());
    const double num = trajectory_distance(g, traj, previous);
    const double den = trajectory_norm(g, traj);
    row.diff = num == 0.0 ? 0.0 : num / den;
    res.history.push_back(row);

    const bool inner_ok = lin.converged;
    res.controls = lin.controls;
    res.last_linear = std::move(lin);
    warm = &res.last_linear.x;
    previous = std::move(traj);

    if (!inner_ok) {
      res.status = "inner_cg_no_converge";
      break;
    }
    if (row.diff <= cfg.outer_tol) {
      res.converged = true;
      res.status = "converged";
      break;
    }
  }
  res.trajectory = std::move(previous);
  return res;
}

}  // namespace nullctrl
