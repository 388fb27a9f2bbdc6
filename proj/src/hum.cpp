#include "nullctrl/hum.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "nullctrl/errors.hpp"

namespace nullctrl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> applied(const std::vector<double>& logs, double offset, double scale) {
  std::vector<double> out(logs.size());
  for (std::size_t n = 0; n < logs.size(); ++n) out[n] = flushed_exp(logs[n] - offset) / scale;
  return out;
}

// Accumulates log Σ e^{x_i} without overflow.
class LogSum {
 public:
  void add(double x) {
    if (x == -kInf) return;
    if (x == kInf || max_ == kInf) {
      max_ = kInf;
      return;
    }
    if (x <= max_) {
      sum_ += std::exp(x - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - x) + 1.0;
      max_ = x;
    }
  }
  double value() const {
    if (max_ == kInf) return kInf;
    if (sum_ == 0.0) return -kInf;
    return max_ + std::log(sum_);
  }

 private:
  double max_ = -kInf;
  double sum_ = 0.0;
};

// log(e^{lw} · sqrt(measure · sq)) squared, i.e. 2 lw + log(measure · sq); −∞ for zero data.
double weighted_log_square(double lw, double sq, double measure) {
  if (!(sq > 0.0)) return -kInf;
  if (lw == kInf) return kInf;
  return 2.0 * lw + std::log(measure * sq);
}

void random_fill(std::mt19937_64& rng, Array2& a) {
  std::normal_distribution<double> nd(0.0, 1.0);
  for (auto& v : a.data()) v = nd(rng);
}

}  // namespace

double ControlWeights::applied_log_w0(int n) const {
  return log_w0[n] - log_w0_offset - std::log(gramian_scale);
}

double ControlWeights::applied_log_wj(int n) const {
  return log_wj[n] - log_wj_offset - std::log(gramian_scale);
}

ControlWeights control_weights(const WeightBundle& w) {
  const int nt = w.nt();
  const double s = w.s;
  ControlWeights cw;
  cw.log_w0.resize(nt + 1);
  cw.log_wj.resize(nt + 1);
  for (int n = 0; n <= nt; ++n) {
    if (w.beta_infinite[n]) {
      cw.log_w0[n] = -kInf;
      cw.log_wj[n] = -kInf;
      continue;
    }
    const double bh = w.beta_hat[n];
    const double bs = w.beta_star[n];
    const double lg = std::log(w.gamma_hat[n]);
    cw.log_w0[n] = -4.0 * s * bh - s * bs + 12.25 * lg;
    cw.log_wj[n] = -2.0 * s * bh - 3.0 * s * bs + 7.0 * lg;
  }
  cw.log_w0_offset = cw.log_w0[0];
  cw.log_wj_offset = cw.log_wj[0];
  cw.w0 = applied(cw.log_w0, cw.log_w0_offset, 1.0);
  cw.wj = applied(cw.log_wj, cw.log_wj_offset, 1.0);
  return cw;
}

ControlWeights calibrate_gramian(const StepKernel& kernel, const TrajectoryBar& bar, ControlWeights cw,
                                 int iterations) {
  const GridSpec& g = kernel.grid();
  cw.gramian_scale = 1.0;
  cw.w0 = applied(cw.log_w0, cw.log_w0_offset, 1.0);
  cw.wj = applied(cw.log_wj, cw.log_wj_offset, 1.0);

  ControlData zero{vector_zeros(g), scalar_zeros(g), {}};
  DualConfig cfg;
  cfg.epsilon = 0.0;
  const DualProblem gram(kernel, bar, cw, zero, cfg);

  std::mt19937_64 rng(0x5eedULL);
  TerminalPair x = terminal_zeros(g);
  random_fill(rng, x.phi.u);
  random_fill(rng, x.phi.v);
  random_fill(rng, x.psi);
  x.phi = kernel.ops().project(x.phi);

  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const double xn = std::sqrt(inner(g, x, x));
    if (xn == 0.0) break;
    TerminalPair y = gram.apply(x);
    const double next = inner(g, x, y) / (xn * xn);
    const double yn = std::sqrt(inner(g, y, y));
    if (yn == 0.0) {
      lambda = 0.0;
      break;
    }
    TerminalPair z = terminal_zeros(g);
    axpy(1.0 / yn, y, z);
    x = std::move(z);
    const bool settled = it > 0 && std::abs(next - lambda) <= 1e-10 * std::abs(next);
    lambda = next;
    if (settled) break;
  }
  if (lambda > 0.0) {
    cw.gramian_scale = lambda;
    cw.w0 = applied(cw.log_w0, cw.log_w0_offset, lambda);
    cw.wj = applied(cw.log_wj, cw.log_wj_offset, lambda);
  }
  cw.calibrated = true;
  return cw;
}

TerminalPair terminal_zeros(const GridSpec& g) { return TerminalPair{vector_zeros(g), scalar_zeros(g)}; }

double inner(const GridSpec& g, const TerminalPair& a, const TerminalPair& b) {
  return inner(g, a.phi, b.phi) + inner(g, a.psi, b.psi);
}

void axpy(double a, const TerminalPair& x, TerminalPair& y) {
  axpy(a, x.phi, y.phi);
  axpy(a, x.psi, y.psi);
}

DualProblem::DualProblem(const StepKernel& kernel, const TrajectoryBar& bar, const ControlWeights& weights,
                         const ControlData& data, const DualConfig& cfg)
    : kernel_(kernel), bar_(bar), weights_(weights), data_(data), cfg_(cfg) {
  if (cfg.observe_velocity && cfg.j_index != 1 && cfg.j_index != 2) {
    throw ValidationError("dual.j_index must be 1 or 2");
  }
}

ControlPair DualProblem::controls(const TerminalPair& x) const {
  AdjointTrajectory adj;
  return controls(x, adj);
}

ControlPair DualProblem::controls(const TerminalPair& x, AdjointTrajectory& adj) const {
  const GridSpec& g = grid();
  adj = solve_adjoint(kernel_, x.phi, x.psi, {}, bar_);
  ControlPair c;
  c.v0.resize(g.nt);
  const MaskField& m = kernel_.mask();
  for (int k = 1; k <= g.nt; ++k) {
    ScalarField v = adj.psi_hat[k - 1];
    const double w = weights_.w0[k];
    for (std::size_t q = 0; q < v.size(); ++q) v.data()[q] *= -w * m.data()[q];
    c.v0[k - 1] = std::move(v);
  }
  if (cfg_.observe_velocity) {
    const int j = cfg_.j_index;
    c.j_index = j;
    c.vj.resize(g.nt);
    const Array2& fm = kernel_.face_mask(j);
    for (int k = 1; k <= g.nt; ++k) {
      VectorField v = vector_zeros(g);
      const Array2& src = adj.phi_hat[k - 1].component(j);
      Array2& dst = v.component(j);
      const double w = weights_.wj[k];
      for (std::size_t q = 0; q < dst.size(); ++q) dst.data()[q] = -w * fm.data()[q] * src.data()[q];
      c.vj[k - 1] = std::move(v);
    }
  }
  return c;
}

std::vector<FlowState> DualProblem::forward(const ControlPair& ctrl) const {
  return solve_linear(kernel_, data_.y0, data_.theta0, data_.src, ctrl, bar_);
}

TerminalPair DualProblem::free_terminal() const {
  const auto traj = solve_linear(kernel_, data_.y0, data_.theta0, data_.src, ControlPair{}, bar_);
  return TerminalPair{traj.back().y, traj.back().theta};
}

TerminalPair DualProblem::apply(const TerminalPair& x) const {
  const GridSpec& g = grid();
  const auto traj = solve_linear(kernel_, vector_zeros(g), scalar_zeros(g), {}, controls(x), bar_);
  TerminalPair out = terminal_zeros(g);
  axpy(cfg_.epsilon, x, out);
  axpy(-1.0, TerminalPair{traj.back().y, traj.back().theta}, out);
  return out;
}

DualProblem::Evaluation DualProblem::evaluate(const TerminalPair& x_raw) const {
  const GridSpec& g = grid();
  TerminalPair x{kernel_.ops().project(x_raw.phi), x_raw.psi};
  AdjointTrajectory adj;
  const ControlPair ctrl = controls(x, adj);

  double obs = 0.0;
  for (int k = 1; k <= g.nt; ++k) {
    obs -= g.dt * inner(g, ctrl.v0[k - 1], adj.psi_hat[k - 1]);
    if (ctrl.has_velocity_control()) obs -= g.dt * inner(g, ctrl.vj[k - 1], adj.phi_hat[k - 1]);
  }
  double pairing = inner(g, data_.y0, adj.levels[0].phi) + inner(g, data_.theta0, adj.levels[0].psi);
  if (!data_.src.empty()) {
    for (int k = 1; k <= g.nt; ++k) {
      pairing += g.dt * (inner(g, data_.src[k - 1].f, adj.phi_hat[k - 1]) +
                         inner(g, data_.src[k - 1].f0, adj.psi_hat[k - 1]));
    }
  }

  Evaluation e;
  e.value = 0.5 * obs + 0.5 * cfg_.epsilon * inner(g, x, x) - pairing;
  const auto traj = forward(ctrl);
  e.gradient = terminal_zeros(g);
  axpy(cfg_.epsilon, x, e.gradient);
  axpy(-1.0, TerminalPair{traj.back().y, traj.back().theta}, e.gradient);
  return e;
}

double ENormReport::log_norm(const std::string& name) const {
  for (const auto& c : components) {
    if (c.name == name) return c.log_norm;
  }
  throw ValidationError("unknown E-norm component " + name);
}

ENormReport e_norm_report(const GridSpec& g, const std::vector<FlowState>& traj, const ControlPair& ctrl,
                          const SourceSeries& src, const WeightBundle& w) {
  const double s = w.s;
  const int nt = g.nt;
  auto bstar = [&](int n) { return w.beta_infinite[n] ? kInf : w.beta_star[n]; };
  auto bhat = [&](int n) { return w.beta_infinite[n] ? kInf : w.beta_hat[n]; };
  auto lgstar = [&](int n) { return w.beta_infinite[n] ? kInf : std::log(w.gamma_star[n]); };
  auto lghat = [&](int n) { return w.beta_infinite[n] ? kInf : std::log(w.gamma_hat[n]); };

  LogSum y_l2, th_l2, y_h2, v0_l2, vj_l2, f_l2, f0_l2;
  double y_h1_max = -kInf;
  for (int n = 0; n < nt; ++n) {
    const FlowState& st = traj[n];
    const double lw = 1.5 * s * bstar(n);
    y_l2.add(weighted_log_square(lw, inner(g, st.y, st.y), g.dt));
    th_l2.add(weighted_log_square(lw, inner(g, st.theta, st.theta), g.dt));
    const VectorField lap = laplacian(g, st.y);
    const double lw2 = lw - 1.125 * lgstar(n);
    y_h2.add(weighted_log_square(lw2, inner(g, st.y, st.y) + inner(g, lap, lap), g.dt));
    const double h1 = inner(g, st.y, st.y) - inner(g, lap, st.y);
    y_h1_max = std::max(y_h1_max, 0.5 * weighted_log_square(lw2, h1, 1.0));
  }
  for (int k = 1; k <= nt; ++k) {
    if (!ctrl.v0.empty()) {
      const double lw = 2.0 * s * bhat(k) + 0.5 * s * bstar(k) - (49.0 / 8.0) * lghat(k);
      v0_l2.add(weighted_log_square(lw, inner(g, ctrl.v0[k - 1], ctrl.v0[k - 1]), g.dt));
    }
    if (ctrl.has_velocity_control()) {
      const double lw = s * bhat(k) + 1.5 * s * bstar(k) - 3.5 * lghat(k);
      const Array2& c = ctrl.vj[k - 1].component(ctrl.j_index);
      vj_l2.add(weighted_log_square(lw, inner(g, c, c), g.dt));
    }
    if (!src.empty()) {
      const double lwf = 2.5 * s * bstar(k - 1) - 2.0 * lgstar(k - 1);
      const double lwf0 = 2.5 * s * bstar(k - 1) - 2.5 * lgstar(k - 1);
      f_l2.add(weighted_log_square(lwf, inner(g, src[k - 1].f, src[k - 1].f), g.dt));
      f0_l2.add(weighted_log_square(lwf0, inner(g, src[k - 1].f0, src[k - 1].f0), g.dt));
    }
  }

  ENormReport r;
  r.components = {
      {"y_L2", 0.5 * y_l2.value()},
      {"theta_L2", 0.5 * th_l2.value()},
      {"vj_L2", 0.5 * vj_l2.value()},
      {"v0_L2", 0.5 * v0_l2.value()},
      {"y_L2H2", 0.5 * y_h2.value()},
      {"y_LinfH1", y_h1_max},
      {"f_residual", 0.5 * f_l2.value()},
      {"f0_residual", 0.5 * f0_l2.value()},
  };
  const double tn = state_norm(g, traj.back());
  r.terminal_weighted_log = tn > 0.0 ? std::log(tn) + 1.5 * s * bstar(nt - 1) : -kInf;
  return r;
}

HumResult hum_solve(const StepKernel& kernel, const ControlData& data, const TrajectoryBar& bar,
                    const WeightBundle& w, const ControlWeights& weights, const DualConfig& cfg,
                    const TerminalPair* warm_start) {
  if (!(cfg.epsilon > 0.0)) throw ValidationError("dual.epsilon must be positive");
  if (!(cfg.cg_tol > 0.0 && cfg.cg_tol < 1.0)) throw ValidationError("dual.cg_tol must lie in (0, 1)");
  if (cfg.cg_max_iters < 1) throw ValidationError("dual.cg_max_iters must be at least 1");
  if (w.nt() != kernel.grid().nt) throw ValidationError("weight bundle and grid disagree on nt");

  const GridSpec& g = kernel.grid();
  const ControlWeights cw = weights.calibrated ? weights : calibrate_gramian(kernel, bar, weights);
  const DualProblem prob(kernel, bar, cw, data, cfg);

  HumResult res;
  res.gramian_scale = cw.gramian_scale;
  const TerminalPair b = prob.free_terminal();
  const double bnorm = std::sqrt(inner(g, b, b));
  res.kkt_scale = bnorm;

  TerminalPair x = terminal_zeros(g);
  TerminalPair r = b;
  if (warm_start) {
    x = TerminalPair{kernel.ops().project(warm_start->phi), warm_start->psi};
    axpy(-1.0, prob.apply(x), r);
  }
  TerminalPair p = r;
  double rr = inner(g, r, r);

  auto dual_value = [&]() { return -0.5 * inner(g, r, x) - 0.5 * inner(g, b, x); };
  res.converged = false;
  int it = 0;
  for (;; ++it) {
    const double rn = std::sqrt(rr);
    res.cg_log.push_back({it, dual_value(), rn});
    if (rn <= cfg.cg_tol * bnorm) {
      res.converged = true;
      break;
    }
    if (it >= cfg.cg_max_iters) break;
    const TerminalPair ap = prob.apply(p);
    const double alpha = rr / inner(g, p, ap);
    axpy(alpha, p, x);
    axpy(-alpha, ap, r);
    const double rr_new = inner(g, r, r);
    const double beta = rr_new / rr;
    rr = rr_new;
    TerminalPair next = r;
    axpy(beta, p, next);
    p = std::move(next);
  }
  res.cg_iters = it;
  res.dual_value = dual_value();

  res.x = x;
  res.controls = prob.controls(x);
  res.trajectory = prob.forward(res.controls);
  res.terminal_norm = state_norm(g, res.trajectory.back());
  TerminalPair kkt = terminal_zeros(g);
  axpy(cfg.epsilon, x, kkt);
  axpy(-1.0, TerminalPair{res.trajectory.back().y, res.trajectory.back().theta}, kkt);
  res.kkt_residual = std::sqrt(inner(g, kkt, kkt));
  res.e_norm = e_norm_report(g, res.trajectory, res.controls, data.src, w);
  return res;
}

}  // namespace nullctrl
