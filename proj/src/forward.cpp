#include "nullctrl/forward.hpp"

#include <algorithm>
#include <cmath>

#include "nullctrl/errors.hpp"

namespace nullctrl {

namespace {

// Backward-Euler step of the 1D heat equation, Dirichlet via odd ghosts (Thomas algorithm).
std::vector<double> heat_step_1d(const std::vector<double>& rhs, double c) {
  const auto n = rhs.size();
  std::vector<double> diag(n, 1.0 + 2.0 * c), cp(n), dp(n), x(n);
  diag.front() += c;
  diag.back() += c;
  cp[0] = -c / diag[0];
  dp[0] = rhs[0] / diag[0];
  for (std::size_t j = 1; j < n; ++j) {
    const double m = diag[j] + c * cp[j - 1];
    cp[j] = -c / m;
    dp[j] = (rhs[j] + c * dp[j - 1]) / m;
  }
  x[n - 1] = dp[n - 1];
  for (std::size_t j = n - 1; j-- > 0;) x[j] = dp[j] - cp[j] * x[j + 1];
  return x;
}

double upwind(double velocity, double behind, double ahead) {
  return velocity > 0.0 ? velocity * behind : velocity * ahead;
}

}  // namespace

TrajectoryBar solve_trajectory(const ScalarField& theta_bar0, const GridSpec& g) {
  double vmax = 0.0;
  for (double v : theta_bar0.data()) vmax = std::max(vmax, std::abs(v));
  std::vector<double> column(g.ny);
  for (int j = 0; j < g.ny; ++j) column[j] = theta_bar0(0, j);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      if (std::abs(theta_bar0(i, j) - column[j]) > 1e-12 * std::max(1.0, vmax)) {
        throw StructureError(
            "theta_bar0 varies horizontally; grad p_bar = theta_bar e_N forces x_N-only dependence");
      }
    }
  }

  TrajectoryBar bar;
  bar.grid = g;
  bar.theta_bar0 = theta_bar0;
  const double c = g.dt / (g.hy * g.hy);

  std::vector<std::vector<double>> columns;
  columns.push_back(column);
  for (int n = 1; n <= g.nt; ++n) columns.push_back(heat_step_1d(columns.back(), c));

  std::vector<double> previous_grad;
  for (int n = 0; n <= g.nt; ++n) {
    const auto& col = columns[n];
    ScalarField th(g.nx, g.ny);
    ScalarField pb(g.nx, g.ny);
    std::vector<double> pcol(g.ny, 0.0);
    for (int j = 1; j < g.ny; ++j) pcol[j] = pcol[j - 1] + 0.5 * g.hy * (col[j - 1] + col[j]);
    double mean = 0.0;
    for (double v : pcol) mean += v;
    mean /= g.ny;
    for (int j = 0; j < g.ny; ++j) {
      for (int i = 0; i < g.nx; ++i) {
        th(i, j) = col[j];
        pb(i, j) = pcol[j] - mean;
      }
    }
    VectorField grad = vector_zeros(g);
    std::vector<double> gcol(g.ny + 1);
    gcol[0] = 2.0 * col[0] / g.hy;
    gcol[g.ny] = -2.0 * col[g.ny - 1] / g.hy;
    for (int j = 1; j < g.ny; ++j) gcol[j] = (col[j] - col[j - 1]) / g.hy;
    for (int j = 0; j <= g.ny; ++j) {
      for (int i = 0; i < g.nx; ++i) grad.v(i, j) = gcol[j];
    }

    for (int j = 0; j + 3 < g.ny; ++j) {
      const double d3 = (col[j + 3] - 3.0 * col[j + 2] + 3.0 * col[j + 1] - col[j]) / (g.hy * g.hy * g.hy);
      bar.w3_proxy = std::max(bar.w3_proxy, std::abs(d3));
    }
    if (!previous_grad.empty()) {
      for (int j = 0; j <= g.ny; ++j) {
        bar.grad_t_proxy = std::max(bar.grad_t_proxy, std::abs(gcol[j] - previous_grad[j]) / g.dt);
      }
    }
    previous_grad = gcol;

    bar.theta_bar.push_back(std::move(th));
    bar.p_bar.push_back(std::move(pb));
    bar.grad_theta_bar.push_back(std::move(grad));
  }
  return bar;
}

ControlPair zero_controls(const GridSpec& g) {
  ControlPair c;
  c.v0.assign(g.nt, scalar_zeros(g));
  return c;
}

double control_leak_outside(const GridSpec& g, const ControlPair& c, const MaskField& mask) {
  double leak = 0.0;
  for (const auto& v0 : c.v0) {
    for (std::size_t k = 0; k < v0.size(); ++k) {
      if (mask.data()[k] == 0.0) leak = std::max(leak, std::abs(v0.data()[k]));
    }
  }
  if (c.has_velocity_control()) {
    const Array2 fm = face_mask(g, mask, c.j_index);
    for (const auto& vj : c.vj) {
      const Array2& comp = vj.component(c.j_index);
      for (std::size_t k = 0; k < comp.size(); ++k) {
        if (fm.data()[k] == 0.0) leak = std::max(leak, std::abs(comp.data()[k]));
      }
      leak = std::max(leak, max_abs(vj.component(3 - c.j_index)));
    }
  }
  return leak;
}

StepKernel::StepKernel(const GridSpec& g, const MaskField& omega_mask)
    : grid_(g),
      ops_(std::make_shared<FactorizedOperators>(g, g.dt)),
      mask_(omega_mask),
      face_mask_u_(nullctrl::face_mask(g, omega_mask, 1)),
      face_mask_v_(nullctrl::face_mask(g, omega_mask, 2)) {}

ScalarField StepKernel::coupling(const VectorField& y, const Array2& bar_grad) const {
  Array2 vg = y.v;
  for (std::size_t k = 0; k < vg.size(); ++k) vg.data()[k] *= bar_grad.data()[k];
  return vfaces_to_cells(grid_, vg);
}

VectorField StepKernel::coupling_transpose(const ScalarField& psi, const Array2& bar_grad) const {
  VectorField out = vector_zeros(grid_);
  out.v = cells_to_vfaces(grid_, psi);
  for (std::size_t k = 0; k < out.v.size(); ++k) out.v.data()[k] *= bar_grad.data()[k];
  return out;
}

VectorField StepKernel::buoyancy(const ScalarField& theta) const {
  VectorField out = vector_zeros(grid_);
  out.v = cells_to_vfaces(grid_, theta);
  return out;
}

ScalarField StepKernel::buoyancy_transpose(const VectorField& phi) const {
  return vfaces_to_cells(grid_, phi.v);
}

VectorField StepKernel::velocity_forcing(const SourceSeries& src, const ControlPair& ctrl, int k) const {
  VectorField a = src.empty() ? vector_zeros(grid_) : src[k - 1].f;
  if (ctrl.has_velocity_control()) {
    const int j = ctrl.j_index;
    const Array2& m = face_mask(j);
    const Array2& c = ctrl.vj[k - 1].component(j);
    Array2& dst = a.component(j);
    for (std::size_t q = 0; q < dst.size(); ++q) dst.data()[q] += m.data()[q] * c.data()[q];
  }
  return a;
}

ScalarField StepKernel::temperature_forcing(const SourceSeries& src, const ControlPair& ctrl, int k) const {
  ScalarField b = src.empty() ? scalar_zeros(grid_) : src[k - 1].f0;
  if (!ctrl.v0.empty()) {
    const ScalarField& v0 = ctrl.v0[k - 1];
    for (std::size_t q = 0; q < b.size(); ++q) b.data()[q] += mask_.data()[q] * v0.data()[q];
  }
  return b;
}

FlowState StepKernel::step(const FlowState& s, const VectorField& a, const ScalarField& b,
                           const Array2& bar_grad_next) const {
  const double dt = grid_.dt;
  VectorField rhs = s.y;
  axpy(dt, a, rhs);
  axpy(dt, buoyancy(s.theta), rhs);

  FlowState out;
  out.y = ops_->solve_stokes(rhs, &out.p);

  ScalarField trhs = s.theta;
  axpy(dt, b, trhs);
  axpy(-dt, coupling(out.y, bar_grad_next), trhs);
  out.theta = ops_->solve_helmholtz(trhs, ScalarBc::Dirichlet);
  out.t = s.t + dt;
  return out;
}

FlowState initial_state(const GridSpec& g, const VectorField& y0, const ScalarField& theta0) {
  FlowState s;
  s.y = y0;
  s.theta = theta0;
  s.p = scalar_zeros(g);
  s.t = 0.0;
  return s;
}

FlowState step_linear(const StepKernel& kernel, const FlowState& state, const SourceSeries& src,
                      const ControlPair& ctrl, const TrajectoryBar& bar, int k) {
  return kernel.step(state, kernel.velocity_forcing(src, ctrl, k), kernel.temperature_forcing(src, ctrl, k),
                     bar.vertical_gradient(k));
}

std::vector<FlowState> solve_linear(const StepKernel& kernel, const VectorField& y0,
                                    const ScalarField& theta0, const SourceSeries& src,
                                    const ControlPair& ctrl, const TrajectoryBar& bar) {
  const GridSpec& g = kernel.grid();
  std::vector<FlowState> traj;
  traj.reserve(g.nt + 1);
  traj.push_back(initial_state(g, y0, theta0));
  for (int k = 1; k <= g.nt; ++k) traj.push_back(step_linear(kernel, traj.back(), src, ctrl, bar, k));
  return traj;
}

VectorField advect_velocity(const GridSpec& g, const VectorField& y) {
  VectorField out = vector_zeros(g);
  const auto& u = y.u;
  const auto& v = y.v;

  // u-momentum on interior x-faces.
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 1; i < g.nx; ++i) {
      auto fx = [&](int c) {  // through cell c (between x-faces c and c+1)
        const double U = 0.5 * (u(c, j) + u(c + 1, j));
        return upwind(U, u(c, j), u(c + 1, j));
      };
      auto fy = [&](int jf) {  // through the corner at y-face level jf
        if (jf == 0 || jf == g.ny) return 0.0;
        const double V = 0.5 * (v(i - 1, jf) + v(i, jf));
        return upwind(V, u(i, jf - 1), u(i, jf));
      };
      out.u(i, j) = (fx(i) - fx(i - 1)) / g.hx + (fy(j + 1) - fy(j)) / g.hy;
    }
  }
  // v-momentum on interior y-faces.
  for (int j = 1; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      auto fy = [&](int c) {
        const double V = 0.5 * (v(i, c) + v(i, c + 1));
        return upwind(V, v(i, c), v(i, c + 1));
      };
      auto fx = [&](int ifc) {
        if (ifc == 0 || ifc == g.nx) return 0.0;
        const double U = 0.5 * (u(ifc, j - 1) + u(ifc, j));
        return upwind(U, v(ifc - 1, j), v(ifc, j));
      };
      out.v(i, j) = (fy(j) - fy(j - 1)) / g.hy + (fx(i + 1) - fx(i)) / g.hx;
    }
  }
  return out;
}

ScalarField advect_scalar(const GridSpec& g, const VectorField& y, const ScalarField& theta) {
  ScalarField out(g.nx, g.ny);
  auto fx = [&](int i, int j) {
    if (i == 0 || i == g.nx) return 0.0;
    return upwind(y.u(i, j), theta(i - 1, j), theta(i, j));
  };
  auto fy = [&](int i, int j) {
    if (j == 0 || j == g.ny) return 0.0;
    return upwind(y.v(i, j), theta(i, j - 1), theta(i, j));
  };
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      out(i, j) = (fx(i + 1, j) - fx(i, j)) / g.hx + (fy(i, j + 1) - fy(i, j)) / g.hy;
    }
  }
  return out;
}

SourcePair nonlinear_sources(const GridSpec& g, const FlowState& s) {
  SourcePair out{advect_velocity(g, s.y), advect_scalar(g, s.y, s.theta)};
  scale(-1.0, out.f);
  scale(-1.0, out.f0);
  return out;
}

FlowState step_nonlinear(const StepKernel& kernel, const FlowState& state, const ControlPair& ctrl,
                         const TrajectoryBar& bar, int k) {
  const GridSpec& g = kernel.grid();
  const double cfl = max_abs(state.y) * g.dt / std::min(g.hx, g.hy);
  if (cfl > 1.0) {
    throw CflViolation("explicit advection CFL number " + std::to_string(cfl) + " exceeds 1 at step " +
                       std::to_string(k));
  }
  const SourceSeries lagged{nonlinear_sources(g, state)};
  // The lagged series holds a single entry; read it as step 1.
  VectorField a = kernel.velocity_forcing({}, ctrl, k);
  axpy(1.0, lagged[0].f, a);
  ScalarField b = kernel.temperature_forcing({}, ctrl, k);
  axpy(1.0, lagged[0].f0, b);
  return kernel.step(state, a, b, bar.vertical_gradient(k));
}

std::vector<FlowState> solve_nonlinear(const StepKernel& kernel, const VectorField& y0,
                                       const ScalarField& theta0, const ControlPair& ctrl,
                                       const TrajectoryBar& bar) {
  const GridSpec& g = kernel.grid();
  std::vector<FlowState> traj;
  traj.reserve(g.nt + 1);
  traj.push_back(initial_state(g, y0, theta0));
  for (int k = 1; k <= g.nt; ++k) traj.push_back(step_nonlinear(kernel, traj.back(), ctrl, bar, k));
  return traj;
}

std::vector<ScalarField> solve_heat_neumann(const FactorizedOperators& ops, const ScalarField& theta0,
                                            const VectorField& y, int steps) {
  const GridSpec& g = ops.grid();
  const double dt = ops.coefficient();
  std::vector<ScalarField> out;
  out.reserve(steps + 1);
  out.push_back(theta0);
  for (int n = 0; n < steps; ++n) {
    ScalarField rhs = out.back();
    axpy(-dt, advect_scalar(g, y, out.back()), rhs);
    out.push_back(ops.solve_helmholtz(rhs, ScalarBc::Neumann));
  }
  return out;
}

double state_norm(const GridSpec& g, const FlowState& s) {
  return std::sqrt(inner(g, s.y, s.y) + inner(g, s.theta, s.theta));
}

double trajectory_norm(const GridSpec& g, const std::vector<FlowState>& a) {
  double s = 0.0;
  for (const auto& st : a) s += inner(g, st.y, st.y) + inner(g, st.theta, st.theta);
  return std::sqrt(s * g.dt);
}

double trajectory_distance(const GridSpec& g, const std::vector<FlowState>& a,
                           const std::vector<FlowState>& b) {
  double s = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) {
    VectorField dy = a[n].y;
    axpy(-1.0, b[n].y, dy);
    ScalarField dth = a[n].theta;
    axpy(-1.0, b[n].theta, dth);
    s += inner(g, dy, dy) + inner(g, dth, dth);
  }
  return std::sqrt(s * g.dt);
}

}  // namespace nullctrl
