#include "nullctrl/adjoint.hpp"

#include <cmath>

namespace nullctrl {

void adjoint_step(const StepKernel& kernel, const VectorField& phi, const ScalarField& psi,
                  const Array2& bar_grad, const AdjointOptions& opt, VectorField& phi_hat,
                  ScalarField& psi_hat, ScalarField* pi) {
  const auto& ops = kernel.ops();
  const double dt = kernel.grid().dt;
  psi_hat = ops.solve_helmholtz(psi, ScalarBc::Dirichlet);

  VectorField rhs = phi;
  if (!opt.omit_bar_coupling) axpy(-dt, kernel.coupling_transpose(psi_hat, bar_grad), rhs);
  phi_hat = ops.solve_stokes(rhs, pi);
}

AdjointTrajectory solve_adjoint(const StepKernel& kernel, const VectorField& phiT, const ScalarField& psiT,
                                const SourceSeries& g, const TrajectoryBar& bar, const AdjointOptions& opt) {
  const GridSpec& grid = kernel.grid();
  const double dt = grid.dt;
  const int nt = grid.nt;

  AdjointTrajectory out;
  out.levels.resize(nt + 1);
  out.phi_hat.resize(nt);
  out.psi_hat.resize(nt);
  out.levels[nt] = AdjointState{kernel.ops().project(phiT), scalar_zeros(grid), psiT, grid.T};

  for (int k = nt; k >= 1; --k) {
    const AdjointState& next = out.levels[k];
    AdjointState& prev = out.levels[k - 1];
    adjoint_step(kernel, next.phi, next.psi, bar.vertical_gradient(k), opt, out.phi_hat[k - 1],
                 out.psi_hat[k - 1], &prev.pi);
    prev.phi = out.phi_hat[k - 1];
    prev.psi = out.psi_hat[k - 1];
    axpy(dt, kernel.buoyancy_transpose(out.phi_hat[k - 1]), prev.psi);
    if (!g.empty()) {
      axpy(dt, kernel.ops().project(g[k - 1].f), prev.phi);
      axpy(dt, g[k - 1].f0, prev.psi);
    }
    prev.t = grid.time(k - 1);
  }
  return out;
}

DualityGap duality_gap(const StepKernel& kernel, const VectorField& y0, const ScalarField& theta0,
                       const SourceSeries& src, const ControlPair& ctrl, const VectorField& phiT,
                       const ScalarField& psiT, const SourceSeries& g, const TrajectoryBar& bar,
                       const AdjointOptions& opt) {
  const GridSpec& grid = kernel.grid();
  const double dt = grid.dt;
  const auto fwd = solve_linear(kernel, y0, theta0, src, ctrl, bar);
  const auto adj = solve_adjoint(kernel, phiT, psiT, g, bar, opt);

  std::vector<double> terms;
  const VectorField phiT_proj = adj.levels.back().phi;
  const double lhs = inner(grid, fwd.back().y, phiT_proj) + inner(grid, fwd.back().theta, psiT);
  terms.push_back(lhs);
  terms.push_back(inner(grid, y0, adj.levels[0].phi));
  terms.push_back(inner(grid, theta0, adj.levels[0].psi));

  double forcing = 0.0;
  for (int k = 1; k <= grid.nt; ++k) {
    // Sources and masked controls together: exactly what step k consumed.
    forcing += dt * inner(grid, kernel.velocity_forcing(src, ctrl, k), adj.phi_hat[k - 1]);
    forcing += dt * inner(grid, kernel.temperature_forcing(src, ctrl, k), adj.psi_hat[k - 1]);
  }
  terms.push_back(forcing);

  double source = 0.0;
  if (!g.empty()) {
    for (int n = 0; n < grid.nt; ++n) {
      // Level 0 is the raw initial datum; the forward map only sees its projection.
      const VectorField yn = n == 0 ? kernel.ops().project(fwd[0].y) : fwd[n].y;
      source += dt * (inner(grid, g[n].f, yn) + inner(grid, g[n].f0, fwd[n].theta));
    }
  }
  terms.push_back(source);

  DualityGap out;
  out.gap = std::abs(lhs - (terms[1] + terms[2] + forcing - source));
  for (double t : terms) out.scale += std::abs(t);
  out.relative = out.scale > 0.0 ? out.gap / out.scale : 0.0;
  return out;
}

}  // namespace nullctrl
