#include <doctest.h>

#include "nullctrl/adjoint.hpp"
#include "support.hpp"

using namespace nullctrl;
using namespace testing;

namespace {

SourceSeries random_sources(const GridSpec& g, std::mt19937_64& rng) {
  SourceSeries s;
  for (int k = 0; k < g.nt; ++k) s.push_back({random_vector(g, rng), random_scalar(g, rng)});
  return s;
}

ControlPair random_controls(const GridSpec& g, std::mt19937_64& rng) {
  ControlPair c;
  c.j_index = 1;
  for (int k = 0; k < g.nt; ++k) {
    c.v0.push_back(random_scalar(g, rng));
    c.vj.push_back(random_vector(g, rng));
  }
  return c;
}

DualityGap random_gap(double bar_amplitude, bool with_g, const AdjointOptions& opt = {}) {
  const GridSpec g = GridSpec::make(16, 16, 1.0, 1.0, 32, 1.0);
  const StepKernel kernel = default_kernel(g);
  const TrajectoryBar bar = solve_trajectory(vertical_sine(g, bar_amplitude), g);
  std::mt19937_64 rng(41);
  const VectorField y0 = random_vector(g, rng);
  const ScalarField th0 = random_scalar(g, rng);
  const SourceSeries src = random_sources(g, rng);
  const ControlPair ctrl = random_controls(g, rng);
  const VectorField phiT = random_vector(g, rng);
  const ScalarField psiT = random_scalar(g, rng);
  const SourceSeries gs = with_g ? random_sources(g, rng) : SourceSeries{};
  return duality_gap(kernel, y0, th0, src, ctrl, phiT, psiT, gs, bar, opt);
}

}  // namespace

TEST_CASE("one adjoint step is the transpose of one forward step") {
  const GridSpec g = GridSpec::make(12, 10, 1.0, 1.0, 8, 1.0);
  const StepKernel kernel = default_kernel(g);
  const TrajectoryBar bar = solve_trajectory(vertical_sine(g, 1.5), g);
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 3; ++trial) {
    FlowState s;
    s.y = random_vector(g, rng);
    s.theta = random_scalar(g, rng);
    s.p = scalar_zeros(g);
    const VectorField phi = random_vector(g, rng);
    const ScalarField psi = random_scalar(g, rng);
    const Array2& gr = bar.vertical_gradient(3);

    const FlowState out = kernel.step(s, vector_zeros(g), scalar_zeros(g), gr);
    VectorField phi_hat;
    ScalarField psi_hat;
    adjoint_step(kernel, phi, psi, gr, {}, phi_hat, psi_hat);
    ScalarField psi_prev = psi_hat;
    axpy(g.dt, kernel.buoyancy_transpose(phi_hat), psi_prev);

    const double lhs = inner(g, out.y, phi) + inner(g, out.theta, psi);
    const double rhs = inner(g, s.y, phi_hat) + inner(g, s.theta, psi_prev);
    CHECK(rel(lhs, rhs) <= 1e-12);
  }
}

TEST_CASE("discrete duality identity holds with all sources") {
  const DualityGap with_g = random_gap(1.0, true);
  CHECK(with_g.relative <= 1e-10);
  CHECK(with_g.scale > 0.0);
  CHECK(random_gap(1.0, false).relative <= 1e-10);
}

TEST_CASE("dropping the target coupling breaks duality in proportion to the target") {
  AdjointOptions broken;
  broken.omit_bar_coupling = true;
  CHECK(random_gap(0.0, true, broken).relative <= 1e-10);
  const DualityGap small = random_gap(1e-3, true, broken);
  const DualityGap large = random_gap(1.0, true, broken);
  CHECK(large.relative > 1e-8);  // 100× the tolerance of the intact identity
  CHECK(large.gap == doctest::Approx(1e3 * small.gap).epsilon(0.05));
}

TEST_CASE("without a target the temperature adjoint is a backward heat flow") {
  const GridSpec g = GridSpec::make(12, 12, 1.0, 1.0, 20, 0.5);
  const StepKernel kernel = default_kernel(g);
  const TrajectoryBar bar = solve_trajectory(scalar_zeros(g), g);
  const ScalarField psiT = sine_bump(g);
  const AdjointTrajectory adj = solve_adjoint(kernel, vector_zeros(g), psiT, {}, bar);
  const double mu = 8.0 / (g.hx * g.hx) * std::pow(std::sin(kPi * g.hx / 2), 2);
  ScalarField expect = psiT;
  scale(std::pow(1.0 + g.dt * mu, -g.nt), expect);
  CHECK(max_abs_diff(adj.levels[0].psi, expect) <= 1e-12);
  for (const auto& lv : adj.levels) CHECK(max_abs(lv.phi) == 0.0);
}

TEST_CASE("adjoint solve is linear and keeps phi solenoidal") {
  const GridSpec g = GridSpec::make(10, 10, 1.0, 1.0, 12, 1.0);
  const StepKernel kernel = default_kernel(g);
  const TrajectoryBar bar = solve_trajectory(vertical_sine(g), g);
  std::mt19937_64 rng(47);
  const VectorField pa = random_vector(g, rng), pb = random_vector(g, rng);
  const ScalarField sa = random_scalar(g, rng), sb = random_scalar(g, rng);
  const SourceSeries ga = random_sources(g, rng);

  const auto a = solve_adjoint(kernel, pa, sa, ga, bar);
  const auto b = solve_adjoint(kernel, pb, sb, {}, bar);
  VectorField pab = pa;
  axpy(2.0, pb, pab);
  ScalarField sab = sa;
  axpy(2.0, sb, sab);
  const auto ab = solve_adjoint(kernel, pab, sab, ga, bar);
  for (int n = 0; n <= g.nt; ++n) {
    VectorField phi = a.levels[n].phi;
    axpy(2.0, b.levels[n].phi, phi);
    ScalarField psi = a.levels[n].psi;
    axpy(2.0, b.levels[n].psi, psi);
    CHECK(max_abs_diff(phi, ab.levels[n].phi) <= 1e-10 * std::max(1.0, max_abs(phi)));
    CHECK(max_abs_diff(psi, ab.levels[n].psi) <= 1e-10 * std::max(1.0, max_abs(psi)));
    CHECK(max_abs(divergence(g, ab.levels[n].phi)) <= 1e-9);
  }
}
