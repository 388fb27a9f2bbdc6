#include <doctest.h>

#include "nullctrl/errors.hpp"
#include "nullctrl/verify.hpp"
#include "support.hpp"

using namespace nullctrl;
using namespace testing;

namespace {

double bar_oracle_error(int n, int nt) {
  const GridSpec g = GridSpec::make(n, n, 1.0, 1.0, nt, 0.25);
  const TrajectoryBar bar = solve_trajectory(vertical_sine(g), g);
  const ScalarField exact = cell_field(g, [&](double, double y) {
    return std::exp(-kPi * kPi * g.T) * std::sin(kPi * y);
  });
  return max_abs_diff(bar.theta_bar.back(), exact);
}

// Manufactured solution: streamfunction e^{-t} sin²(πx) sin²(πy), θ = cos t sin(πx) sin(πy),
// target θ̄ = e^{-π²t} sin(πy).
struct Manufactured {
  static double S(double x) { return std::pow(std::sin(kPi * x), 2); }
  static double S1(double x) { return kPi * std::sin(2 * kPi * x); }
  static double S2(double x) { return 2 * kPi * kPi * std::cos(2 * kPi * x); }
  static double S3(double x) { return -4 * kPi * kPi * kPi * std::sin(2 * kPi * x); }

  static double u(double x, double y, double t) { return std::exp(-t) * S(x) * S1(y); }
  static double v(double x, double y, double t) { return -std::exp(-t) * S1(x) * S(y); }
  static double theta(double x, double y, double t) {
    return std::cos(t) * std::sin(kPi * x) * std::sin(kPi * y);
  }
  static double fu(double x, double y, double t) {
    return -u(x, y, t) - std::exp(-t) * (S2(x) * S1(y) + S(x) * S3(y));
  }
  static double fv(double x, double y, double t) {
    return -v(x, y, t) + std::exp(-t) * (S3(x) * S(y) + S1(x) * S2(y)) - theta(x, y, t);
  }
  static double f0(double x, double y, double t) {
    const double bar_dy = kPi * std::exp(-kPi * kPi * t) * std::cos(kPi * y);
    return (-std::sin(t) + 2 * kPi * kPi * std::cos(t)) * std::sin(kPi * x) * std::sin(kPi * y) +
           v(x, y, t) * bar_dy;
  }
};

double mms_error(int n, int nt) {
  const GridSpec g = GridSpec::make(n, n, 1.0, 1.0, nt, 0.25);
  const StepKernel kernel = default_kernel(g);
  const TrajectoryBar bar = solve_trajectory(vertical_sine(g), g);
  SourceSeries src;
  for (int k = 1; k <= g.nt; ++k) {
    const double t = g.time(k);
    src.push_back(SourcePair{
        face_field(g, [t](double x, double y) { return Manufactured::fu(x, y, t); },
                   [t](double x, double y) { return Manufactured::fv(x, y, t); }),
        cell_field(g, [t](double x, double y) { return Manufactured::f0(x, y, t); })});
  }
  const VectorField y0 = curl_of_streamfunction(
      g, [](double x, double y) { return Manufactured::S(x) * Manufactured::S(y); });
  const ScalarField th0 = cell_field(g, [](double x, double y) { return Manufactured::theta(x, y, 0.0); });
  const auto traj = solve_linear(kernel, y0, th0, src, zero_controls(g), bar);

  const double T = g.T;
  const VectorField ye = face_field(g, [T](double x, double y) { return Manufactured::u(x, y, T); },
                                    [T](double x, double y) { return Manufactured::v(x, y, T); });
  const ScalarField te = cell_field(g, [T](double x, double y) { return Manufactured::theta(x, y, T); });
  return std::max(max_abs_diff(traj.back().y, ye), max_abs_diff(traj.back().theta, te));
}

}  // namespace

TEST_CASE("target trajectory follows the heat-equation oracle") {
  const double coarse = bar_oracle_error(16, 64);
  const double fine = bar_oracle_error(32, 256);
  CHECK(coarse < 2e-2);
  CHECK(coarse / fine >= 3.0);  // second order in space with dt ∝ h²
}

TEST_CASE("target pressure is hydrostatic and mean-zero") {
  const GridSpec g = GridSpec::make(16, 16, 1.0, 1.0, 16, 1.0);
  const TrajectoryBar bar = solve_trajectory(vertical_sine(g, 2.0), g);
  for (int n : {0, 5, 16}) {
    CHECK(std::abs(sum(bar.p_bar[n])) <= 1e-12 * g.nx * g.ny);
    const VectorField gp = gradient(g, bar.p_bar[n]);
    const Array2 bt = cells_to_vfaces(g, bar.theta_bar[n]);
    double res = 0.0;
    for (int j = 1; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) res = std::max(res, std::abs(gp.v(i, j) - bt(i, j)));
    CHECK(res <= 1e-12);
    CHECK(max_abs(gp.u) == 0.0);
  }
  CHECK(bar.w3_proxy > 0.0);
  CHECK(bar.grad_t_proxy > 0.0);
}

TEST_CASE("target trajectory rejects horizontal variation and handles zero input") {
  const GridSpec g = GridSpec::make(8, 8, 1.0, 1.0, 8, 1.0);
  CHECK_THROWS_AS(solve_trajectory(sine_bump(g), g), StructureError);
  const TrajectoryBar zero = solve_trajectory(scalar_zeros(g), g);
  for (const auto& th : zero.theta_bar) CHECK(max_abs(th) == 0.0);
  CHECK(zero.w3_proxy == 0.0);
}

TEST_CASE("a vertical temperature profile is balanced by pressure and drives no flow") {
  // Only the first step: the side walls then make the temperature vary horizontally.
  const GridSpec g = GridSpec::make(16, 16, 1.0, 1.0, 16, 1.0);
  const StepKernel kernel = default_kernel(g);
  const TrajectoryBar bar = solve_trajectory(scalar_zeros(g), g);
  const FlowState s0 = initial_state(g, vector_zeros(g), vertical_sine(g));
  const FlowState s1 = step_linear(kernel, s0, {}, zero_controls(g), bar, 1);
  CHECK(max_abs(s1.y) <= 1e-12);
  const FlowState s2 = step_linear(kernel, s1, {}, zero_controls(g), bar, 2);
  CHECK(max_abs(s2.y) > 1e-8);
}

TEST_CASE("linear solves superpose") {
  const GridSpec g = GridSpec::make(12, 12, 1.0, 1.0, 10, 0.5);
  const StepKernel kernel = default_kernel(g);
  const TrajectoryBar bar = solve_trajectory(vertical_sine(g), g);
  std::mt19937_64 rng(17);
  const VectorField ya = project(g, random_vector(g, rng)).field;
  const ScalarField ta = random_scalar(g, rng);
  const ScalarField tb = random_scalar(g, rng);
  ControlPair ctrl = zero_controls(g);
  for (auto& v0 : ctrl.v0) v0 = random_scalar(g, rng);

  const auto a = solve_linear(kernel, ya, ta, {}, zero_controls(g), bar);
  const auto b = solve_linear(kernel, vector_zeros(g), tb, {}, ctrl, bar);
  ScalarField tab = ta;
  axpy(1.0, tb, tab);
  const auto ab = solve_linear(kernel, ya, tab, {}, ctrl, bar);
  for (int n = 0; n <= g.nt; ++n) {
    VectorField y = a[n].y;
    axpy(1.0, b[n].y, y);
    ScalarField th = a[n].theta;
    axpy(1.0, b[n].theta, th);
    CHECK(max_abs_diff(y, ab[n].y) <= 1e-10 * std::max(1.0, max_abs(y)));
    CHECK(max_abs_diff(th, ab[n].theta) <= 1e-10 * std::max(1.0, max_abs(th)));
  }
}

TEST_CASE("manufactured solution converges when h and dt are halved together") {
  const double e1 = mms_error(16, 16);
  const double e2 = mms_error(32, 32);
  const double e3 = mms_error(64, 64);
  CHECK(e1 < 0.2);
  CHECK(e1 / e2 >= 1.7);
  CHECK(e2 / e3 >= 1.7);
}

TEST_CASE("velocity stays discretely divergence-free") {
  const GridSpec g = GridSpec::make(16, 16, 1.0, 1.0, 16, 1.0);
  const StepKernel kernel = default_kernel(g);
  const TrajectoryBar bar = solve_trajectory(vertical_sine(g), g);
  std::mt19937_64 rng(23);
  const auto traj = solve_linear(kernel, vector_zeros(g), random_scalar(g, rng), {}, zero_controls(g), bar);
  for (const auto& s : traj) CHECK(max_abs(divergence(g, s.y)) <= 1e-9);
  const auto nl = solve_nonlinear(kernel, vector_zeros(g), sine_bump(g, 0.1), zero_controls(g), bar);
  for (const auto& s : nl) CHECK(max_abs(divergence(g, s.y)) <= 1e-9);
}

TEST_CASE("upwind advection is first order and conservative") {
  auto derivative_error = [](int n) {
    const GridSpec g = GridSpec::make(n, n, 1.0, 1.0, 8, 1.0);
    VectorField y = vector_zeros(g);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 1; i < g.nx; ++i) y.u(i, j) = 1.0;
    const ScalarField th = cell_field(g, [](double x, double z) { return std::sin(2 * kPi * x) * z; });
    const ScalarField a = advect_scalar(g, y, th);
    double err = 0.0;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 1; i < g.nx - 1; ++i)
        err = std::max(err, std::abs(a(i, j) - 2 * kPi * std::cos(2 * kPi * g.xc(i)) * g.yc(j)));
    return err;
  };
  CHECK(derivative_error(32) / derivative_error(64) >= 1.8);

  const GridSpec g = GridSpec::make(16, 16, 1.0, 1.0, 8, 1.0);
  const VectorField y = curl_of_streamfunction(g, [](double x, double z) {
    return std::pow(std::sin(kPi * x) * std::sin(kPi * z), 2);
  });
  std::mt19937_64 rng(29);
  CHECK(std::abs(sum(advect_scalar(g, y, random_scalar(g, rng)))) <= 1e-11);
}

TEST_CASE("nonlinear solver: zero stays zero, large flow violates CFL") {
  const GridSpec g = GridSpec::make(8, 8, 1.0, 1.0, 8, 1.0);
  const StepKernel kernel = default_kernel(g);
  const TrajectoryBar bar = solve_trajectory(vertical_sine(g), g);
  const auto zero = solve_nonlinear(kernel, vector_zeros(g), scalar_zeros(g), zero_controls(g), bar);
  for (const auto& s : zero) {
    CHECK(max_abs(s.y) == 0.0);
    CHECK(max_abs(s.theta) == 0.0);
  }
  VectorField fast = curl_of_streamfunction(g, [](double x, double z) {
    return 100.0 * std::pow(std::sin(kPi * x) * std::sin(kPi * z), 2);
  });
  CHECK_THROWS_AS(solve_nonlinear(kernel, fast, scalar_zeros(g), zero_controls(g), bar), CflViolation);
}

TEST_CASE("Neumann temperature keeps constants and conserves mass") {
  const GridSpec g = GridSpec::make(16, 16, 1.0, 1.0, 8, 1.0);
  const FactorizedOperators ops(g, 1e-3);
  const VectorField y = curl_of_streamfunction(g, [](double x, double z) {
    return 0.1 * std::pow(std::sin(kPi * x) * std::sin(kPi * z), 2);
  });
  const auto ones = solve_heat_neumann(ops, ScalarField(g.nx, g.ny, 1.0), y, 50);
  CHECK(max_abs_diff(ones.back(), ScalarField(g.nx, g.ny, 1.0)) <= 1e-12);

  std::mt19937_64 rng(31);
  const ScalarField th0 = random_scalar(g, rng);
  const auto run = solve_heat_neumann(ops, th0, y, 200);
  CHECK(std::abs(discrete_mass(g, run.back()) - discrete_mass(g, th0)) <= 1e-12);
}
