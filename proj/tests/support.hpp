#pragma once

// Shared fixtures for the unit tests and the acceptance runner.

#include <cmath>
#include <numbers>
#include <random>

#include "nullctrl/discretization.hpp"
#include "nullctrl/forward.hpp"
#include "nullctrl/hum.hpp"
#include "nullctrl/weights.hpp"

namespace testing {

using namespace nullctrl;

inline constexpr double kPi = std::numbers::pi;

inline ScalarField random_scalar(const GridSpec& g, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  ScalarField f(g.nx, g.ny);
  for (auto& v : f.data()) v = nd(rng);
  return f;
}

/// Random face field with zero wall faces.
inline VectorField random_vector(const GridSpec& g, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  VectorField u = vector_zeros(g);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 1; i < g.nx; ++i) u.u(i, j) = nd(rng);
  }
  for (int j = 1; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) u.v(i, j) = nd(rng);
  }
  return u;
}

template <class F>
ScalarField cell_field(const GridSpec& g, F f) {
  ScalarField a(g.nx, g.ny);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) a(i, j) = f(g.xc(i), g.yc(j));
  }
  return a;
}

template <class FU, class FV>
VectorField face_field(const GridSpec& g, FU fu, FV fv) {
  VectorField u = vector_zeros(g);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i <= g.nx; ++i) u.u(i, j) = fu(g.xf(i), g.yc(j));
  }
  for (int j = 0; j <= g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) u.v(i, j) = fv(g.xc(i), g.yf(j));
  }
  return u;
}

inline ScalarField vertical_sine(const GridSpec& g, double amplitude = 1.0) {
  return cell_field(g, [&](double, double y) { return amplitude * std::sin(kPi * y / g.ly); });
}

inline ScalarField sine_bump(const GridSpec& g, double amplitude = 1.0) {
  return cell_field(g, [&](double x, double y) {
    return amplitude * std::sin(kPi * x / g.lx) * std::sin(kPi * y / g.ly);
  });
}

inline DomainSpec default_domain() { return DomainSpec{}; }

inline WeightBundle default_weights(const GridSpec& g, double s = 2.0, double lambda = 1.5) {
  const DomainSpec d = default_domain();
  const NodeGrid nodes = NodeGrid::make(d, {g.nx, g.ny, 1});
  return build_weights(build_eta(d, nodes), build_time_profile(g.T, g.nt), s, lambda);
}

inline StepKernel default_kernel(const GridSpec& g) {
  return StepKernel(g, make_mask(g, default_domain().omega));
}

inline double rel(double a, double b) {
  const double s = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / s;
}

inline double max_abs_diff(const Array2& a, const Array2& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a.data()[k] - b.data()[k]));
  return m;
}

inline double max_abs_diff(const VectorField& a, const VectorField& b) {
  return std::max(max_abs_diff(a.u, b.u), max_abs_diff(a.v, b.v));
}

}  // namespace testing
