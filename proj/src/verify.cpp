#include "nullctrl/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "nullctrl/errors.hpp"
#include "nullctrl/parallel.hpp"

namespace nullctrl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SineSeries draw_series(std::mt19937_64& rng, int modes) {
  std::normal_distribution<double> nd(0.0, 1.0);
  SineSeries s;
  s.modes = modes;
  s.coeff.resize(static_cast<std::size_t>(modes) * modes);
  for (auto& c : s.coeff) c = nd(rng);
  return s;
}

template <class Position>
void sample(Array2& a, const SineSeries& s, const GridSpec& g, Position pos) {
  for (int j = 0; j < a.ny(); ++j) {
    for (int i = 0; i < a.nx(); ++i) {
      const auto [x, y] = pos(i, j);
      a(i, j) = s(x, y, g.lx, g.ly);
    }
  }
}

template <class F>
void normalize(const GridSpec& g, F& f) {
  const double n = norm(g, f);
  if (n > 0.0) scale(1.0 / n, f);
}

// Weight exponents relative to the [0,T/2] plateau of the β-family. The α-variant's
// s-powers cancel against the same normalization constant.
struct Exponents {
  double phi, psi, source, obs;
};

Exponents exponents(const WeightBundle& w, int n, bool alpha_family) {
  const double s = w.s;
  const bool infinite = alpha_family ? w.alpha_infinite[n] : w.beta_infinite[n];
  if (infinite) return {-kInf, -kInf, -kInf, -kInf};
  const double star = alpha_family ? w.alpha_star[n] : w.beta_star[n];
  const double hat = alpha_family ? w.alpha_hat[n] : w.beta_hat[n];
  const double lstar = std::log(alpha_family ? w.xi_star[n] : w.gamma_star[n]);
  const double lhat = std::log(alpha_family ? w.xi_hat[n] : w.gamma_hat[n]);
  const double b0s = w.beta_star[0];
  const double b0h = w.beta_hat[0];
  const double l0s = std::log(w.gamma_star[0]);
  const double l0h = std::log(w.gamma_hat[0]);
  return {
      -5.0 * s * (star - b0s) + 4.0 * (lstar - l0s),
      -5.0 * s * (star - b0s) + 5.0 * (lstar - l0s),
      -3.0 * s * (star - b0s),
      -4.0 * s * (hat - b0h) - s * (star - b0s) + 12.25 * (lhat - l0h),
  };
}

double weight(double exponent) { return exponent == -kInf ? 0.0 : std::exp(exponent); }

}  // namespace

double SineSeries::operator()(double x, double y, double lx, double ly) const {
  const double pi = std::numbers::pi;
  double v = 0.0;
  for (int b = 0; b < modes; ++b) {
    const double sy = std::sin((b + 1) * pi * y / ly);
    for (int a = 0; a < modes; ++a) {
      v += coeff[a + static_cast<std::size_t>(modes) * b] * std::sin((a + 1) * pi * x / lx) * sy;
    }
  }
  return v;
}

CarlemanData carleman_data(const GridSpec& g, std::uint64_t seed, int modes) {
  std::mt19937_64 rng(seed);
  const SineSeries pu = draw_series(rng, modes);
  const SineSeries pv = draw_series(rng, modes);
  const SineSeries ps = draw_series(rng, modes);
  const SineSeries gu = draw_series(rng, modes);
  const SineSeries gv = draw_series(rng, modes);
  const SineSeries g0 = draw_series(rng, modes);

  auto ufaces = [&](int i, int j) { return std::pair{g.xf(i), g.yc(j)}; };
  auto vfaces = [&](int i, int j) { return std::pair{g.xc(i), g.yf(j)}; };
  auto cells = [&](int i, int j) { return std::pair{g.xc(i), g.yc(j)}; };

  CarlemanData d{vector_zeros(g), scalar_zeros(g), vector_zeros(g), scalar_zeros(g)};
  sample(d.phiT.u, pu, g, ufaces);
  sample(d.phiT.v, pv, g, vfaces);
  d.phiT = project(g, d.phiT).field;
  sample(d.psiT, ps, g, cells);
  sample(d.g.u, gu, g, ufaces);
  sample(d.g.v, gv, g, vfaces);
  sample(d.g0, g0, g, cells);
  normalize(g, d.phiT);
  normalize(g, d.psiT);
  normalize(g, d.g);
  normalize(g, d.g0);
  return d;
}

CarlemanSample carleman_evaluate(const StepKernel& kernel, const TrajectoryBar& bar, const WeightBundle& w,
                                 const CarlemanData& data, bool use_alpha_family) {
  const GridSpec& g = kernel.grid();
  if (w.nt() != g.nt) throw ValidationError("weight bundle and grid disagree on nt");
  const SourceSeries src(g.nt, SourcePair{data.g, data.g0});
  const auto adj = solve_adjoint(kernel, data.phiT, data.psiT, src, bar);
  const MaskField& m = kernel.mask();
  const double gg = inner(g, data.g, data.g) + inner(g, data.g0, data.g0);

  double lhs = 0.0, rhs = 0.0;
  for (int n = 0; n < g.nt; ++n) {
    const Exponents e = exponents(w, n, use_alpha_family);
    const AdjointState& st = adj.levels[n];
    ScalarField local = st.psi;
    for (std::size_t q = 0; q < local.size(); ++q) local.data()[q] *= m.data()[q];
    lhs += g.dt * (weight(e.phi) * inner(g, st.phi, st.phi) + weight(e.psi) * inner(g, st.psi, st.psi));
    rhs += g.dt * (weight(e.source) * gg + weight(e.obs) * inner(g, local, local));
  }
  if (!use_alpha_family) {
    const AdjointState& s0 = adj.levels[0];
    lhs += inner(g, s0.phi, s0.phi) + inner(g, s0.psi, s0.psi);
  }

  CarlemanSample out;
  out.lhs = lhs;
  out.rhs = rhs;
  if (rhs > 0.0) {
    out.ratio = lhs / rhs;
  } else {
    out.ratio = lhs > 0.0 ? kInf : 0.0;
  }
  return out;
}

CarlemanReport carleman_ratio(const StepKernel& kernel, const TrajectoryBar& bar, const WeightBundle& w,
                              const CarlemanConfig& cfg) {
  if (cfg.samples < 1) throw ValidationError("carleman ratio needs at least one sample");
  const GridSpec& g = kernel.grid();
  CarlemanReport rep;
  rep.s = w.s;
  rep.lambda = w.lambda;
  rep.nx = g.nx;
  rep.ny = g.ny;
  rep.samples = parallel_map<CarlemanSample>(cfg.samples, cfg.threads, [&](int i) {
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(i);
    CarlemanSample s = carleman_evaluate(kernel, bar, w, carleman_data(g, seed, cfg.modes), cfg.use_alpha_family);
    s.seed = seed;
    return s;
  });

  std::vector<double> ratios;
  for (const auto& s : rep.samples) {
    ratios.push_back(s.ratio);
    if (!std::isfinite(s.ratio)) rep.all_finite = false;
  }
  std::sort(ratios.begin(), ratios.end());
  rep.max_ratio = ratios.back();
  const std::size_t n = ratios.size();
  rep.median_ratio = n % 2 ? ratios[n / 2] : 0.5 * (ratios[n / 2 - 1] + ratios[n / 2]);
  return rep;
}

double discrete_mass(const GridSpec& g, const ScalarField& f) { return sum(f) * g.cell_volume(); }

double discrete_l1(const GridSpec& g, const ScalarField& f) {
  double s = 0.0;
  for (double v : f.data()) s += std::abs(v);
  return s * g.cell_volume();
}

NeumannReport neumann_obstruction(const FactorizedOperators& ops, const ScalarField& theta0,
                                  const VectorField& y, int steps) {
  if (steps < 1) throw ValidationError("neumann run needs at least one step");
  const GridSpec& g = ops.grid();
  const auto levels = solve_heat_neumann(ops, theta0, y, steps);

  NeumannReport r;
  r.steps = steps;
  r.mass_initial = discrete_mass(g, theta0);
  for (const auto& th : levels) {
    const double m = discrete_mass(g, th);
    r.mass_history.push_back(m);
    r.max_drift = std::max(r.max_drift, std::abs(m - r.mass_initial));
  }
  r.mass_final = r.mass_history.back();
  r.l1_final = discrete_l1(g, levels.back());
  r.lower_bound = std::abs(r.mass_initial);
  r.obstruction = r.lower_bound > 1e-12 * std::max(1.0, discrete_l1(g, theta0));
  r.statement = r.obstruction
                    ? "mass is conserved, so theta(T) cannot vanish: ||theta(T)||_L1 >= |mass(0)|"
                    : "initial mass is zero: conservation implies no obstruction";
  return r;
}

}  // namespace nullctrl
