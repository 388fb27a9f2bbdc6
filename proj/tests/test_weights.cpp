#include <doctest.h>

#include <cmath>
#include <sstream>

#include "nullctrl/errors.hpp"
#include "support.hpp"

using namespace nullctrl;
using testing::rel;

namespace {

WeightBundle bundle(int n, int nt, double s, double lambda = 1.5) {
  const DomainSpec d;
  return build_weights(build_eta(d, NodeGrid::make(d, {n, n, 1})), build_time_profile(1.0, nt), s, lambda);
}

}  // namespace

TEST_CASE("eta matches the product formula on the unit square") {
  const DomainSpec d;
  const NodeGrid g = NodeGrid::make(d, {8, 8, 1});
  const EtaField eta = build_eta(d, g);
  for (std::size_t k = 0; k < g.node_count(); ++k) {
    const auto x = g.position(k);
    const double expect = 16.0 * x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]);
    CHECK(std::abs(eta.values[k] - expect) <= 1e-15);
  }
  CHECK(eta.sup == 1.0);
  CHECK(eta.grad_min_off_omega0 > 0.0);
}

TEST_CASE("eta is normalized on a non-square box") {
  DomainSpec d;
  d.length = {2.0, 1.0, 1.0};
  d.omega = Box{{0.4, 0.2, 0.0}, {1.6, 0.8, 1.0}};
  d.omega0 = Box{{0.8, 0.4, 0.0}, {1.2, 0.6, 1.0}};
  const NodeGrid g = NodeGrid::make(d, {8, 8, 1});
  const EtaField eta = build_eta(d, g);
  double top = 0.0;
  for (double v : eta.values) top = std::max(top, v);
  CHECK(top == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("eta rejects an omega0 that misses the center") {
  DomainSpec d;
  d.omega0 = Box{{0.55, 0.55, 0.0}, {0.65, 0.65, 1.0}};
  CHECK_THROWS_AS(build_eta(d, NodeGrid::make(d, {8, 8, 1})), AdmissibilityError);
}

TEST_CASE("time profile: plateau value, continuity and endpoint behaviour") {
  const double T = 1.0;
  CHECK(ell(0.5, T) == doctest::Approx(13.0 / 32.0));
  CHECK(ell_sup(T) == doctest::Approx(13.0 / 32.0));
  // Value, slope and curvature match the linear pieces at T/4 and 3T/4.
  const double h = 1e-4;
  for (double t0 : {0.25, 0.75}) {
    const double lin_value = t0 < 0.5 ? t0 : T - t0;
    const double lin_slope = t0 < 0.5 ? 1.0 : -1.0;
    CHECK(ell(t0, T) == doctest::Approx(lin_value).epsilon(1e-12));
    const double slope_in = t0 < 0.5 ? (ell(t0 + h, T) - ell(t0, T)) / h : (ell(t0, T) - ell(t0 - h, T)) / h;
    CHECK(slope_in == doctest::Approx(lin_slope).epsilon(1e-3));
    const double curv = (ell(t0 + h, T) - 2 * ell(t0, T) + ell(t0 - h, T)) / (h * h);
    CHECK(std::abs(curv) < 0.05);  // curvature is continuous (zero on the linear side)
  }
  const TimeProfile p = build_time_profile(T, 64);
  CHECK(p.ell.front() == 0.0);
  CHECK(p.ell.back() == 0.0);
  for (int n = 0; n <= 32; ++n) CHECK(p.ell_tilde[n] == p.ell_max);
  for (int n = 33; n <= 64; ++n) CHECK(p.ell_tilde[n] == p.ell[n]);
  CHECK_THROWS_AS(build_time_profile(T, 4), ValidationError);
}

TEST_CASE("Carleman weight e^{-2s alpha} xi^7 is negligible next to both endpoints") {
  const WeightBundle w = bundle(32, 64, 2.0);
  for (int n : {1, w.nt() - 1}) {
    double worst = -INFINITY;
    for (std::size_t k = 0; k < w.nodes; ++k) {
      worst = std::max(worst, -2.0 * w.s * w.alpha_at(k, n) + 7.0 * std::log(w.xi_at(k, n)));
    }
    CHECK(worst < std::log(1e-30));
  }
}

TEST_CASE("doubling s never increases the exponential control weights") {
  const WeightBundle a = bundle(16, 32, 2.0);
  const WeightBundle b = bundle(16, 32, 4.0);
  for (int n = 1; n < a.nt(); ++n) {
    auto log_w = [&](const WeightBundle& w) {
      return -4.0 * w.s * w.alpha_hat[n] - w.s * w.alpha_star[n] + 12.25 * std::log(w.xi_hat[n]);
    };
    auto log_wj = [&](const WeightBundle& w) {
      return -2.0 * w.s * w.alpha_hat[n] - 3.0 * w.s * w.alpha_star[n] + 7.0 * std::log(w.xi_hat[n]);
    };
    CHECK(log_w(b) <= log_w(a));
    CHECK(log_wj(b) <= log_wj(a));
  }
}

TEST_CASE("beta agrees with alpha after T/2 and is frozen before") {
  const WeightBundle w = bundle(16, 32, 2.0);
  for (int n = 0; n <= w.nt(); ++n) {
    for (std::size_t k = 0; k < w.nodes; k += 7) {
      if (2 * n > w.nt() && n < w.nt()) CHECK(w.beta_at(k, n) == w.alpha_at(k, n));
      if (2 * n <= w.nt()) CHECK(w.beta_at(k, n) == w.beta_at(k, 0));
    }
  }
  CHECK(std::isinf(w.beta_star.back()));
  CHECK(std::isfinite(w.beta_star.front()));
  CHECK(std::isinf(w.alpha_star.front()));
}

TEST_CASE("constant eta collapses the aggregates") {
  const DomainSpec d;
  const NodeGrid g = NodeGrid::make(d, {4, 4, 1});
  const EtaField eta = EtaField::from_values(g, std::vector<double>(g.node_count(), 0.3), 1.0);
  const WeightBundle w = build_weights(eta, build_time_profile(1.0, 16), 2.0, 1.5);
  for (int n = 1; n < 16; ++n) {
    CHECK(rel(w.alpha_star[n], w.alpha_hat[n]) <= 1e-15);
    CHECK(rel(w.alpha_at(0, n), w.alpha_star[n]) <= 1e-15);
    CHECK(rel(w.xi_star[n], w.xi_hat[n]) <= 1e-15);
  }
}

TEST_CASE("aggregates match an independent evaluation of alpha") {
  const WeightBundle w = bundle(8, 16, 2.0, 1.5);
  const DomainSpec d;
  const NodeGrid g = NodeGrid::make(d, {8, 8, 1});
  const int n = 5;
  const double l = ell(n / 16.0, 1.0);
  double amax = -INFINITY, amin = INFINITY;
  for (std::size_t k = 0; k < g.node_count(); ++k) {
    const auto x = g.position(k);
    const double eta = 16.0 * x[0] * (1 - x[0]) * x[1] * (1 - x[1]);
    const double a = (std::exp(3.0) - std::exp(1.5 * eta)) / std::pow(l, 8);
    amax = std::max(amax, a);
    amin = std::min(amin, a);
  }
  CHECK(rel(w.alpha_star[n], amax) <= 1e-12);
  CHECK(rel(w.alpha_hat[n], amin) <= 1e-12);
}

TEST_CASE("default bundle passes every inequality; a corrupted one does not") {
  WeightBundle w = bundle(32, 64, 2.0);
  const WeightReport rep = check_weight_inequalities(w);
  CHECK(rep.checks.size() == 8);
  CHECK(rep.all_passed());
  for (const auto& c : rep.checks) CHECK(c.worst_violation <= kWeightSlack);

  w.alpha_star[10] *= 0.999;
  const WeightReport bad = check_weight_inequalities(w);
  CHECK_FALSE(bad.all_passed());
}

TEST_CASE("invalid parameters are rejected") {
  const DomainSpec d;
  const EtaField eta = build_eta(d, NodeGrid::make(d, {8, 8, 1}));
  const TimeProfile p = build_time_profile(1.0, 16);
  CHECK_THROWS_AS(build_weights(eta, p, 0.5, 1.5), ValidationError);
  CHECK_THROWS_AS(build_weights(eta, p, 2.0, 0.5), ValidationError);
  CHECK_THROWS_AS(build_weights(eta, p, 2.0, 400.0), OverflowError);
}

TEST_CASE("flushed exponential") {
  CHECK(flushed_exp(-1000.0) == 0.0);
  CHECK(flushed_exp(-INFINITY) == 0.0);
  CHECK(flushed_exp(0.0) == 1.0);
}

TEST_CASE("weight CSV has the documented columns and one row per time node") {
  const WeightBundle w = bundle(8, 16, 2.0);
  std::ostringstream os;
  write_weights_csv(os, w);
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  CHECK(header == "t,alpha_star,xi_star,alpha_hat,xi_hat,beta_star,gamma_star,beta_hat,gamma_hat");
  int rows = 0;
  for (std::string line; std::getline(is, line);) ++rows;
  CHECK(rows == 17);
}
