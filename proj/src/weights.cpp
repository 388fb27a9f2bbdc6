#include "nullctrl/weights.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "nullctrl/errors.hpp"

namespace nullctrl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double pow8(double x) {
  const double x2 = x * x;
  const double x4 = x2 * x2;
  return x4 * x4;
}

std::string box_string(const Box& b, int dim) {
  std::ostringstream os;
  for (int d = 0; d < dim; ++d) {
    os << (d ? "x" : "") << "(" << b.lo[d] << "," << b.hi[d] << ")";
  }
  return os.str();
}

}  // namespace

bool Box::contains(const std::array<double, 3>& p, int dim) const {
  for (int d = 0; d < dim; ++d) {
    if (!(p[d] > lo[d] && p[d] < hi[d])) return false;
  }
  return true;
}

bool Box::compactly_inside(const Box& outer, int dim) const {
  for (int d = 0; d < dim; ++d) {
    if (!(lo[d] < hi[d])) return false;
    if (!(lo[d] > outer.lo[d] && hi[d] < outer.hi[d])) return false;
  }
  return true;
}

Box DomainSpec::domain_box() const {
  Box b;
  b.lo = {0.0, 0.0, 0.0};
  b.hi = length;
  return b;
}

std::array<double, 3> DomainSpec::center() const {
  return {0.5 * length[0], 0.5 * length[1], 0.5 * length[2]};
}

void DomainSpec::validate() const {
  if (dim != 2 && dim != 3) throw ValidationError("domain.dim must be 2 or 3");
  for (int d = 0; d < dim; ++d) {
    if (!(length[d] > 0.0)) throw ValidationError("domain side lengths must be positive");
  }
  if (!(T > 0.0)) throw ValidationError("domain.T must be positive");
  if (!omega.compactly_inside(domain_box(), dim)) {
    throw ValidationError("omega " + box_string(omega, dim) + " must lie strictly inside the domain");
  }
  if (!omega0.compactly_inside(omega, dim)) {
    throw ValidationError("omega0 " + box_string(omega0, dim) + " must lie strictly inside omega");
  }
}

NodeGrid NodeGrid::make(const DomainSpec& domain, std::array<int, 3> cells) {
  NodeGrid g;
  g.dim = domain.dim;
  g.cells = cells;
  if (g.dim == 2) g.cells[2] = 1;
  for (int d = 0; d < 3; ++d) {
    if (g.cells[d] < 1) throw ValidationError("node grid needs at least one cell per axis");
    g.h[d] = d < g.dim ? domain.length[d] / g.cells[d] : 1.0;
  }
  return g;
}

std::size_t NodeGrid::node_count() const {
  std::size_t n = 1;
  for (int d = 0; d < dim; ++d) n *= static_cast<std::size_t>(cells[d] + 1);
  return n;
}

std::array<int, 3> NodeGrid::unflatten(std::size_t k) const {
  std::array<int, 3> idx{0, 0, 0};
  for (int d = 0; d < dim; ++d) {
    const auto stride = static_cast<std::size_t>(cells[d] + 1);
    idx[d] = static_cast<int>(k % stride);
    k /= stride;
  }
  return idx;
}

std::array<double, 3> NodeGrid::position(std::size_t k) const {
  const auto idx = unflatten(k);
  std::array<double, 3> p{0.0, 0.0, 0.0};
  for (int d = 0; d < dim; ++d) p[d] = idx[d] * h[d];
  return p;
}

int NodeGrid::boundary_coordinates(std::size_t k) const {
  const auto idx = unflatten(k);
  int count = 0;
  for (int d = 0; d < dim; ++d) {
    if (idx[d] == 0 || idx[d] == cells[d]) ++count;
  }
  return count;
}

EtaField EtaField::from_values(NodeGrid grid, std::vector<double> values, double sup) {
  EtaField e;
  e.grid = grid;
  e.values = std::move(values);
  e.sup = sup;
  e.grad_min_off_omega0 = 0.0;
  return e;
}

EtaField build_eta(const DomainSpec& domain, const NodeGrid& grid) {
  const int dim = domain.dim;
  if (!domain.omega0.contains(domain.center(), dim)) {
    throw AdmissibilityError("omega0 " + box_string(domain.omega0, dim) +
                             " does not contain the domain center, the only critical point of eta");
  }

  double c = 1.0;
  for (int d = 0; d < dim; ++d) c *= 4.0 / (domain.length[d] * domain.length[d]);

  EtaField eta;
  eta.grid = grid;
  eta.sup = 1.0;
  const std::size_t n = grid.node_count();
  eta.values.resize(n);
  double grad_min = kInf;

  for (std::size_t k = 0; k < n; ++k) {
    const auto x = grid.position(k);
    std::array<double, 3> factor{1.0, 1.0, 1.0};
    for (int d = 0; d < dim; ++d) factor[d] = x[d] * (domain.length[d] - x[d]);
    double value = c;
    for (int d = 0; d < dim; ++d) value *= factor[d];
    const int nb = grid.boundary_coordinates(k);
    if (nb > 0) value = 0.0;
    eta.values[k] = value;
    if (nb == 0 && !(value > 0.0)) {
      throw AdmissibilityError("eta is not positive at an interior node");
    }

    // Corner (and 3D edge) nodes: any C¹ function vanishing on both adjacent
    // faces has zero gradient there, so they are excluded from the check.
    if (domain.omega0.contains(x, dim) || nb >= 2) continue;
    double g2 = 0.0;
    for (int d = 0; d < dim; ++d) {
      double g = c * (domain.length[d] - 2.0 * x[d]);
      for (int e = 0; e < dim; ++e) {
        if (e != d) g *= factor[e];
      }
      g2 += g * g;
    }
    grad_min = std::min(grad_min, std::sqrt(g2));
  }
  if (!(grad_min > 0.0)) {
    throw AdmissibilityError("|grad eta| vanishes at a node outside omega0");
  }
  eta.grad_min_off_omega0 = grad_min;
  return eta;
}

double ell(double t, double T) {
  if (t <= 0.25 * T) return t;
  if (t >= 0.75 * T) return T - t;
  const double tau = t - 0.5 * T;
  const double tau2 = tau * tau;
  return 13.0 * T / 32.0 - 3.0 * tau2 / T + 8.0 * tau2 * tau2 / (T * T * T);
}

double ell_sup(double T) { return 13.0 * T / 32.0; }

TimeProfile build_time_profile(double T, int nt) {
  if (!(T > 0.0)) throw ValidationError("T must be positive");
  if (nt < 8) throw ValidationError("time profile needs nt >= 8");
  TimeProfile p;
  p.T = T;
  p.nt = nt;
  p.dt = T / nt;
  p.ell_max = ell_sup(T);
  p.ell.resize(nt + 1);
  p.ell_tilde.resize(nt + 1);
  for (int n = 0; n <= nt; ++n) {
    const double t = n * p.dt;
    p.ell[n] = (n == 0 || n == nt) ? 0.0 : ell(t, T);
    p.ell_tilde[n] = (2 * n <= nt) ? p.ell_max : p.ell[n];
  }
  return p;
}

double WeightBundle::beta_at(std::size_t k, int n) const {
  if (beta_infinite[n]) return kInf;
  return alpha_num[k] / pow8(profile.ell_tilde[n]);
}

double WeightBundle::gamma_at(std::size_t k, int n) const {
  if (beta_infinite[n]) return kInf;
  return xi_num[k] / pow8(profile.ell_tilde[n]);
}

WeightBundle build_weights(const EtaField& eta, const TimeProfile& prof, double s, double lambda) {
  if (!(s >= 1.0)) throw ValidationError("Carleman parameter s must be >= 1");
  if (!(lambda >= 1.0)) throw ValidationError("Carleman parameter lambda must be >= 1");

  WeightBundle w;
  w.s = s;
  w.lambda = lambda;
  w.profile = prof;
  w.nodes = eta.values.size();
  const std::size_t nodes = w.nodes;
  const int nt = prof.nt;

  const double top = std::exp(2.0 * lambda * eta.sup);
  w.alpha_num.resize(nodes);
  w.xi_num.resize(nodes);
  for (std::size_t k = 0; k < nodes; ++k) {
    w.xi_num[k] = std::exp(lambda * eta.values[k]);
    w.alpha_num[k] = top - w.xi_num[k];
  }

  w.alpha.assign(static_cast<std::size_t>(nt + 1) * nodes, kInf);
  w.xi.assign(static_cast<std::size_t>(nt + 1) * nodes, kInf);
  w.alpha_star.assign(nt + 1, kInf);
  w.alpha_hat.assign(nt + 1, kInf);
  w.xi_star.assign(nt + 1, kInf);
  w.xi_hat.assign(nt + 1, kInf);
  w.beta_star.assign(nt + 1, kInf);
  w.beta_hat.assign(nt + 1, kInf);
  w.gamma_star.assign(nt + 1, kInf);
  w.gamma_hat.assign(nt + 1, kInf);
  w.alpha_infinite.assign(nt + 1, false);
  w.beta_infinite.assign(nt + 1, false);

  for (int n = 0; n <= nt; ++n) {
    const double l = prof.ell[n];
    if (l <= 0.0) {
      w.alpha_infinite[n] = true;
    } else {
      const double l8 = pow8(l);
      double amax = -kInf, amin = kInf, xmax = -kInf, xmin = kInf;
      for (std::size_t k = 0; k < nodes; ++k) {
        const double a = w.alpha_num[k] / l8;
        const double x = w.xi_num[k] / l8;
        if (!std::isfinite(a) || !std::isfinite(x)) {
          throw OverflowError("alpha/xi weight is not finite at time index " + std::to_string(n) +
                              "; lower s or coarsen the time grid");
        }
        w.alpha[n * nodes + k] = a;
        w.xi[n * nodes + k] = x;
        amax = std::max(amax, a);
        amin = std::min(amin, a);
        xmax = std::max(xmax, x);
        xmin = std::min(xmin, x);
      }
      w.alpha_star[n] = amax;
      w.alpha_hat[n] = amin;
      w.xi_star[n] = xmin;
      w.xi_hat[n] = xmax;
    }

    const double lt = prof.ell_tilde[n];
    if (lt <= 0.0) {
      w.beta_infinite[n] = true;
    } else {
      const double l8 = pow8(lt);
      double bmax = -kInf, bmin = kInf, gmax = -kInf, gmin = kInf;
      for (std::size_t k = 0; k < nodes; ++k) {
        const double b = w.alpha_num[k] / l8;
        const double g = w.xi_num[k] / l8;
        bmax = std::max(bmax, b);
        bmin = std::min(bmin, b);
        gmax = std::max(gmax, g);
        gmin = std::min(gmin, g);
      }
      if (!std::isfinite(bmax) || !std::isfinite(gmax)) {
        throw OverflowError("beta/gamma weight is not finite at time index " + std::to_string(n));
      }
      w.beta_star[n] = bmax;
      w.beta_hat[n] = bmin;
      w.gamma_star[n] = gmin;
      w.gamma_hat[n] = gmax;
    }
  }
  return w;
}

double flushed_exp(double log_value) {
  if (!(log_value > -690.0)) return 0.0;  // e^{-690} ≈ 2e-300
  const double v = std::exp(log_value);
  return v < 1e-300 ? 0.0 : v;
}

bool WeightReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

namespace {

// Relative amount by which `lhs ≤ rhs` is violated (≤ 0 when satisfied).
double violation(double lhs, double rhs) {
  const double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
  return (lhs - rhs) / scale;
}

struct CheckAccumulator {
  InequalityCheck check;
  bool any = false;

  explicit CheckAccumulator(std::string name) { check.name = std::move(name); }

  void observe(double v, std::size_t k, int n) {
    if (!any || v > check.worst_violation) {
      check.worst_violation = v;
      check.worst_node = k;
      check.worst_time = n;
      any = true;
    }
  }

  InequalityCheck finish() {
    check.passed = check.worst_violation <= kWeightSlack;
    return check;
  }
};

}  // namespace

WeightReport check_weight_inequalities(const WeightBundle& w) {
  CheckAccumulator alpha_upper("alpha <= alpha_star");
  CheckAccumulator alpha_lower("alpha_hat <= alpha");
  CheckAccumulator xi_lower("xi_star <= xi");
  CheckAccumulator xi_upper("xi <= xi_hat");
  CheckAccumulator carleman("exp(-2s alpha) <= exp(-4s alpha + 2s alpha_star)");
  CheckAccumulator beta_order("beta_hat <= beta <= beta_star");
  CheckAccumulator beta_late("beta == alpha on (T/2,T]");
  CheckAccumulator beta_early("beta constant on [0,T/2]");

  const int nt = w.nt();
  const double s = w.s;
  for (int n = 0; n <= nt; ++n) {
    const bool late = 2 * n > nt;
    for (std::size_t k = 0; k < w.nodes; ++k) {
      if (!w.alpha_infinite[n]) {
        const double a = w.alpha_at(k, n);
        const double x = w.xi_at(k, n);
        alpha_upper.observe(violation(a, w.alpha_star[n]), k, n);
        alpha_lower.observe(violation(w.alpha_hat[n], a), k, n);
        xi_lower.observe(violation(w.xi_star[n], x), k, n);
        xi_upper.observe(violation(x, w.xi_hat[n]), k, n);
        // log form of e^{−2sα} ≤ e^{−4sα+2sα*}
        carleman.observe(violation(-2.0 * s * a, -4.0 * s * a + 2.0 * s * w.alpha_star[n]), k, n);
      }
      if (!w.beta_infinite[n]) {
        const double b = w.beta_at(k, n);
        beta_order.observe(std::max(violation(w.beta_hat[n], b), violation(b, w.beta_star[n])), k, n);
        if (late) {
          const double a = w.alpha_at(k, n);
          beta_late.observe(std::abs(b - a) / std::max(std::abs(a), 1e-300), k, n);
        } else {
          const double b0 = w.beta_at(k, 0);
          beta_early.observe(std::abs(b - b0) / std::max(std::abs(b0), 1e-300), k, n);
        }
      }
    }
  }

  WeightReport report;
  for (auto* acc : {&alpha_upper, &alpha_lower, &xi_lower, &xi_upper, &carleman, &beta_order,
                    &beta_late, &beta_early}) {
    report.checks.push_back(acc->finish());
  }
  return report;
}

void write_weights_csv(std::ostream& os, const WeightBundle& w) {
  os << "t,alpha_star,xi_star,alpha_hat,xi_hat,beta_star,gamma_star,beta_hat,gamma_hat\n";
  os << std::setprecision(17);
  for (int n = 0; n <= w.nt(); ++n) {
    os << w.profile.time(n) << ',' << w.alpha_star[n] << ',' << w.xi_star[n] << ','
       << w.alpha_hat[n] << ',' << w.xi_hat[n] << ',' << w.beta_star[n] << ','
       << w.gamma_star[n] << ',' << w.beta_hat[n] << ',' << w.gamma_hat[n] << '\n';
  }
}

void write_weight_report_csv(std::ostream& os, const WeightReport& report) {
  os << "check,passed,worst_violation,worst_node,worst_time_index\n";
  os << std::setprecision(17);
  for (const auto& c : report.checks) {
    os << '"' << c.name << "\"," << (c.passed ? 1 : 0) << ',' << c.worst_violation << ','
       << c.worst_node << ',' << c.worst_time << '\n';
  }
}

}  // namespace nullctrl
