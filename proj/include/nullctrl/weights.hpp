#pragma once

// Carleman weight functions: the spatial profile eta, the time profiles
// ell / ell_tilde, and the alpha / xi / beta / gamma aggregates built from
// them. All exponential weights are handled in log space by consumers.

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace nullctrl {

/// Axis-aligned open box (lo, hi) in up to three dimensions.
struct Box {
  std::array<double, 3> lo{0.0, 0.0, 0.0};
  std::array<double, 3> hi{1.0, 1.0, 1.0};

  bool contains(const std::array<double, 3>& p, int dim) const;
  /// closure(*this) lies in the open box `outer`.
  bool compactly_inside(const Box& outer, int dim) const;
};

struct DomainSpec {
  int dim = 2;
  std::array<double, 3> length{1.0, 1.0, 1.0};
  Box omega{{0.3, 0.3, 0.3}, {0.7, 0.7, 0.7}};
  Box omega0{{0.4, 0.4, 0.4}, {0.6, 0.6, 0.6}};
  double T = 1.0;

  Box domain_box() const;
  std::array<double, 3> center() const;
  /// Throws ValidationError naming the violated invariant.
  void validate() const;
};

/// Vertex grid of the box, boundary nodes included: (cells[d] + 1) per axis.
struct NodeGrid {
  int dim = 2;
  std::array<int, 3> cells{32, 32, 1};
  std::array<double, 3> h{1.0 / 32, 1.0 / 32, 1.0};

  static NodeGrid make(const DomainSpec& domain, std::array<int, 3> cells);
  std::size_t node_count() const;
  std::array<int, 3> unflatten(std::size_t k) const;
  std::array<double, 3> position(std::size_t k) const;
  /// Number of coordinates of node k lying on the boundary of the box.
  int boundary_coordinates(std::size_t k) const;
};

struct EtaField {
  NodeGrid grid;
  std::vector<double> values;
  double sup = 1.0;  // ‖η‖∞ used in the weight numerators
  double grad_min_off_omega0 = 0.0;

  /// Test hook: arbitrary samples, no admissibility checks.
  static EtaField from_values(NodeGrid grid, std::vector<double> values, double sup);
};

/// Builds η = c·∏ x_i (L_i − x_i) with ‖η‖∞ = 1. Requires the box center in ω₀.
/// Throws AdmissibilityError when ω₀ misses the center or the gradient check fails.
EtaField build_eta(const DomainSpec& domain, const NodeGrid& grid);

/// ℓ(t): t on [0,T/4], T−t on [3T/4,T], C² quartic blend in between.
double ell(double t, double T);
/// ‖ℓ‖∞ = ℓ(T/2) = 13T/32.
double ell_sup(double T);

struct TimeProfile {
  double T = 1.0;
  int nt = 0;
  double dt = 0.0;
  std::vector<double> ell;        // nt + 1 samples at t_n = n·dt
  std::vector<double> ell_tilde;  // ‖ℓ‖∞ on [0,T/2], ℓ afterwards
  double ell_max = 0.0;

  double time(int n) const { return n * dt; }
};

TimeProfile build_time_profile(double T, int nt);

/// The twelve weight aggregates on the time grid plus α, ξ on the node grid.
///
/// Time indices where ℓ (resp. ℓ̃) vanishes carry +∞ in the corresponding
/// family and are flagged in `alpha_infinite` / `beta_infinite`. Every
/// exponential of the form e^{−s(…)} evaluates to exactly 0 there.
struct WeightBundle {
  double s = 2.0;
  double lambda = 1.5;
  TimeProfile profile;
  std::size_t nodes = 0;

  // Space-only numerators: α = alpha_num / ℓ⁸, ξ = xi_num / ℓ⁸ (same for β, γ with ℓ̃).
  std::vector<double> alpha_num;
  std::vector<double> xi_num;

  // Space-time fields, row-major [n * nodes + k].
  std::vector<double> alpha;
  std::vector<double> xi;

  std::vector<double> alpha_star, xi_star, alpha_hat, xi_hat;
  std::vector<double> beta_star, gamma_star, beta_hat, gamma_hat;
  std::vector<bool> alpha_infinite, beta_infinite;

  int nt() const { return profile.nt; }
  double alpha_at(std::size_t k, int n) const { return alpha[n * nodes + k]; }
  double xi_at(std::size_t k, int n) const { return xi[n * nodes + k]; }
  double beta_at(std::size_t k, int n) const;
  double gamma_at(std::size_t k, int n) const;
};

/// Throws ValidationError for s < 1 or λ < 1, OverflowError if a stored weight is
/// non-finite at an interior time node.
WeightBundle build_weights(const EtaField& eta, const TimeProfile& prof, double s, double lambda);

/// e^{x} with values below 1e−300 (and −∞) flushed to zero.
double flushed_exp(double log_value);

struct InequalityCheck {
  std::string name;
  bool passed = true;
  double worst_violation = 0.0;  // relative; ≤ 1e−12 passes
  std::size_t worst_node = 0;
  int worst_time = 0;
};

struct WeightReport {
  std::vector<InequalityCheck> checks;
  bool all_passed() const;
};

inline constexpr double kWeightSlack = 1e-12;

WeightReport check_weight_inequalities(const WeightBundle& w);

/// Columns: t, alpha_star, xi_star, alpha_hat, xi_hat, beta_star, gamma_star, beta_hat, gamma_hat.
void write_weights_csv(std::ostream& os, const WeightBundle& w);
void write_weight_report_csv(std::ostream& os, const WeightReport& report);

}  // namespace nullctrl
