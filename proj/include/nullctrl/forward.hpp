#pragma once

// Forward time integrators: the target trajectory θ̄, the linearized control
// system, the reduced nonlinear system, and the Neumann-temperature variant.
// Backward Euler throughout; step k advances t_{k−1} → t_k and consumes the
// step-k entries (index k−1) of source and control series.

#include <memory>
#include <vector>

#include "nullctrl/discretization.hpp"

namespace nullctrl {

/// Target trajectory (0, p̄, θ̄) with θ̄ depending on the vertical coordinate only.
struct TrajectoryBar {
  GridSpec grid;
  ScalarField theta_bar0;
  std::vector<ScalarField> theta_bar;       // levels 0..nt
  std::vector<ScalarField> p_bar;           // mean-zero, G p̄ = B θ̄ on interior faces
  std::vector<VectorField> grad_theta_bar;  // ∂₂θ̄ on y-faces; u part is zero
  double w3_proxy = 0.0;      // max |∂³θ̄/∂x_N³| by third differences
  double grad_t_proxy = 0.0;  // max |∂_t ∇θ̄| by first differences

  const Array2& vertical_gradient(int level) const { return grad_theta_bar[level].v; }
};

/// Backward-Euler heat evolution of an x_N-only profile. Throws StructureError if
/// theta_bar0 varies horizontally.
TrajectoryBar solve_trajectory(const ScalarField& theta_bar0, const GridSpec& g);

struct FlowState {
  VectorField y;
  ScalarField p;
  ScalarField theta;
  double t = 0.0;
};

struct SourcePair {
  VectorField f;
  ScalarField f0;
};

/// One entry per step; an empty series means zero sources.
using SourceSeries = std::vector<SourcePair>;

/// Controls per step. `vj` is empty unless a velocity component j_index ∈ {1, 2} is controlled;
/// only that component of each entry is read.
struct ControlPair {
  std::vector<ScalarField> v0;
  std::vector<VectorField> vj;
  int j_index = 0;

  bool has_velocity_control() const { return j_index != 0 && !vj.empty(); }
};

ControlPair zero_controls(const GridSpec& g);

/// Largest |value| of the controls outside ω (should be exactly 0).
double control_leak_outside(const GridSpec& g, const ControlPair& c, const MaskField& mask);

/// Grid-bound operators shared by the forward and adjoint steppers.
class StepKernel {
 public:
  StepKernel(const GridSpec& g, const MaskField& omega_mask);

  const GridSpec& grid() const { return grid_; }
  const FactorizedOperators& ops() const { return *ops_; }
  const MaskField& mask() const { return mask_; }
  const Array2& face_mask(int j) const { return j == 1 ? face_mask_u_ : face_mask_v_; }

  /// y·∇θ̄ at cell centers from interior y-faces: ½(v g)_{j−1/2} + ½(v g)_{j+1/2}.
  ScalarField coupling(const VectorField& y, const Array2& bar_grad) const;
  /// Transpose of coupling(): ψ∇θ̄ on y-faces.
  VectorField coupling_transpose(const ScalarField& psi, const Array2& bar_grad) const;
  /// Buoyancy θ e_N on y-faces.
  VectorField buoyancy(const ScalarField& theta) const;
  /// Transpose of buoyancy(): φ_N averaged to cells.
  ScalarField buoyancy_transpose(const VectorField& phi) const;

  /// Face forcing f + 1_ω v_j e_j and cell forcing f₀ + 1_ω v₀ for step k.
  VectorField velocity_forcing(const SourceSeries& src, const ControlPair& ctrl, int k) const;
  ScalarField temperature_forcing(const SourceSeries& src, const ControlPair& ctrl, int k) const;

  /// One linear step with raw forcing:
  ///   (I − dtΔ) y' + dt ∇p' = y + dt(a + Bθ),  div y' = 0,
  ///   (I − dtΔ) θ' = θ + dt(b − C y').
  FlowState step(const FlowState& s, const VectorField& a, const ScalarField& b,
                 const Array2& bar_grad_next) const;

 private:
  GridSpec grid_;
  std::shared_ptr<const FactorizedOperators> ops_;
  MaskField mask_;
  Array2 face_mask_u_;
  Array2 face_mask_v_;
};

FlowState initial_state(const GridSpec& g, const VectorField& y0, const ScalarField& theta0);

FlowState step_linear(const StepKernel& kernel, const FlowState& state, const SourceSeries& src,
                      const ControlPair& ctrl, const TrajectoryBar& bar, int k);

/// Full trajectory, levels 0..nt.
std::vector<FlowState> solve_linear(const StepKernel& kernel, const VectorField& y0,
                                    const ScalarField& theta0, const SourceSeries& src,
                                    const ControlPair& ctrl, const TrajectoryBar& bar);

/// Conservative first-order upwind ∇·(y ⊗ y) on faces.
VectorField advect_velocity(const GridSpec& g, const VectorField& y);
/// Conservative first-order upwind ∇·(y θ) at cells. Sums to zero when wall fluxes vanish.
ScalarField advect_scalar(const GridSpec& g, const VectorField& y, const ScalarField& theta);

/// Lagged quadratic terms of the reduced system at one state: (−(ỹ·∇)ỹ, −ỹ·∇θ̃).
SourcePair nonlinear_sources(const GridSpec& g, const FlowState& s);

/// Semi-implicit step of the reduced nonlinear system: explicit upwind quadratic
/// terms, implicit Stokes solve for the velocity. Throws CflViolation if ‖y‖∞·dt/h > 1.
FlowState step_nonlinear(const StepKernel& kernel, const FlowState& state, const ControlPair& ctrl,
                         const TrajectoryBar& bar, int k);

std::vector<FlowState> solve_nonlinear(const StepKernel& kernel, const VectorField& y0,
                                       const ScalarField& theta0, const ControlPair& ctrl,
                                       const TrajectoryBar& bar);

/// Heat equation with ∇θ·n = 0, advected by a fixed solenoidal y with zero wall
/// flux. Returns levels 0..steps.
std::vector<ScalarField> solve_heat_neumann(const FactorizedOperators& ops, const ScalarField& theta0,
                                            const VectorField& y, int steps);

/// Discrete L²(Q)-type distance between two trajectories (sum over levels, dt-weighted).
double trajectory_norm(const GridSpec& g, const std::vector<FlowState>& a);
double trajectory_distance(const GridSpec& g, const std::vector<FlowState>& a,
                           const std::vector<FlowState>& b);
/// ‖(y, θ)‖ at one level.
double state_norm(const GridSpec& g, const FlowState& s);

}  // namespace nullctrl
