#pragma once

// Backward adjoint solver built as the algebraic transpose of StepKernel::step.
//
// Given (φ^k, ψ^k), one backward step produces the intermediate pair
//   ψ̂_k = (I − dtΔ)⁻¹ ψ^k,
//   φ̂_k = S (φ^k − dt ψ̂_k ∇θ̄(t_k)),  S the (symmetric) backward-Euler Stokes solve,
// and the previous level
//   φ^{k−1} = φ̂_k + dt P g^{k−1},   ψ^{k−1} = ψ̂_k + dt φ̂_{k,N} + dt g₀^{k−1}.
// Forcing terms of the forward step k pair with (dt φ̂_k, dt ψ̂_k).

#include <vector>

#include "nullctrl/forward.hpp"

namespace nullctrl {

struct AdjointState {
  VectorField phi;
  ScalarField pi;
  ScalarField psi;
  double t = 0.0;
};

struct AdjointTrajectory {
  std::vector<AdjointState> levels;   // 0..nt
  std::vector<VectorField> phi_hat;   // per step, index k−1
  std::vector<ScalarField> psi_hat;   // per step, index k−1
};

struct AdjointOptions {
  /// Mutation switch for tests: drop the −ψ∇θ̄ coupling in the φ equation.
  bool omit_bar_coupling = false;
};

/// Transposed single step: returns (φ̂, ψ̂) and, through `pi`, the transposed pressure / dt.
void adjoint_step(const StepKernel& kernel, const VectorField& phi, const ScalarField& psi,
                  const Array2& bar_grad, const AdjointOptions& opt, VectorField& phi_hat,
                  ScalarField& psi_hat, ScalarField* pi = nullptr);

/// Marches from T to 0. `g` holds (g, g₀) at levels 0..nt−1 (empty: zero).
/// phiT is projected on input.
AdjointTrajectory solve_adjoint(const StepKernel& kernel, const VectorField& phiT, const ScalarField& psiT,
                                const SourceSeries& g, const TrajectoryBar& bar,
                                const AdjointOptions& opt = {});

struct DualityGap {
  double gap = 0.0;       // |lhs − rhs|
  double scale = 0.0;     // sum of |terms|
  double relative = 0.0;  // gap / scale (0 when scale is 0)
};

/// Discrete integration-by-parts identity between a forward run (y0, θ0, src, ctrl)
/// and an adjoint run (φT, ψT, g). The adjoint sources enter with a plus sign:
///   ⟨y(T),φT⟩ + ⟨θ(T),ψT⟩ = ⟨y⁰,φ(0)⟩ + ⟨θ⁰,ψ(0)⟩ + ∬(f·φ + f₀ψ) + ∬_ω(v₀ψ + v_jφ_j) − ∬(g·y + g₀θ).
DualityGap duality_gap(const StepKernel& kernel, const VectorField& y0, const ScalarField& theta0,
                       const SourceSeries& src, const ControlPair& ctrl, const VectorField& phiT,
                       const ScalarField& psiT, const SourceSeries& g, const TrajectoryBar& bar,
                       const AdjointOptions& opt = {});

}  // namespace nullctrl
