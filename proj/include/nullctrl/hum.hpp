#pragma once

// Penalized dual (HUM) solver over terminal adjoint data x = (φT, ψT).
//
//   J_ε(x) = ½ Σ_k dt w0_k ‖1_ω ψ̂_k‖² [+ ½ Σ_k dt wj_k ‖1_ω φ̂_{k,j}‖²] + (ε/2)‖x‖²
//            − ⟨y⁰,φ(0)⟩ − ⟨θ⁰,ψ(0)⟩ − ∬(f·φ + f₀ψ)
//
// with controls v₀ = −w0 ψ̂ 1_ω and v_j = −wj φ̂_j 1_ω. The gradient is εx − z(T; v),
// where z is the forward solution driven by the data and those controls, so the
// optimality condition reads εx = z(T).

#include <string>
#include <vector>

#include "nullctrl/adjoint.hpp"
#include "nullctrl/forward.hpp"
#include "nullctrl/weights.hpp"

namespace nullctrl {

/// Observation/control multipliers at the time nodes 0..nt (step k uses node k).
struct ControlWeights {
  // Raw logarithms: log w0 = −4sβ̂ − sβ* + (49/4) log γ̂,  log wj = −2sβ̂ − 3sβ* + 7 log γ̂.
  std::vector<double> log_w0;
  std::vector<double> log_wj;
  // Applied multiplier = exp(log_w − offset) / gramian_scale. The offsets are the
  // [0,T/2] plateau values; the Gramian scale is set by calibrate_gramian().
  double log_w0_offset = 0.0;
  double log_wj_offset = 0.0;
  double gramian_scale = 1.0;
  bool calibrated = false;
  std::vector<double> w0;
  std::vector<double> wj;

  /// Logarithm of the applied multiplier at node n.
  double applied_log_w0(int n) const;
  double applied_log_wj(int n) const;
};

ControlWeights control_weights(const WeightBundle& w);

/// Power iteration for the largest eigenvalue of the ψ-observation Gramian with the
/// plateau-normalized w0; divides both multipliers by it.
ControlWeights calibrate_gramian(const StepKernel& kernel, const TrajectoryBar& bar, ControlWeights cw,
                                 int iterations = 40);

struct DualConfig {
  double epsilon = 1e-4;
  double cg_tol = 1e-8;
  int cg_max_iters = 500;
  bool observe_velocity = false;
  int j_index = 1;
};

/// Terminal adjoint data; φT is kept discretely divergence-free.
struct TerminalPair {
  VectorField phi;
  ScalarField psi;
};

TerminalPair terminal_zeros(const GridSpec& g);
double inner(const GridSpec& g, const TerminalPair& a, const TerminalPair& b);
void axpy(double a, const TerminalPair& x, TerminalPair& y);

/// Forward data of the linear control problem.
struct ControlData {
  VectorField y0;
  ScalarField theta0;
  SourceSeries src;
};

class DualProblem {
 public:
  DualProblem(const StepKernel& kernel, const TrajectoryBar& bar, const ControlWeights& weights,
              const ControlData& data, const DualConfig& cfg);

  const GridSpec& grid() const { return kernel_.grid(); }
  const DualConfig& config() const { return cfg_; }

  /// Controls induced by terminal data x (masked, step-indexed).
  ControlPair controls(const TerminalPair& x) const;
  /// Controls plus the adjoint run they came from.
  ControlPair controls(const TerminalPair& x, AdjointTrajectory& adj) const;

  /// z(T) of the free problem: the data with no control.
  TerminalPair free_terminal() const;
  /// (ε + Λ) x, Λ the observation Gramian.
  TerminalPair apply(const TerminalPair& x) const;

  struct Evaluation {
    double value = 0.0;
    TerminalPair gradient;
  };
  /// J_ε and its gradient; φT is projected first.
  Evaluation evaluate(const TerminalPair& x) const;

  std::vector<FlowState> forward(const ControlPair& ctrl) const;

 private:
  const StepKernel& kernel_;
  const TrajectoryBar& bar_;
  const ControlWeights& weights_;
  const ControlData& data_;
  DualConfig cfg_;
};

struct CgLogRow {
  int iter = 0;
  double J = 0.0;
  double grad_norm = 0.0;
};

struct ENormComponent {
  std::string name;
  double log_norm = 0.0;  // −∞ for a zero component, +∞ if a nonzero value meets an infinite weight
};

struct ENormReport {
  std::vector<ENormComponent> components;
  /// log(terminal_norm) + (3/2) s β*(t_{nt−1}): how far the terminal state is from what
  /// a finite weighted norm would allow.
  double terminal_weighted_log = 0.0;

  double log_norm(const std::string& name) const;
};

/// Discrete E-norm summands in log space. Levels with an infinite weight are skipped
/// when the sampled value is zero. `src` may be empty.
ENormReport e_norm_report(const GridSpec& g, const std::vector<FlowState>& traj, const ControlPair& ctrl,
                          const SourceSeries& src, const WeightBundle& w);

struct HumResult {
  TerminalPair x;  // (φT, ψT) at the minimizer
  ControlPair controls;
  std::vector<FlowState> trajectory;
  double terminal_norm = 0.0;
  double dual_value = 0.0;
  double kkt_residual = 0.0;  // ‖εx − z(T)‖ from the final forward run
  double kkt_scale = 0.0;     // ‖z_free(T)‖
  int cg_iters = 0;
  bool converged = true;
  double gramian_scale = 1.0;
  std::vector<CgLogRow> cg_log;
  ENormReport e_norm;
};

/// CG on (ε + Λ)x = z_free(T). Non-convergence is flagged (converged = false) and the
/// last iterate returned. `weights` is calibrated here when it is not already.
HumResult hum_solve(const StepKernel& kernel, const ControlData& data, const TrajectoryBar& bar,
                    const WeightBundle& w, const ControlWeights& weights, const DualConfig& cfg,
                    const TerminalPair* warm_start = nullptr);

}  // namespace nullctrl
