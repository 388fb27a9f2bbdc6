#pragma once

// Uniform 2D MAC grid: cell-centered scalars, face-centered velocities,
// the discrete div/grad/Laplacian, and the divergence-free projection.
//
// With all inner products weighted by the cell area hx·hy, gradient() is
// exactly −divergence()ᵀ on fields with zero boundary normal faces, and every
// Laplacian below is a symmetric matrix. The adjoint module relies on both.

#include <functional>
#include <memory>
#include <vector>

#include "nullctrl/weights.hpp"

namespace nullctrl {

struct GridSpec {
  int nx = 32;
  int ny = 32;
  double lx = 1.0;
  double ly = 1.0;
  double hx = 1.0 / 32;
  double hy = 1.0 / 32;
  int nt = 64;
  double T = 1.0;
  double dt = 1.0 / 64;
  int dim = 2;

  static GridSpec make(int nx, int ny, double lx, double ly, int nt, double T);

  double xc(int i) const { return (i + 0.5) * hx; }
  double yc(int j) const { return (j + 0.5) * hy; }
  double xf(int i) const { return i * hx; }
  double yf(int j) const { return j * hy; }
  double cell_volume() const { return hx * hy; }
  double time(int n) const { return n * dt; }
};

/// Dense nx × ny array, x index fastest.
class Array2 {
 public:
  Array2() = default;
  Array2(int nx, int ny, double value = 0.0)
      : nx_(nx), ny_(ny), data_(static_cast<std::size_t>(nx) * ny, value) {}

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(int i, int j) { return data_[i + static_cast<std::size_t>(nx_) * j]; }
  double operator()(int i, int j) const { return data_[i + static_cast<std::size_t>(nx_) * j]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const Array2&) const = default;

 private:
  int nx_ = 0;
  int ny_ = 0;
  std::vector<double> data_;
};

/// Cell-centered samples (θ, ψ, p, π).
using ScalarField = Array2;
/// Cell-centered indicator of ω, values in {0, 1}.
using MaskField = Array2;

/// Face-centered samples: u on x-faces ((nx+1) × ny), v on y-faces (nx × (ny+1)).
/// Faces with index 0 and n lie on the wall.
struct VectorField {
  Array2 u;
  Array2 v;

  const Array2& component(int j) const { return j == 1 ? u : v; }
  Array2& component(int j) { return j == 1 ? u : v; }

  bool operator==(const VectorField&) const = default;
};

ScalarField scalar_zeros(const GridSpec& g);
VectorField vector_zeros(const GridSpec& g);

// Field algebra. Inner products carry the cell-area weight hx·hy.
void axpy(double a, const Array2& x, Array2& y);
void axpy(double a, const VectorField& x, VectorField& y);
void scale(double a, Array2& x);
void scale(double a, VectorField& x);
double inner(const GridSpec& g, const Array2& a, const Array2& b);
double inner(const GridSpec& g, const VectorField& a, const VectorField& b);
double norm(const GridSpec& g, const Array2& a);
double norm(const GridSpec& g, const VectorField& a);
double max_abs(const Array2& a);
double max_abs(const VectorField& a);
double sum(const Array2& a);

enum class ScalarBc { Dirichlet, Neumann };

ScalarField divergence(const GridSpec& g, const VectorField& u);
/// Boundary normal faces of the result are zero.
VectorField gradient(const GridSpec& g, const ScalarField& p);
/// 5-point Laplacian with ghost reflection (odd for Dirichlet, even for Neumann).
ScalarField laplacian(const GridSpec& g, const ScalarField& f, ScalarBc bc);
/// Componentwise no-slip Laplacian on interior faces; wall faces of the result are zero.
VectorField laplacian(const GridSpec& g, const VectorField& u);

/// Velocity from a streamfunction sampled at cell corners: u = ∂_y ψ, v = −∂_x ψ.
/// Exactly discretely divergence-free; wall faces vanish when ψ = 0 on the boundary.
VectorField curl_of_streamfunction(const GridSpec& g, const std::function<double(double, double)>& psi);

/// Sharp indicator: 1 where the cell center lies in the open box.
MaskField make_mask(const GridSpec& g, const Box& region);
/// Face indicator for velocity component j ∈ {1, 2}: 1 when both adjacent cells are in ω.
Array2 face_mask(const GridSpec& g, const MaskField& mask, int j);

/// Cell value averaged onto y-faces: (Bθ)_{i,j+1/2} = (θ_{ij} + θ_{i,j+1}) / 2, wall faces 0.
Array2 cells_to_vfaces(const GridSpec& g, const ScalarField& theta);
/// Transpose of cells_to_vfaces.
ScalarField vfaces_to_cells(const GridSpec& g, const Array2& v);

struct CgStats {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Jacobi-preconditioned conjugate gradient on a symmetric positive (semi)definite
/// operator. With `mean_free`, iterates are kept orthogonal to constants.
CgStats pcg(const std::function<void(const std::vector<double>&, std::vector<double>&)>& apply,
            const std::vector<double>& diagonal, const std::vector<double>& rhs,
            std::vector<double>& x, double tol, int max_iterations, bool mean_free);

struct Projection {
  VectorField field;
  ScalarField potential;  // mean-zero q with field = u − ∇q
  int iterations = 0;
};

/// Divergence-free projection by a pressure-Poisson solve (PCG, cap 10·nx·ny).
/// Wall normal faces of `u` are zeroed first. Throws PoissonNoConverge.
Projection project(const GridSpec& g, const VectorField& u, double tol = 1e-11);

/// Cached sparse factorizations of the operators used every time step:
/// (I − c·Δ) for scalars (both boundary conditions) and both velocity
/// components, the pinned Neumann Poisson operator of the projection, and the
/// coupled velocity/pressure Stokes system.
/// Each solve is an exactly linear map of its right-hand side.
class FactorizedOperators {
 public:
  FactorizedOperators(const GridSpec& g, double diffusion_coefficient);
  ~FactorizedOperators();
  FactorizedOperators(const FactorizedOperators&) = delete;
  FactorizedOperators& operator=(const FactorizedOperators&) = delete;

  const GridSpec& grid() const { return grid_; }
  double coefficient() const { return coefficient_; }

  ScalarField solve_helmholtz(const ScalarField& rhs, ScalarBc bc) const;
  VectorField solve_helmholtz(const VectorField& rhs) const;
  /// Backward-Euler Stokes solve: (I − c·Δ)y + c·∇p = rhs, div y = 0, y = 0 on the walls.
  /// The map rhs ↦ y is symmetric, vanishes on discrete gradients and lands in the
  /// divergence-free fields. `pressure` receives the mean-zero p.
  VectorField solve_stokes(const VectorField& rhs, ScalarField* pressure = nullptr) const;
  /// Orthogonal projection onto discretely divergence-free fields with zero wall flux.
  VectorField project(const VectorField& u, ScalarField* potential = nullptr) const;

 private:
  struct Impl;
  GridSpec grid_;
  double coefficient_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace nullctrl
