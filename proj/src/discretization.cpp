#include "nullctrl/discretization.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "nullctrl/errors.hpp"

namespace nullctrl {

GridSpec GridSpec::make(int nx, int ny, double lx, double ly, int nt, double T) {
  if (nx < 2 || ny < 2) throw ValidationError("grid needs at least 2 cells per axis");
  if (nt < 1) throw ValidationError("grid needs at least one time step");
  if (!(lx > 0.0) || !(ly > 0.0) || !(T > 0.0)) {
    throw ValidationError("grid lengths and T must be positive");
  }
  GridSpec g;
  g.nx = nx;
  g.ny = ny;
  g.lx = lx;
  g.ly = ly;
  g.hx = lx / nx;
  g.hy = ly / ny;
  g.nt = nt;
  g.T = T;
  g.dt = T / nt;
  return g;
}

ScalarField scalar_zeros(const GridSpec& g) { return ScalarField(g.nx, g.ny); }

VectorField vector_zeros(const GridSpec& g) {
  return VectorField{Array2(g.nx + 1, g.ny), Array2(g.nx, g.ny + 1)};
}

void axpy(double a, const Array2& x, Array2& y) {
  auto& yd = y.data();
  const auto& xd = x.data();
  for (std::size_t k = 0; k < yd.size(); ++k) yd[k] += a * xd[k];
}

void axpy(double a, const VectorField& x, VectorField& y) {
  axpy(a, x.u, y.u);
  axpy(a, x.v, y.v);
}

void scale(double a, Array2& x) {
  for (auto& e : x.data()) e *= a;
}

void scale(double a, VectorField& x) {
  scale(a, x.u);
  scale(a, x.v);
}

double inner(const GridSpec& g, const Array2& a, const Array2& b) {
  const auto& ad = a.data();
  const auto& bd = b.data();
  double s = 0.0;
  for (std::size_t k = 0; k < ad.size(); ++k) s += ad[k] * bd[k];
  return s * g.cell_volume();
}

double inner(const GridSpec& g, const VectorField& a, const VectorField& b) {
  return inner(g, a.u, b.u) + inner(g, a.v, b.v);
}

double norm(const GridSpec& g, const Array2& a) { return std::sqrt(inner(g, a, a)); }
double norm(const GridSpec& g, const VectorField& a) { return std::sqrt(inner(g, a, a)); }

double max_abs(const Array2& a) {
  double m = 0.0;
  for (double e : a.data()) m = std::max(m, std::abs(e));
  return m;
}

double max_abs(const VectorField& a) { return std::max(max_abs(a.u), max_abs(a.v)); }

double sum(const Array2& a) { return std::accumulate(a.data().begin(), a.data().end(), 0.0); }

ScalarField divergence(const GridSpec& g, const VectorField& u) {
  ScalarField d(g.nx, g.ny);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      d(i, j) = (u.u(i + 1, j) - u.u(i, j)) / g.hx + (u.v(i, j + 1) - u.v(i, j)) / g.hy;
    }
  }
  return d;
}

VectorField gradient(const GridSpec& g, const ScalarField& p) {
  VectorField out = vector_zeros(g);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 1; i < g.nx; ++i) out.u(i, j) = (p(i, j) - p(i - 1, j)) / g.hx;
  }
  for (int j = 1; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) out.v(i, j) = (p(i, j) - p(i, j - 1)) / g.hy;
  }
  return out;
}

namespace {

// What lies beyond the last unknown along an axis.
enum class Edge {
  Wall,  // a boundary value of zero sits at the neighbour location
  Odd,   // ghost = −self (Dirichlet at the midpoint)
  Even,  // ghost = +self (homogeneous Neumann)
};

// Interior unknowns of a stored array and their boundary treatment.
struct Layout {
  int mx, my;  // unknown counts
  int oi, oj;  // offset of the first unknown in storage
  Edge ex, ey;
  double hx, hy;

  std::size_t count() const { return static_cast<std::size_t>(mx) * my; }
  std::size_t index(int a, int b) const { return a + static_cast<std::size_t>(mx) * b; }
};

Layout scalar_layout(const GridSpec& g, ScalarBc bc) {
  const Edge e = bc == ScalarBc::Dirichlet ? Edge::Odd : Edge::Even;
  return Layout{g.nx, g.ny, 0, 0, e, e, g.hx, g.hy};
}

Layout u_layout(const GridSpec& g) { return Layout{g.nx - 1, g.ny, 1, 0, Edge::Wall, Edge::Odd, g.hx, g.hy}; }
Layout v_layout(const GridSpec& g) { return Layout{g.nx, g.ny - 1, 0, 1, Edge::Odd, Edge::Wall, g.hx, g.hy}; }

double edge_value(Edge e, double self) {
  switch (e) {
    case Edge::Wall: return 0.0;
    case Edge::Odd: return -self;
    case Edge::Even: return self;
  }
  return 0.0;
}

void apply_laplacian(const Layout& L, const Array2& in, Array2& out) {
  const double ix2 = 1.0 / (L.hx * L.hx);
  const double iy2 = 1.0 / (L.hy * L.hy);
  for (int b = 0; b < L.my; ++b) {
    for (int a = 0; a < L.mx; ++a) {
      const int i = a + L.oi;
      const int j = b + L.oj;
      const double c = in(i, j);
      const double left = a > 0 ? in(i - 1, j) : edge_value(L.ex, c);
      const double right = a < L.mx - 1 ? in(i + 1, j) : edge_value(L.ex, c);
      const double down = b > 0 ? in(i, j - 1) : edge_value(L.ey, c);
      const double up = b < L.my - 1 ? in(i, j + 1) : edge_value(L.ey, c);
      out(i, j) = (left + right - 2.0 * c) * ix2 + (down + up - 2.0 * c) * iy2;
    }
  }
}

// Sparse matrix of (I·shift − coefficient·Δ) on the layout's unknowns.
Eigen::SparseMatrix<double> assemble(const Layout& L, double shift, double coefficient) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(L.count() * 5);
  const double ix2 = 1.0 / (L.hx * L.hx);
  const double iy2 = 1.0 / (L.hy * L.hy);
  auto edge_diag = [](Edge e, double ih2) {
    switch (e) {
      case Edge::Wall: return 0.0;
      case Edge::Odd: return -ih2;
      case Edge::Even: return ih2;
    }
    return 0.0;
  };
  for (int b = 0; b < L.my; ++b) {
    for (int a = 0; a < L.mx; ++a) {
      const auto row = static_cast<int>(L.index(a, b));
      double diag = -2.0 * ix2 - 2.0 * iy2;
      auto neighbour = [&](bool exists, int aa, int bb, Edge e, double ih2) {
        if (exists) {
          trip.emplace_back(row, static_cast<int>(L.index(aa, bb)), -coefficient * ih2);
        } else {
          diag += edge_diag(e, ih2);
        }
      };
      neighbour(a > 0, a - 1, b, L.ex, ix2);
      neighbour(a < L.mx - 1, a + 1, b, L.ex, ix2);
      neighbour(b > 0, a, b - 1, L.ey, iy2);
      neighbour(b < L.my - 1, a, b + 1, L.ey, iy2);
      trip.emplace_back(row, row, shift - coefficient * diag);
    }
  }
  Eigen::SparseMatrix<double> m(static_cast<int>(L.count()), static_cast<int>(L.count()));
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

Eigen::VectorXd gather(const Layout& L, const Array2& a) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(L.count()));
  for (int b = 0; b < L.my; ++b) {
    for (int c = 0; c < L.mx; ++c) x[static_cast<Eigen::Index>(L.index(c, b))] = a(c + L.oi, b + L.oj);
  }
  return x;
}

void scatter(const Layout& L, const Eigen::VectorXd& x, Array2& a) {
  for (int b = 0; b < L.my; ++b) {
    for (int c = 0; c < L.mx; ++c) a(c + L.oi, b + L.oj) = x[static_cast<Eigen::Index>(L.index(c, b))];
  }
}

void zero_wall_faces(const GridSpec& g, VectorField& u) {
  for (int j = 0; j < g.ny; ++j) {
    u.u(0, j) = 0.0;
    u.u(g.nx, j) = 0.0;
  }
  for (int i = 0; i < g.nx; ++i) {
    u.v(i, 0) = 0.0;
    u.v(i, g.ny) = 0.0;
  }
}

}  // namespace

ScalarField laplacian(const GridSpec& g, const ScalarField& f, ScalarBc bc) {
  ScalarField out(g.nx, g.ny);
  apply_laplacian(scalar_layout(g, bc), f, out);
  return out;
}

VectorField laplacian(const GridSpec& g, const VectorField& u) {
  VectorField out = vector_zeros(g);
  apply_laplacian(u_layout(g), u.u, out.u);
  apply_laplacian(v_layout(g), u.v, out.v);
  return out;
}

VectorField curl_of_streamfunction(const GridSpec& g, const std::function<double(double, double)>& psi) {
  Array2 corner(g.nx + 1, g.ny + 1);
  for (int j = 0; j <= g.ny; ++j) {
    for (int i = 0; i <= g.nx; ++i) corner(i, j) = psi(g.xf(i), g.yf(j));
  }
  VectorField out = vector_zeros(g);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i <= g.nx; ++i) out.u(i, j) = (corner(i, j + 1) - corner(i, j)) / g.hy;
  }
  for (int j = 0; j <= g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) out.v(i, j) = -(corner(i + 1, j) - corner(i, j)) / g.hx;
  }
  return out;
}

MaskField make_mask(const GridSpec& g, const Box& region) {
  MaskField m(g.nx, g.ny);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      m(i, j) = region.contains({g.xc(i), g.yc(j), 0.0}, 2) ? 1.0 : 0.0;
    }
  }
  return m;
}

Array2 face_mask(const GridSpec& g, const MaskField& mask, int j) {
  if (j == 1) {
    Array2 f(g.nx + 1, g.ny);
    for (int b = 0; b < g.ny; ++b) {
      for (int i = 1; i < g.nx; ++i) f(i, b) = mask(i - 1, b) * mask(i, b);
    }
    return f;
  }
  Array2 f(g.nx, g.ny + 1);
  for (int b = 1; b < g.ny; ++b) {
    for (int i = 0; i < g.nx; ++i) f(i, b) = mask(i, b - 1) * mask(i, b);
  }
  return f;
}

Array2 cells_to_vfaces(const GridSpec& g, const ScalarField& theta) {
  Array2 v(g.nx, g.ny + 1);
  for (int j = 1; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) v(i, j) = 0.5 * (theta(i, j - 1) + theta(i, j));
  }
  return v;
}

ScalarField vfaces_to_cells(const GridSpec& g, const Array2& v) {
  ScalarField c(g.nx, g.ny);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const double below = j > 0 ? v(i, j) : 0.0;
      const double above = j < g.ny - 1 ? v(i, j + 1) : 0.0;
      c(i, j) = 0.5 * (below + above);
    }
  }
  return c;
}

CgStats pcg(const std::function<void(const std::vector<double>&, std::vector<double>&)>& apply,
            const std::vector<double>& diagonal, const std::vector<double>& rhs,
            std::vector<double>& x, double tol, int max_iterations, bool mean_free) {
  const std::size_t n = rhs.size();
  auto dot = [n](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += a[k] * b[k];
    return s;
  };
  auto remove_mean = [n, mean_free](std::vector<double>& a) {
    if (!mean_free) return;
    const double m = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(n);
    for (auto& e : a) e -= m;
  };

  std::vector<double> b = rhs;
  remove_mean(b);
  x.resize(n, 0.0);
  remove_mean(x);

  CgStats stats;
  const double bnorm = std::sqrt(dot(b, b));
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    stats.converged = true;
    return stats;
  }

  std::vector<double> r(n), z(n), p(n), ap(n);
  apply(x, ap);
  for (std::size_t k = 0; k < n; ++k) r[k] = b[k] - ap[k];
  remove_mean(r);
  auto precondition = [&](const std::vector<double>& in, std::vector<double>& out) {
    for (std::size_t k = 0; k < n; ++k) out[k] = in[k] / diagonal[k];
    remove_mean(out);
  };
  precondition(r, z);
  p = z;
  double rz = dot(r, z);

  for (int it = 0; it < max_iterations; ++it) {
    const double rnorm = std::sqrt(dot(r, r));
    stats.relative_residual = rnorm / bnorm;
    stats.iterations = it;
    if (stats.relative_residual <= tol) {
      stats.converged = true;
      return stats;
    }
    apply(p, ap);
    const double alpha = rz / dot(p, ap);
    for (std::size_t k = 0; k < n; ++k) {
      x[k] += alpha * p[k];
      r[k] -= alpha * ap[k];
    }
    precondition(r, z);
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t k = 0; k < n; ++k) p[k] = z[k] + beta * p[k];
  }
  stats.iterations = max_iterations;
  stats.relative_residual = std::sqrt(dot(r, r)) / bnorm;
  stats.converged = stats.relative_residual <= tol;
  return stats;
}

Projection project(const GridSpec& g, const VectorField& u, double tol) {
  Projection out;
  out.field = u;
  zero_wall_faces(g, out.field);

  const ScalarField div = divergence(g, out.field);
  const Layout L = scalar_layout(g, ScalarBc::Neumann);
  std::vector<double> rhs(div.data().size());
  for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] = -div.data()[k];

  // Diagonal of −Δ_N: 2/h² per axis minus 1/h² for each wall side.
  std::vector<double> diag(rhs.size());
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      double d = 0.0;
      d += ((i > 0) + (i < g.nx - 1)) / (g.hx * g.hx);
      d += ((j > 0) + (j < g.ny - 1)) / (g.hy * g.hy);
      diag[i + static_cast<std::size_t>(g.nx) * j] = d;
    }
  }
  auto apply = [&](const std::vector<double>& in, std::vector<double>& res) {
    Array2 a(g.nx, g.ny), b(g.nx, g.ny);
    a.data() = in;
    apply_laplacian(L, a, b);
    res.resize(in.size());
    for (std::size_t k = 0; k < in.size(); ++k) res[k] = -b.data()[k];
  };

  std::vector<double> q(rhs.size(), 0.0);
  const int cap = 10 * g.nx * g.ny;
  const CgStats stats = pcg(apply, diag, rhs, q, tol, cap, true);
  if (!stats.converged) {
    throw PoissonNoConverge("pressure Poisson CG did not reach tol " + std::to_string(tol) + " in " +
                            std::to_string(cap) + " iterations");
  }
  out.iterations = stats.iterations;
  out.potential = ScalarField(g.nx, g.ny);
  out.potential.data() = q;
  axpy(-1.0, gradient(g, out.potential), out.field);
  return out;
}

struct FactorizedOperators::Impl {
  using Solver = Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>;
  Layout scalar_dir, scalar_neu, u, v, poisson;
  Solver h_dir, h_neu, h_u, h_v, p;
  // Backward-Euler Stokes saddle point [H, c·G; c·Gᵀ, 0] over (u, v, p₁..p_{n−1}); p₀ = 0.
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> stokes;

  static void factor(Solver& s, const Eigen::SparseMatrix<double>& m, const char* what) {
    s.compute(m);
    if (s.info() != Eigen::Success) throw LinearSolveError(std::string("factorization failed: ") + what);
  }
};

FactorizedOperators::FactorizedOperators(const GridSpec& g, double diffusion_coefficient)
    : grid_(g), coefficient_(diffusion_coefficient), impl_(std::make_unique<Impl>()) {
  auto& im = *impl_;
  im.scalar_dir = scalar_layout(g, ScalarBc::Dirichlet);
  im.scalar_neu = scalar_layout(g, ScalarBc::Neumann);
  im.u = u_layout(g);
  im.v = v_layout(g);
  im.poisson = im.scalar_neu;
  const double c = diffusion_coefficient;
  Impl::factor(im.h_dir, assemble(im.scalar_dir, 1.0, c), "scalar Dirichlet Helmholtz");
  Impl::factor(im.h_neu, assemble(im.scalar_neu, 1.0, c), "scalar Neumann Helmholtz");
  Impl::factor(im.h_u, assemble(im.u, 1.0, c), "u Helmholtz");
  Impl::factor(im.h_v, assemble(im.v, 1.0, c), "v Helmholtz");
  // −Δ_N pinned at cell 0: SPD, and exact for mean-free right-hand sides up to a constant.
  Eigen::SparseMatrix<double> poisson = assemble(im.poisson, 0.0, 1.0);
  poisson.coeffRef(0, 0) += 1.0;
  Impl::factor(im.p, poisson, "pressure Poisson");

  // Saddle point of (I − cΔ)y + c∇p = r, −c·div y = 0. Gᵀ = −D as matrices, so the
  // system is symmetric and its velocity block of the inverse is a symmetric map.
  const int nu = static_cast<int>(im.u.count());
  const int nv = static_cast<int>(im.v.count());
  const int np = g.nx * g.ny - 1;
  std::vector<Eigen::Triplet<double>> trip;
  auto copy_block = [&trip](const Eigen::SparseMatrix<double>& m, int offset) {
    for (int k = 0; k < m.outerSize(); ++k) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it) {
        trip.emplace_back(static_cast<int>(it.row()) + offset, static_cast<int>(it.col()) + offset, it.value());
      }
    }
  };
  copy_block(assemble(im.u, 1.0, c), 0);
  copy_block(assemble(im.v, 1.0, c), nu);
  auto pressure_index = [&](int i, int j) { return nu + nv + i + g.nx * j - 1; };  // cell 0 is pinned
  auto couple = [&](int row, int i, int j, double w) {
    if (i == 0 && j == 0) return;
    const int col = pressure_index(i, j);
    trip.emplace_back(row, col, w);
    trip.emplace_back(col, row, w);
  };
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 1; i < g.nx; ++i) {
      const int row = static_cast<int>(im.u.index(i - 1, j));
      couple(row, i, j, c / g.hx);
      couple(row, i - 1, j, -c / g.hx);
    }
  }
  for (int j = 1; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const int row = nu + static_cast<int>(im.v.index(i, j - 1));
      couple(row, i, j, c / g.hy);
      couple(row, i, j - 1, -c / g.hy);
    }
  }
  Eigen::SparseMatrix<double> k(nu + nv + np, nu + nv + np);
  k.setFromTriplets(trip.begin(), trip.end());
  k.makeCompressed();
  im.stokes.analyzePattern(k);
  im.stokes.factorize(k);
  if (im.stokes.info() != Eigen::Success) throw LinearSolveError("factorization failed: Stokes saddle point");
}

FactorizedOperators::~FactorizedOperators() = default;

ScalarField FactorizedOperators::solve_helmholtz(const ScalarField& rhs, ScalarBc bc) const {
  const auto& L = bc == ScalarBc::Dirichlet ? impl_->scalar_dir : impl_->scalar_neu;
  const auto& s = bc == ScalarBc::Dirichlet ? impl_->h_dir : impl_->h_neu;
  ScalarField out(grid_.nx, grid_.ny);
  scatter(L, s.solve(gather(L, rhs)), out);
  return out;
}

VectorField FactorizedOperators::solve_helmholtz(const VectorField& rhs) const {
  VectorField out = vector_zeros(grid_);
  scatter(impl_->u, impl_->h_u.solve(gather(impl_->u, rhs.u)), out.u);
  scatter(impl_->v, impl_->h_v.solve(gather(impl_->v, rhs.v)), out.v);
  return out;
}

VectorField FactorizedOperators::solve_stokes(const VectorField& rhs, ScalarField* pressure) const {
  const auto& im = *impl_;
  const Eigen::Index nu = static_cast<Eigen::Index>(im.u.count());
  const Eigen::Index nv = static_cast<Eigen::Index>(im.v.count());
  const Eigen::Index np = static_cast<Eigen::Index>(grid_.nx) * grid_.ny - 1;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(nu + nv + np);
  b.segment(0, nu) = gather(im.u, rhs.u);
  b.segment(nu, nv) = gather(im.v, rhs.v);
  const Eigen::VectorXd x = im.stokes.solve(b);
  VectorField out = vector_zeros(grid_);
  scatter(im.u, x.segment(0, nu), out.u);
  scatter(im.v, x.segment(nu, nv), out.v);
  if (pressure) {
    ScalarField p(grid_.nx, grid_.ny);
    for (Eigen::Index q = 0; q < np; ++q) p.data()[static_cast<std::size_t>(q) + 1] = x[nu + nv + q];
    const double mean = sum(p) / static_cast<double>(p.size());
    for (auto& e : p.data()) e -= mean;
    *pressure = std::move(p);
  }
  return out;
}

VectorField FactorizedOperators::project(const VectorField& u, ScalarField* potential) const {
  VectorField out = u;
  zero_wall_faces(grid_, out);
  const ScalarField div = divergence(grid_, out);
  Eigen::VectorXd rhs = -gather(impl_->poisson, div);
  Eigen::VectorXd q = impl_->p.solve(rhs);
  q.array() -= q.mean();
  ScalarField qf(grid_.nx, grid_.ny);
  scatter(impl_->poisson, q, qf);
  axpy(-1.0, gradient(grid_, qf), out);
  if (potential) *potential = std::move(qf);
  return out;
}

}  // namespace nullctrl
