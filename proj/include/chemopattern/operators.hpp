#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "chemopattern/grid.hpp"

namespace chemo {

// Discrete operator on grid fields. The Neumann Laplacian has exactly zero
// row sums (constants are in the null space) and a structurally symmetric
// stencil; boundary rows carry the factor-2 ghost closure so the matrix is
// not numerically symmetric (W*A is, with trapezoid weights W).
struct SparseOperator {
  Eigen::SparseMatrix<double> M;
  bool structurally_symmetric = true;
};

// 5-point Laplacian with homogeneous Neumann closure via reflected ghost
// nodes: at x=0 the ghost identity u(-hx) = u(hx) turns the 3-point stencil
// into (2*u(hx) - 2*u(0))/hx^2, and likewise at the other walls.
inline SparseOperator build_laplacian(const Grid2D& g) {
  const double cx = 1.0 / (g.hx() * g.hx());
  const double cy = 1.0 / (g.hy() * g.hy());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(5 * static_cast<size_t>(g.n()));
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const long row = g.idx(i, j);
      trip.emplace_back(row, row, -2.0 * cx - 2.0 * cy);
      if (i == 0) {
        trip.emplace_back(row, g.idx(1, j), 2.0 * cx);
      } else if (i == g.nx - 1) {
        trip.emplace_back(row, g.idx(g.nx - 2, j), 2.0 * cx);
      } else {
        trip.emplace_back(row, g.idx(i - 1, j), cx);
        trip.emplace_back(row, g.idx(i + 1, j), cx);
      }
      if (j == 0) {
        trip.emplace_back(row, g.idx(i, 1), 2.0 * cy);
      } else if (j == g.ny - 1) {
        trip.emplace_back(row, g.idx(i, g.ny - 2), 2.0 * cy);
      } else {
        trip.emplace_back(row, g.idx(i, j - 1), cy);
        trip.emplace_back(row, g.idx(i, j + 1), cy);
      }
    }
  }
  SparseOperator A;
  A.M.resize(g.n(), g.n());
  A.M.setFromTriplets(trip.begin(), trip.end());
  A.M.makeCompressed();
  return A;
}

namespace detail {

// Flux form of div(v grad u) with midpoint-averaged v and one-sided
// differences of u. Ghost reflection applies to both u and v, so at a wall
// the mirrored outside flux equals minus the inside flux and the normal
// flux across the boundary is zero.
inline void flux_divergence(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                            const Grid2D& g, Eigen::VectorXd& out) {
  const double cx = 1.0 / (g.hx() * g.hx());
  const double cy = 1.0 / (g.hy() * g.hy());
  const int nx = g.nx, ny = g.ny;
  for (int j = 0; j < ny; ++j) {
    const int jm = (j == 0) ? 1 : j - 1;
    const int jp = (j == ny - 1) ? ny - 2 : j + 1;
    for (int i = 0; i < nx; ++i) {
      const int im = (i == 0) ? 1 : i - 1;
      const int ip = (i == nx - 1) ? nx - 2 : i + 1;
      const long c = g.idx(i, j);
      const double uc = u[c], vc = v[c];
      const double fe = (vc + v[g.idx(ip, j)]) * (u[g.idx(ip, j)] - uc);
      const double fw = (v[g.idx(im, j)] + vc) * (uc - u[g.idx(im, j)]);
      const double fn = (vc + v[g.idx(i, jp)]) * (u[g.idx(i, jp)] - uc);
      const double fs = (v[g.idx(i, jm)] + vc) * (uc - u[g.idx(i, jm)]);
      out[c] = 0.5 * (cx * (fe - fw) + cy * (fn - fs));
    }
  }
}

}  // namespace detail

// Discretization of -div(u grad v), split as -Lap(u*v) + div(v grad u).
// The cross-diffusion part applies the Neumann Laplacian A to the pointwise
// product; the nonlinear-diffusion part uses the flux form above.
// `work` and `out` must have length g.n().
inline void chemotaxis_divergence(const Eigen::VectorXd& u,
                                  const Eigen::VectorXd& v, const Grid2D& g,
                                  const SparseOperator& A,
                                  Eigen::VectorXd& work, Eigen::VectorXd& out) {
  require(u.size() == g.n() && v.size() == g.n(),
          "chemotaxis_divergence: field length mismatch");
  detail::flux_divergence(u, v, g, out);
  work = u.cwiseProduct(v);
  out.noalias() -= A.M * work;
}

inline Eigen::VectorXd chemotaxis_divergence(const Eigen::VectorXd& u,
                                             const Eigen::VectorXd& v,
                                             const Grid2D& g) {
  const SparseOperator A = build_laplacian(g);
  Eigen::VectorXd work(g.n()), out(g.n());
  chemotaxis_divergence(u, v, g, A, work, out);
  return out;
}

}  // namespace chemo
