#pragma once

// Naive dense reference implementations used only by tests. Everything here
// is written directly from the continuous formulas with explicit mirror
// ghost padding and dense linear algebra, sharing no code with the
// production operators.

#include <Eigen/Dense>

#include "chemopattern/grid.hpp"
#include "chemopattern/integrators.hpp"
#include "chemopattern/models.hpp"

namespace chemoref {

// Field vector -> (nx+2) x (ny+2) array with mirror ghost frame
// (ghost(-1) = interior(+1), homogeneous Neumann).
inline Eigen::MatrixXd pad_mirror(const Eigen::VectorXd& f,
                                  const chemo::Grid2D& g) {
  Eigen::MatrixXd P(g.nx + 2, g.ny + 2);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) P(i + 1, j + 1) = f[g.idx(i, j)];
  for (int j = 1; j <= g.ny; ++j) {
    P(0, j) = P(2, j);
    P(g.nx + 1, j) = P(g.nx - 1, j);
  }
  for (int i = 0; i <= g.nx + 1; ++i) {
    P(i, 0) = P(i, 2);
    P(i, g.ny + 1) = P(i, g.ny - 1);
  }
  return P;
}

// Five-point Neumann Laplacian as a dense matrix, assembled by reflecting
// out-of-range neighbors back inside and accumulating their coefficients.
inline Eigen::MatrixXd dense_laplacian(const chemo::Grid2D& g) {
  const long n = g.n();
  const double cx = 1.0 / (g.hx() * g.hx());
  const double cy = 1.0 / (g.hy() * g.hy());
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  const auto reflect = [](int k, int lim) {
    if (k < 0) return -k;
    if (k >= lim) return 2 * (lim - 1) - k;
    return k;
  };
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const long r = g.idx(i, j);
      L(r, r) -= 2.0 * (cx + cy);
      L(r, g.idx(reflect(i - 1, g.nx), j)) += cx;
      L(r, g.idx(reflect(i + 1, g.nx), j)) += cx;
      L(r, g.idx(i, reflect(j - 1, g.ny))) += cy;
      L(r, g.idx(i, reflect(j + 1, g.ny))) += cy;
    }
  return L;
}

// -div(u grad v) evaluated directly as face-flux differences with midpoint
// u averages on the mirror-padded fields.
inline Eigen::VectorXd dense_chemotaxis(const Eigen::VectorXd& u,
                                        const Eigen::VectorXd& v,
                                        const chemo::Grid2D& g) {
  const Eigen::MatrixXd U = pad_mirror(u, g);
  const Eigen::MatrixXd V = pad_mirror(v, g);
  const double cx = 1.0 / (g.hx() * g.hx());
  const double cy = 1.0 / (g.hy() * g.hy());
  Eigen::VectorXd out(g.n());
  for (int j = 1; j <= g.ny; ++j)
    for (int i = 1; i <= g.nx; ++i) {
      const double fe =
          0.5 * (U(i, j) + U(i + 1, j)) * (V(i + 1, j) - V(i, j)) * cx;
      const double fw =
          0.5 * (U(i - 1, j) + U(i, j)) * (V(i, j) - V(i - 1, j)) * cx;
      const double fn =
          0.5 * (U(i, j) + U(i, j + 1)) * (V(i, j + 1) - V(i, j)) * cy;
      const double fs =
          0.5 * (U(i, j - 1) + U(i, j)) * (V(i, j) - V(i, j - 1)) * cy;
      out[g.idx(i - 1, j - 1)] = -(fe - fw + fn - fs);
    }
  return out;
}

inline Eigen::VectorXd dense_f(const Eigen::VectorXd& u,
                               const Eigen::VectorXd& v,
                               const chemo::ModelParams& p) {
  Eigen::VectorXd out(u.size());
  for (long i = 0; i < u.size(); ++i)
    out[i] = p.variant == chemo::ModelVariant::MOMOS
                 ? -p.k1 * u[i] - p.q * u[i] * u[i] + p.k2 * v[i]
                 : p.q * u[i] * (1.0 - u[i]);
  return out;
}

// One step of each scheme through dense LU factorizations.
inline chemo::StateField dense_step(chemo::Scheme scheme,
                                    const chemo::StateField& s,
                                    const chemo::ModelParams& p, double ht,
                                    const chemo::Grid2D& g) {
  const long n = g.n();
  const Eigen::MatrixXd L = dense_laplacian(g);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const double cterm = p.variant == chemo::ModelVariant::MOMOS ? p.c : 0.0;
  chemo::StateField out;
  if (scheme == chemo::Scheme::SymplecticEuler ||
      scheme == chemo::Scheme::IMSP_IE) {
    Eigen::VectorXd rhs = s.v + ht * p.k1 * s.u;
    rhs.array() += ht * cterm;
    out.v = (I - ht * p.Dv * L + ht * p.k2 * I).lu().solve(rhs);
    const Eigen::VectorXd expl = s.u + ht * p.beta * dense_chemotaxis(s.u, out.v, g) +
                                 ht * dense_f(s.u, out.v, p);
    if (scheme == chemo::Scheme::SymplecticEuler)
      out.u = expl + ht * p.Du * (L * s.u);
    else
      out.u = (I - ht * p.Du * L).lu().solve(expl);
    return out;
  }
  Eigen::VectorXd vbar = s.v + ht * p.k1 * s.u;
  vbar.array() += ht * cterm;
  vbar /= 1.0 + ht * p.k2;
  const Eigen::VectorXd ubar = s.u + ht * p.beta * dense_chemotaxis(s.u, vbar, g) +
                               ht * dense_f(s.u, vbar, p);
  out.u = (I - ht * p.Du * L).lu().solve(ubar);
  out.v = (I - ht * p.Dv * L).lu().solve(vbar);
  return out;
}

}  // namespace chemoref
