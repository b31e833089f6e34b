#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace chemo {

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

// Rectangular tensor grid on [0,Lx]x[0,Ly] with nx*ny meshpoints including
// the boundary, so hx = Lx/(nx-1). Node numbering is x-fastest:
// node (i,j) -> j*nx + i with x_i = i*hx, y_j = j*hy.
struct Grid2D {
  double Lx, Ly;
  int nx, ny;

  Grid2D(double Lx_, double Ly_, int nx_, int ny_)
      : Lx(Lx_), Ly(Ly_), nx(nx_), ny(ny_) {
    require(nx >= 3 && ny >= 3, "Grid2D: nx and ny must be >= 3");
    require(Lx > 0.0 && Ly > 0.0, "Grid2D: domain lengths must be positive");
  }

  double hx() const { return Lx / (nx - 1); }
  double hy() const { return Ly / (ny - 1); }
  long n() const { return static_cast<long>(nx) * ny; }
  long idx(int i, int j) const { return static_cast<long>(j) * nx + i; }
  double x(int i) const { return i * hx(); }
  double y(int j) const { return j * hy(); }
};

// Paired concentration fields at one time instant, both length grid.n().
struct StateField {
  Eigen::VectorXd u, v;

  StateField() = default;
  StateField(Eigen::VectorXd u_, Eigen::VectorXd v_)
      : u(std::move(u_)), v(std::move(v_)) {
    require(u.size() == v.size(), "StateField: component length mismatch");
  }

  bool finite() const { return u.allFinite() && v.allFinite(); }
};

// Trapezoid quadrature weights: corner 1/4, edge 1/2, interior 1, times
// hx*hy. Summing f against these integrates over the domain; they also
// symmetrize the Neumann Laplacian (W*A = A^T*W).
inline Eigen::VectorXd trapezoid_weights(const Grid2D& g) {
  Eigen::VectorXd w(g.n());
  const double hxy = g.hx() * g.hy();
  for (int j = 0; j < g.ny; ++j) {
    const double wy = (j == 0 || j == g.ny - 1) ? 0.5 : 1.0;
    for (int i = 0; i < g.nx; ++i) {
      const double wx = (i == 0 || i == g.nx - 1) ? 0.5 : 1.0;
      w[g.idx(i, j)] = wx * wy * hxy;
    }
  }
  return w;
}

// Domain-averaged value of f by the trapezoidal rule on the tensor grid.
inline double spatial_mean(const Eigen::VectorXd& f, const Grid2D& g) {
  require(f.size() == g.n(), "spatial_mean: field length mismatch");
  double acc = 0.0;
  for (int j = 0; j < g.ny; ++j) {
    const double wy = (j == 0 || j == g.ny - 1) ? 0.5 : 1.0;
    double row = 0.0;
    const double* fj = f.data() + g.idx(0, j);
    row += 0.5 * fj[0];
    for (int i = 1; i < g.nx - 1; ++i) row += fj[i];
    row += 0.5 * fj[g.nx - 1];
    acc += wy * row;
  }
  return acc * g.hx() * g.hy() / (g.Lx * g.Ly);
}

}  // namespace chemo
