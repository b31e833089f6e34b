#pragma once

#include <chrono>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "chemopattern/dataset.hpp"
#include "chemopattern/grid.hpp"
#include "chemopattern/models.hpp"
#include "chemopattern/operators.hpp"
#include "chemopattern/rng.hpp"

namespace chemo {

enum class Scheme { SymplecticEuler, IMSP_IE, IMSP };

inline const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::SymplecticEuler: return "se";
    case Scheme::IMSP_IE: return "imsp-ie";
    case Scheme::IMSP: return "imsp";
  }
  return "?";
}

// Initial condition: u0 = u* + a_u*rand(x,y), v0 = v* + a_v*rand(x,y),
// i.i.d. uniform [0,1) in node order (u first, then v).
struct IcSpec {
  double a_u = 0.0, a_v = 0.0;
  uint64_t seed = 0;
};

struct SimConfig {
  Grid2D grid{1.0, 1.0, 3, 3};
  ModelParams params;
  Scheme scheme = Scheme::IMSP;
  double ht = 0.1;
  double T = 1.0;
  long snapshot_stride = 1;
  IcSpec ic;
  bool force_iterative = false;  // exercise the CG fallback on any grid

  long steps() const { return std::llround(T / ht); }

  void validate() const {
    params.validate();
    require(ht > 0.0, "SimConfig: ht must be positive");
    require(steps() >= 1, "SimConfig: T must be at least one step (T >= ht)");
    require(snapshot_stride >= 1, "SimConfig: stride must be >= 1");
    require(ic.a_u >= 0.0 && ic.a_v >= 0.0,
            "SimConfig: perturbation amplitudes must be >= 0");
  }
};

struct BlowupError : std::runtime_error {
  long step;
  explicit BlowupError(long step_)
      : std::runtime_error("non-finite state detected at step " +
                           std::to_string(step_)),
        step(step_) {}
};

namespace detail {

// Direct or iterative solver for one constant matrix of the scheme.
// The iterative path runs conjugate gradients on the trapezoid-weighted
// symmetrization W*M (W*A = A^T*W makes it SPD) with diagonal
// preconditioning and relative tolerance 1e-12; intended for grids too
// large to factorize, and for exercising both routes in tests.
class LinearSolver {
 public:
  LinearSolver(const Eigen::SparseMatrix<double>& M, const Grid2D& g,
               bool iterative)
      : iterative_(iterative) {
    if (!iterative_) {
      lu_.compute(M);
      require(lu_.info() == Eigen::Success,
              "LinearSolver: sparse factorization failed");
    } else {
      w_ = trapezoid_weights(g);
      sym_ = w_.asDiagonal() * M;
      sym_.makeCompressed();
      cg_.setTolerance(1e-12);
      cg_.compute(sym_);
      require(cg_.info() == Eigen::Success,
              "LinearSolver: CG setup failed");
    }
  }

  void solve(const Eigen::VectorXd& b, Eigen::VectorXd& x) const {
    if (!iterative_) {
      x = lu_.solve(b);
      require(lu_.info() == Eigen::Success, "LinearSolver: LU solve failed");
      return;
    }
    wb_ = w_.cwiseProduct(b);
    x = cg_.solveWithGuess(wb_, x.size() == b.size() ? x : wb_);
    require(cg_.info() == Eigen::Success,
            "LinearSolver: CG did not converge");
  }

 private:
  bool iterative_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
  Eigen::SparseMatrix<double> sym_;
  Eigen::VectorXd w_;
  mutable Eigen::VectorXd wb_;
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>,
                           Eigen::Lower | Eigen::Upper>
      cg_;
};

}  // namespace detail

// Constant matrices of the run, prepared once. g is affine in v for both
// models (slope -k2), so every implicit stage is a linear solve:
//   coupled v-solve (SE, IMSP_IE): I - ht*Dv*A + ht*k2*I
//   u-diffusion solve (IMSP_IE, IMSP): I - ht*Du*A
//   v-diffusion solve (IMSP): I - ht*Dv*A
struct LinearSolveContext {
  SparseOperator A;
  std::unique_ptr<detail::LinearSolver> v_coupled, u_diff, v_diff;
};

inline LinearSolveContext make_context(const SimConfig& cfg) {
  cfg.validate();
  LinearSolveContext ctx;
  ctx.A = build_laplacian(cfg.grid);
  const long n = cfg.grid.n();
  Eigen::SparseMatrix<double> I(n, n);
  I.setIdentity();
  const double ht = cfg.ht;
  const ModelParams& p = cfg.params;
  const bool it = cfg.force_iterative;
  if (cfg.scheme != Scheme::IMSP) {
    Eigen::SparseMatrix<double> Mv =
        I - (ht * p.Dv) * ctx.A.M + (ht * p.k2) * I;
    ctx.v_coupled =
        std::make_unique<detail::LinearSolver>(Mv, cfg.grid, it);
  }
  if (cfg.scheme != Scheme::SymplecticEuler) {
    Eigen::SparseMatrix<double> Mu = I - (ht * p.Du) * ctx.A.M;
    ctx.u_diff = std::make_unique<detail::LinearSolver>(Mu, cfg.grid, it);
  }
  if (cfg.scheme == Scheme::IMSP) {
    Eigen::SparseMatrix<double> Mv = I - (ht * p.Dv) * ctx.A.M;
    ctx.v_diff = std::make_unique<detail::LinearSolver>(Mv, cfg.grid, it);
  }
  return ctx;
}

namespace detail {

struct StepWorkspace {
  Eigen::VectorXd rhs, work, chem, fval;
  void resize(long n) {
    rhs.resize(n);
    work.resize(n);
    chem.resize(n);
    fval.resize(n);
  }
};

// f-reaction at (u, v): MOMOS -k1*u - q*u^2 + k2*v; Mimura q*u*(1-u).
inline void f_reaction(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                       const ModelParams& p, Eigen::VectorXd& out) {
  if (p.variant == ModelVariant::MOMOS)
    out = -p.k1 * u.array() - p.q * u.array().square() + p.k2 * v.array();
  else
    out = p.q * u.array() * (1.0 - u.array());
}

// rhs of the implicit v-solve: v_n + ht*k1*u_n (+ ht*c for MOMOS).
inline void v_rhs(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                  const ModelParams& p, double ht, Eigen::VectorXd& out) {
  out = v + (ht * p.k1) * u;
  if (p.variant == ModelVariant::MOMOS) out.array() += ht * p.c;
}

inline void step_se_core(const StateField& s, StateField& out,
                         const SimConfig& cfg, const LinearSolveContext& ctx,
                         StepWorkspace& w) {
  const ModelParams& p = cfg.params;
  const double ht = cfg.ht;
  v_rhs(s.u, s.v, p, ht, w.rhs);
  ctx.v_coupled->solve(w.rhs, out.v);
  chemotaxis_divergence(s.u, out.v, cfg.grid, ctx.A, w.work, w.chem);
  f_reaction(s.u, out.v, p, w.fval);
  out.u = s.u + (ht * p.Du) * (ctx.A.M * s.u) + ht * p.beta * w.chem +
          ht * w.fval;
}

inline void step_imsp_ie_core(const StateField& s, StateField& out,
                              const SimConfig& cfg,
                              const LinearSolveContext& ctx,
                              StepWorkspace& w) {
  const ModelParams& p = cfg.params;
  const double ht = cfg.ht;
  v_rhs(s.u, s.v, p, ht, w.rhs);
  ctx.v_coupled->solve(w.rhs, out.v);
  chemotaxis_divergence(s.u, out.v, cfg.grid, ctx.A, w.work, w.chem);
  f_reaction(s.u, out.v, p, w.fval);
  w.rhs = s.u + ht * p.beta * w.chem + ht * w.fval;
  ctx.u_diff->solve(w.rhs, out.u);
}

inline void step_imsp_core(const StateField& s, StateField& out,
                           const SimConfig& cfg, const LinearSolveContext& ctx,
                           StepWorkspace& w) {
  const ModelParams& p = cfg.params;
  const double ht = cfg.ht;
  // Pointwise affine v-stage: vbar = vn + ht*g(un, vbar).
  v_rhs(s.u, s.v, p, ht, w.rhs);
  w.rhs /= 1.0 + ht * p.k2;  // vbar
  chemotaxis_divergence(s.u, w.rhs, cfg.grid, ctx.A, w.work, w.chem);
  f_reaction(s.u, w.rhs, p, w.fval);
  w.fval = s.u + ht * p.beta * w.chem + ht * w.fval;  // ubar
  ctx.u_diff->solve(w.fval, out.u);
  ctx.v_diff->solve(w.rhs, out.v);
}

inline void step_core(Scheme sc, const StateField& s, StateField& out,
                      const SimConfig& cfg, const LinearSolveContext& ctx,
                      StepWorkspace& w) {
  switch (sc) {
    case Scheme::SymplecticEuler:
      require(ctx.v_coupled != nullptr, "context lacks the coupled v-solver");
      step_se_core(s, out, cfg, ctx, w);
      return;
    case Scheme::IMSP_IE:
      require(ctx.v_coupled && ctx.u_diff, "context lacks IMSP_IE solvers");
      step_imsp_ie_core(s, out, cfg, ctx, w);
      return;
    case Scheme::IMSP:
      require(ctx.u_diff && ctx.v_diff, "context lacks IMSP solvers");
      step_imsp_core(s, out, cfg, ctx, w);
      return;
  }
}

}  // namespace detail

inline StateField initial_condition(const SimConfig& cfg) {
  cfg.validate();
  const Equilibrium eq = equilibrium(cfg.params);
  std::mt19937_64 eng(cfg.ic.seed);
  StateField s;
  s.u = perturbed_constant(eq.u_star, cfg.ic.a_u, cfg.grid.n(), eng);
  s.v = perturbed_constant(eq.v_star, cfg.ic.a_v, cfg.grid.n(), eng);
  return s;
}

inline StateField step_symplectic_euler(const StateField& s,
                                        const LinearSolveContext& ctx,
                                        const SimConfig& cfg) {
  detail::StepWorkspace w;
  w.resize(cfg.grid.n());
  StateField out;
  out.u.resize(cfg.grid.n());
  out.v.resize(cfg.grid.n());
  detail::step_core(Scheme::SymplecticEuler, s, out, cfg, ctx, w);
  return out;
}

inline StateField step_imsp_ie(const StateField& s,
                               const LinearSolveContext& ctx,
                               const SimConfig& cfg) {
  detail::StepWorkspace w;
  w.resize(cfg.grid.n());
  StateField out;
  out.u.resize(cfg.grid.n());
  out.v.resize(cfg.grid.n());
  detail::step_core(Scheme::IMSP_IE, s, out, cfg, ctx, w);
  return out;
}

inline StateField step_imsp(const StateField& s, const LinearSolveContext& ctx,
                            const SimConfig& cfg) {
  detail::StepWorkspace w;
  w.resize(cfg.grid.n());
  StateField out;
  out.u.resize(cfg.grid.n());
  out.v.resize(cfg.grid.n());
  detail::step_core(Scheme::IMSP, s, out, cfg, ctx, w);
  return out;
}

// Number of recorded snapshot columns for a run: snapshots are taken at
// steps k*eff, k = 0..m-1, with eff = min(stride, steps) and
// m = ceil(steps/eff), floored at 2. Column 1 is always the initial state;
// the last recorded step (m-1)*eff reaches the final step only when the
// stride covers the whole run.
inline long snapshot_count(long steps, long stride) {
  const long eff = std::min(stride, steps);
  long m = steps / eff + ((steps % eff) ? 1 : 0);
  return std::max<long>(2, m);
}

struct SimResult {
  SnapshotMatrix X;
  std::vector<double> mean_t, mean_u, mean_v;
  double integration_seconds = 0.0;
  long steps = 0;
  double T_effective = 0.0;
};

// Integrate round(T/ht) steps, recording (u,v) and the spatial means at
// every snapshot instant. The reported wall-clock covers the stepping loop
// only (operator assembly and factorization excluded).
inline SimResult simulate(const SimConfig& cfg) {
  cfg.validate();
  const long n = cfg.grid.n();
  const long steps = cfg.steps();
  const long eff = std::min(cfg.snapshot_stride, steps);
  const long m = snapshot_count(steps, cfg.snapshot_stride);

  LinearSolveContext ctx = make_context(cfg);
  detail::StepWorkspace w;
  w.resize(n);

  SimResult res;
  res.steps = steps;
  res.T_effective = static_cast<double>(steps) * cfg.ht;
  res.X.nx = cfg.grid.nx;
  res.X.ny = cfg.grid.ny;
  res.X.m = m;
  res.X.t0 = 0.0;
  res.X.dt_snap = cfg.ht * static_cast<double>(eff);
  res.X.Lx = cfg.grid.Lx;
  res.X.Ly = cfg.grid.Ly;
  res.X.data.resize(2 * n, m);
  res.mean_t.reserve(m);
  res.mean_u.reserve(m);
  res.mean_v.reserve(m);

  StateField cur = initial_condition(cfg);
  StateField nxt;
  nxt.u.resize(n);
  nxt.v.resize(n);

  const auto record = [&](long col, long step, const StateField& s) {
    res.X.data.col(col).head(n) = s.u;
    res.X.data.col(col).tail(n) = s.v;
    res.mean_t.push_back(static_cast<double>(step) * cfg.ht);
    res.mean_u.push_back(spatial_mean(s.u, cfg.grid));
    res.mean_v.push_back(spatial_mean(s.v, cfg.grid));
  };

  const auto tic = std::chrono::steady_clock::now();
  record(0, 0, cur);
  long col = 1;
  for (long step = 1; step <= steps; ++step) {
    detail::step_core(cfg.scheme, cur, nxt, cfg, ctx, w);
    if (!nxt.finite()) throw BlowupError(step);
    std::swap(cur, nxt);
    if (col < m && step == col * eff) {
      record(col, step, cur);
      ++col;
    }
  }
  const auto toc = std::chrono::steady_clock::now();
  require(col == m, "simulate: snapshot bookkeeping mismatch");
  res.integration_seconds = std::chrono::duration<double>(toc - tic).count();
  return res;
}

}  // namespace chemo
