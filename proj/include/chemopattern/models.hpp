#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "chemopattern/grid.hpp"

namespace chemo {

enum class ModelVariant { MOMOS, Mimura };

// Tagged kinetics parameter set. MOMOS couples microbial biomass u to
// organic matter v (f = -k1*u - q*u^2 + k2*v, g = k1*u - k2*v + c);
// Mimura uses logistic growth (f = q*u*(1-u), g = k1*u - k2*v). beta scales
// the chemotaxis flux -beta*div(u grad v); c exists only for MOMOS.
struct ModelParams {
  ModelVariant variant = ModelVariant::MOMOS;
  double Du = 1e-3, Dv = 1e-3;
  double beta = 0.0;
  double k1 = 0.4, k2 = 0.6, q = 0.075;
  double c = 1e-3;

  void validate() const {
    require(Du > 0 && Dv > 0, "ModelParams: diffusion must be positive");
    require(k1 > 0 && k2 > 0 && q > 0, "ModelParams: rates must be positive");
    require(beta >= 0, "ModelParams: beta must be nonnegative");
    if (variant == ModelVariant::MOMOS)
      require(c > 0, "ModelParams: MOMOS carbon input c must be positive");
  }
};

struct Equilibrium {
  double u_star, v_star;
};

// Feasible (strictly positive) homogeneous equilibrium.
// MOMOS: (sqrt(c/q), (k1/k2)*sqrt(c/q) + c/k2); Mimura: (1, k1/k2).
inline Equilibrium equilibrium(const ModelParams& p) {
  p.validate();
  if (p.variant == ModelVariant::MOMOS) {
    const double u1 = std::sqrt(p.c / p.q);
    return {u1, (p.k1 / p.k2) * u1 + p.c / p.k2};
  }
  return {1.0, p.k1 / p.k2};
}

// Remaining homogeneous equilibria, for testing only: the Mimura trivial
// state (0,0) (linearly unstable) and the infeasible negative MOMOS root.
inline std::vector<Equilibrium> all_equilibria(const ModelParams& p) {
  p.validate();
  if (p.variant == ModelVariant::MOMOS) {
    const double u1 = std::sqrt(p.c / p.q);
    return {{u1, (p.k1 / p.k2) * u1 + p.c / p.k2},
            {-u1, -(p.k1 / p.k2) * u1 + p.c / p.k2}};
  }
  return {{1.0, p.k1 / p.k2}, {0.0, 0.0}};
}

inline std::pair<double, double> reaction_rhs(double u, double v,
                                              const ModelParams& p) {
  if (p.variant == ModelVariant::MOMOS)
    return {-p.k1 * u - p.q * u * u + p.k2 * v, p.k1 * u - p.k2 * v + p.c};
  return {p.q * u * (1.0 - u), p.k1 * u - p.k2 * v};
}

// Closed-form instability threshold for beta at the feasible equilibrium.
// MOMOS: beta* = (sqrt(q)/(k1*sqrt(c))) * (Du*k2 + Dv*k1 + 2*Dv*sqrt(c*q)
//                + sqrt(8*Du*Dv*k2*sqrt(c*q))).
// Mimura: beta_c = (Du*k2 + Dv*q + 2*sqrt(Du*Dv*q*k2)) / k1.
inline double chemotaxis_threshold(const ModelParams& p) {
  p.validate();
  if (p.variant == ModelVariant::MOMOS) {
    const double scq = std::sqrt(p.c * p.q);
    return (std::sqrt(p.q) / (p.k1 * std::sqrt(p.c))) *
           (p.Du * p.k2 + p.Dv * p.k1 + 2.0 * p.Dv * scq +
            std::sqrt(8.0 * p.Du * p.Dv * p.k2 * scq));
  }
  return (p.Du * p.k2 + p.Dv * p.q +
          2.0 * std::sqrt(p.Du * p.Dv * p.q * p.k2)) /
         p.k1;
}

// Coefficients of Q0(lambda) = det H(lambda) = A0*lambda^2 + B0*lambda + C0,
// the constant term of the linearization's characteristic polynomial.
// Instability holds iff Q0 < 0 for some lambda > 0, i.e. B0 < 0 and
// delta* = B0^2 - 4*A0*C0 > 0 (strict, equality counts as stable).
struct InstabilityReport {
  double beta_threshold;
  double A0, B0, C0;
  double delta_star;
  bool unstable;
};

inline InstabilityReport instability_conditions(const ModelParams& p) {
  p.validate();
  InstabilityReport r{};
  r.beta_threshold = chemotaxis_threshold(p);
  r.A0 = p.Du * p.Dv;
  if (p.variant == ModelVariant::MOMOS) {
    const double scq = std::sqrt(p.c * p.q);
    r.B0 = p.Du * p.k2 + p.Dv * (2.0 * scq + p.k1) -
           p.beta * std::sqrt(p.c / p.q) * p.k1;
    r.C0 = 2.0 * p.k2 * scq;
  } else {
    r.B0 = p.Du * p.k2 + p.Dv * p.q - p.beta * p.k1;
    r.C0 = p.q * p.k2;
  }
  r.delta_star = r.B0 * r.B0 - 4.0 * r.A0 * r.C0;
  r.unstable = (r.B0 < 0.0) && (r.delta_star > 0.0);
  return r;
}

namespace detail {

// Jacobian of the kinetics at the feasible equilibrium.
inline void kinetics_jacobian(const ModelParams& p, double& fu, double& fv,
                              double& gu, double& gv) {
  if (p.variant == ModelVariant::MOMOS) {
    fu = -p.k1 - 2.0 * std::sqrt(p.c * p.q);
    fv = p.k2;
  } else {
    fu = -p.q;
    fv = 0.0;
  }
  gu = p.k1;
  gv = -p.k2;
}

}  // namespace detail

// Largest real part over the two roots of mu^2 + Q1(lambda)*mu + Q0(lambda),
// the growth rate of the spatial mode with Neumann-Laplacian eigenvalue
// lambda_k >= 0. H(lambda) = J + [[-Du*l, +beta*u**l], [0, -Dv*l]]; the
// chemotaxis term enters H12 with a plus sign since -beta*div(u* grad v)
// maps an eigenmode of -Lap to +beta*u**lambda times itself.
inline double dispersion_max_growth(const ModelParams& p, double lambda_k) {
  p.validate();
  require(lambda_k >= 0.0, "dispersion_max_growth: lambda_k must be >= 0");
  double fu, fv, gu, gv;
  detail::kinetics_jacobian(p, fu, fv, gu, gv);
  const double us = equilibrium(p).u_star;
  const double h11 = fu - p.Du * lambda_k;
  const double h12 = fv + p.beta * us * lambda_k;
  const double h21 = gu;
  const double h22 = gv - p.Dv * lambda_k;
  const double tr = h11 + h22;
  const double det = h11 * h22 - h12 * h21;
  const double disc = tr * tr - 4.0 * det;
  if (disc >= 0.0) return 0.5 * (tr + std::sqrt(disc));
  return 0.5 * tr;
}

// Instability mask over a (beta, q) rectangle sampled at cell centers;
// mask[ib*nq + iq] = instability_conditions with beta_ib, q_iq substituted
// into p_base. Row-major with beta as the slow axis.
struct BifurcationMask {
  std::vector<double> betas, qs;
  std::vector<unsigned char> unstable;  // betas.size() * qs.size()
};

inline BifurcationMask bifurcation_scan(const ModelParams& p_base,
                                        double beta_lo, double beta_hi,
                                        double q_lo, double q_hi, int n_beta,
                                        int n_q) {
  require(beta_lo >= 0 && beta_hi > beta_lo,
          "bifurcation_scan: bad beta range");
  require(q_lo > 0 && q_hi > q_lo, "bifurcation_scan: bad q range");
  require(n_beta >= 2 && n_q >= 2, "bifurcation_scan: resolution must be >=2");
  BifurcationMask m;
  m.betas.resize(n_beta);
  m.qs.resize(n_q);
  for (int ib = 0; ib < n_beta; ++ib)
    m.betas[ib] = beta_lo + (beta_hi - beta_lo) * (ib + 0.5) / n_beta;
  for (int iq = 0; iq < n_q; ++iq)
    m.qs[iq] = q_lo + (q_hi - q_lo) * (iq + 0.5) / n_q;
  m.unstable.resize(static_cast<size_t>(n_beta) * n_q);
  ModelParams p = p_base;
  for (int ib = 0; ib < n_beta; ++ib) {
    p.beta = m.betas[ib];
    for (int iq = 0; iq < n_q; ++iq) {
      p.q = m.qs[iq];
      m.unstable[static_cast<size_t>(ib) * n_q + iq] =
          instability_conditions(p).unstable ? 1 : 0;
    }
  }
  return m;
}

}  // namespace chemo
