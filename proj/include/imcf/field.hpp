#pragma once

// Radial graph state over the disk: the scalar phi = log u per grid node
// (u > 0 is the radial height, graph point u(x)*x), plus its first and
// second covariant derivatives with respect to sigma.
//
// Admissibility of a state means spacelike |D phi|_sigma < 1 and strict
// mean convexity D := n + (sigma^{ij} + phi^i phi^j / v^2) phi_ij > 0.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "imcf/domain.hpp"

namespace imcf {

enum class Flavor { physical, rescaled };

struct GraphField {
  Flavor flavor = Flavor::physical;
  double time = 0.0;          // t (physical) or s (rescaled)
  std::vector<double> phi;    // size grid.n_total; ghost entries past n_real
  std::vector<double> u;      // exp(phi), kept in lockstep by the stepper
};

/// Mirror ghost fill enforcing the zero-Neumann boundary condition: the
/// centered difference of phi along the conormal direction vanishes at the
/// boundary (face r = R for n=2, endpoint nodes for n=1).
inline void apply_neumann(GraphField& f, const Grid& g) {
  if (g.polar()) {
    const int Nr = g.spec.Nr, Nt = g.spec.Ntheta;
    const int last = g.idx(Nr - 1, 0), ghost = g.idx(Nr, 0);
    for (int k = 0; k < Nt; ++k) {
      f.phi[ghost + k] = f.phi[last + k];
      f.u[ghost + k] = f.u[last + k];
    }
  } else {
    const int N = g.spec.Nr;
    f.phi[N] = f.phi[1];          // left ghost mirrors node 1 across rho = -R
    f.phi[N + 1] = f.phi[N - 2];  // right ghost mirrors node N-2 across rho = R
    f.u[N] = f.u[1];
    f.u[N + 1] = f.u[N - 2];
  }
}

inline GraphField make_field(const Grid& g, Flavor flavor = Flavor::physical) {
  GraphField f;
  f.flavor = flavor;
  f.phi.assign(g.n_total, 0.0);
  f.u.assign(g.n_total, 1.0);
  return f;
}

/// phi0 == c everywhere.
inline GraphField make_constant(const Grid& g, double c,
                                Flavor flavor = Flavor::physical) {
  GraphField f = make_field(g, flavor);
  const double uc = std::exp(c);
  std::fill(f.phi.begin(), f.phi.end(), c);
  std::fill(f.u.begin(), f.u.end(), uc);
  apply_neumann(f, g);
  return f;
}

/// Gradient (chart components) and covariant Hessian of phi at every real
/// node, with the pointwise Lorentz factor v = sqrt(1 - |D phi|^2_sigma).
/// Ghosts must be filled before calling.
struct DifferentialPack {
  std::vector<double> d0, d1;         // phi_r, phi_theta (d1 = 0 for n=1)
  std::vector<double> h00, h01, h11;  // covariant phi_ij
  std::vector<double> grad_sq;        // sigma^{ij} phi_i phi_j
  std::vector<double> v;              // NaN-free only while spacelike
};

inline DifferentialPack differentiate(const GraphField& f, const Grid& g) {
  DifferentialPack p;
  const int N = g.n_real;
  p.d0.resize(N);
  p.d1.assign(N, 0.0);
  p.h00.resize(N);
  p.h01.assign(N, 0.0);
  p.h11.assign(N, 0.0);
  p.grad_sq.resize(N);
  p.v.resize(N);
  const double* phi = f.phi.data();

  if (!g.polar()) {
    const double i2h = 1.0 / (2.0 * g.h_r), ih2 = 1.0 / (g.h_r * g.h_r);
    for (int i = 0; i < N; ++i) {
      const double c = phi[i], pl = phi[g.jm[i]], pr = phi[g.jp[i]];
      p.d0[i] = (pr - pl) * i2h;
      p.h00[i] = (pr - 2.0 * c + pl) * ih2;
      p.grad_sq[i] = p.d0[i] * p.d0[i];
      p.v[i] = std::sqrt(1.0 - p.grad_sq[i]);
    }
    return p;
  }

  const double i2hr = 1.0 / (2.0 * g.h_r), ihr2 = 1.0 / (g.h_r * g.h_r);
  const double i2ht = 1.0 / (2.0 * g.h_theta), iht2 = 1.0 / (g.h_theta * g.h_theta);
  const double i4 = i2hr * i2ht;
  for (int i = 0; i < N; ++i) {
    const double c = phi[i];
    const double pjp = phi[g.jp[i]], pjm = phi[g.jm[i]];
    const double pkp = phi[g.kp[i]], pkm = phi[g.km[i]];
    const double dr = (pjp - pjm) * i2hr;
    const double dt = (pkp - pkm) * i2ht;
    const double drr = (pjp - 2.0 * c + pjm) * ihr2;
    const double dtt = (pkp - 2.0 * c + pkm) * iht2;
    const double drt =
        (phi[g.jpkp[i]] - phi[g.jpkm[i]] - phi[g.jmkp[i]] + phi[g.jmkm[i]]) * i4;
    p.d0[i] = dr;
    p.d1[i] = dt;
    p.h00[i] = drr - g.gamma_r_rr[i] * dr;
    p.h01[i] = drt - g.gamma_t_rt[i] * dt;
    p.h11[i] = dtt - g.gamma_r_tt[i] * dr;
    p.grad_sq[i] = g.sig_inv_00[i] * dr * dr + g.sig_inv_11[i] * dt * dt;
    p.v[i] = std::sqrt(1.0 - p.grad_sq[i]);
  }
  return p;
}

/// Mean-convexity scalar D = n + (sigma^{ij} + phi^i phi^j / v^2) phi_ij.
/// H = D / (u v), so admissibility requires D > 0.
inline double convexity_scalar(const Grid& g, const DifferentialPack& p, int i) {
  const double vsq = 1.0 - p.grad_sq[i];
  if (g.polar()) {
    const double pr = g.sig_inv_00[i] * p.d0[i];  // phi^r
    const double pt = g.sig_inv_11[i] * p.d1[i];  // phi^theta
    const double contr = g.sig_inv_00[i] * p.h00[i] + g.sig_inv_11[i] * p.h11[i] +
                         (pr * pr * p.h00[i] + 2.0 * pr * pt * p.h01[i] +
                          pt * pt * p.h11[i]) /
                             vsq;
    return 2.0 + contr;
  }
  return 1.0 + (1.0 + p.d0[i] * p.d0[i] / vsq) * p.h00[i];
}

struct AdmissibilityReport {
  bool ok = false;
  double min_spacelike_margin = 0.0;  // min over nodes of 1 - |D phi|^2
  double min_convexity = 0.0;         // min over nodes of D
  std::vector<int> bad_nodes;
};

/// Strict admissibility with margin 1e-12; degenerate states are rejected,
/// never projected back.
inline AdmissibilityReport check_admissible(const GraphField& f, const Grid& g) {
  constexpr double kMargin = 1e-12;
  AdmissibilityReport rep;
  GraphField tmp = f;
  apply_neumann(tmp, g);
  const DifferentialPack p = differentiate(tmp, g);
  rep.min_spacelike_margin = std::numeric_limits<double>::infinity();
  rep.min_convexity = std::numeric_limits<double>::infinity();
  rep.ok = true;
  for (int i = 0; i < g.n_real; ++i) {
    const double sl = 1.0 - p.grad_sq[i];
    const double D = (sl > 0.0) ? convexity_scalar(g, p, i)
                                : -std::numeric_limits<double>::infinity();
    bool bad = !(sl > kMargin) || !(D > kMargin) || !std::isfinite(f.phi[i]);
    rep.min_spacelike_margin = std::min(rep.min_spacelike_margin, sl);
    rep.min_convexity = std::min(rep.min_convexity, D);
    if (bad) {
      rep.ok = false;
      if (rep.bad_nodes.size() < 32) rep.bad_nodes.push_back(i);
    }
  }
  return rep;
}

/// u0 = r0 * (1 + eps * cos(pi * x0^2 / R^2)): smooth at the pole, exact
/// zero Neumann derivative at the boundary. eps is capped so that the
/// discrete sup |D phi0|_sigma stays <= 0.5.
inline GraphField make_bump(const Grid& g, double r0, double eps,
                            Flavor flavor = Flavor::physical) {
  if (!(r0 > 0.0)) throw std::invalid_argument("bump r0 must be positive");
  if (!(eps > -1.0 && eps < 1.0)) throw std::invalid_argument("bump eps must lie in (-1,1)");
  GraphField f = make_field(g, flavor);
  const double R2 = g.spec.R * g.spec.R;
  for (int i = 0; i < g.n_real; ++i) {
    const double q = g.point[i].x0 * g.point[i].x0 / R2;
    const double uu = r0 * (1.0 + eps * std::cos(M_PI * q));
    f.u[i] = uu;
    f.phi[i] = std::log(uu);
  }
  apply_neumann(f, g);
  const DifferentialPack p = differentiate(f, g);
  double worst = 0.0;
  for (int i = 0; i < g.n_real; ++i) worst = std::max(worst, p.grad_sq[i]);
  if (std::sqrt(worst) > 0.5)
    throw std::invalid_argument("bump eps too large: sup |D phi0| exceeds 0.5");
  return f;
}

}  // namespace imcf
