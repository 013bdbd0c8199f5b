#pragma once

// Extrinsic geometry of the spacelike radial graph u(x)*x per node:
// induced metric, second fundamental form, mean curvature, support
// function and the flow speed factors.
//
// Conventions (past-directed unit normal nu, <nu,nu>_L = -1):
//   g_ij   = u^2 sigma_ij - u_i u_j
//   g^ij   = u^-2 (sigma^ij + phi^i phi^j / v^2)
//   h_ij   = (u/v)(phi_i phi_j - phi_ij - sigma_ij)
//   H      = -g^ij h_ij = (n + (sigma^ij + phi^i phi^j/v^2) phi_ij)/(u v)
// so the round graph u == r0 has H = n/r0 > 0 and h_ij = -r0 sigma_ij.

#include <cmath>
#include <vector>

#include "imcf/field.hpp"

namespace imcf {

struct CurvatureSlice {
  int n = 2;
  double alpha = 0.0;
  // per real node; *01/*11 stay zero for n = 1
  std::vector<double> g00, g01, g11;     // induced metric
  std::vector<double> gi00, gi01, gi11;  // inverse induced metric
  std::vector<double> h00, h01, h11;     // second fundamental form
  std::vector<double> H;                 // mean curvature, D/(u v)
  std::vector<double> H_contract;        // independent route: -g^ij h_ij
  std::vector<double> A_sq;              // |A|^2 = h^i_j h^j_i
  std::vector<double> conv;              // D = n + tilde-sigma^ij phi_ij
  std::vector<double> w;                 // support function <X,nu>_L = u/v
  std::vector<double> speed;             // Phi = u^-alpha / H
  std::vector<double> psi;               // Psi = v / (u^{1+alpha} H)
  std::vector<double> area_el;           // u^n v sqrt(det sigma)
  double hausdorff = 0.0;                // sum of u^n v * quad_weight
};

/// Full curvature slice; field ghosts are refreshed internally.
inline CurvatureSlice curvature_slice(const GraphField& f, const Grid& g,
                                      double alpha) {
  GraphField tmp = f;
  apply_neumann(tmp, g);
  const DifferentialPack p = differentiate(tmp, g);
  const int N = g.n_real;
  CurvatureSlice s;
  s.n = g.spec.n;
  s.alpha = alpha;
  s.g00.resize(N);
  s.g01.assign(N, 0.0);
  s.g11.assign(N, 0.0);
  s.gi00.resize(N);
  s.gi01.assign(N, 0.0);
  s.gi11.assign(N, 0.0);
  s.h00.resize(N);
  s.h01.assign(N, 0.0);
  s.h11.assign(N, 0.0);
  s.H.resize(N);
  s.H_contract.resize(N);
  s.A_sq.resize(N);
  s.conv.resize(N);
  s.w.resize(N);
  s.speed.resize(N);
  s.psi.resize(N);
  s.area_el.resize(N);
  s.hausdorff = 0.0;

  for (int i = 0; i < N; ++i) {
    const double u = tmp.u[i];
    const double vsq = 1.0 - p.grad_sq[i];
    const double v = std::sqrt(vsq);
    const double u2 = u * u;
    if (g.polar()) {
      const double s00 = 1.0 / g.sig_inv_00[i], s11 = 1.0 / g.sig_inv_11[i];
      const double p0 = p.d0[i], p1 = p.d1[i];
      const double up0 = g.sig_inv_00[i] * p0, up1 = g.sig_inv_11[i] * p1;
      s.g00[i] = u2 * (s00 - p0 * p0);
      s.g01[i] = u2 * (-p0 * p1);
      s.g11[i] = u2 * (s11 - p1 * p1);
      s.gi00[i] = (g.sig_inv_00[i] + up0 * up0 / vsq) / u2;
      s.gi01[i] = (up0 * up1 / vsq) / u2;
      s.gi11[i] = (g.sig_inv_11[i] + up1 * up1 / vsq) / u2;
      const double uv = u / v;
      s.h00[i] = uv * (p0 * p0 - p.h00[i] - s00);
      s.h01[i] = uv * (p0 * p1 - p.h01[i]);
      s.h11[i] = uv * (p1 * p1 - p.h11[i] - s11);
      s.H_contract[i] = -(s.gi00[i] * s.h00[i] + 2.0 * s.gi01[i] * s.h01[i] +
                          s.gi11[i] * s.h11[i]);
      // h^i_j, then |A|^2 = tr((h^i_j)^2)
      const double m00 = s.gi00[i] * s.h00[i] + s.gi01[i] * s.h01[i];
      const double m01 = s.gi00[i] * s.h01[i] + s.gi01[i] * s.h11[i];
      const double m10 = s.gi01[i] * s.h00[i] + s.gi11[i] * s.h01[i];
      const double m11 = s.gi01[i] * s.h01[i] + s.gi11[i] * s.h11[i];
      s.A_sq[i] = m00 * m00 + 2.0 * m01 * m10 + m11 * m11;
    } else {
      const double p0 = p.d0[i];
      s.g00[i] = u2 * (1.0 - p0 * p0);
      s.gi00[i] = (1.0 + p0 * p0 / vsq) / u2;
      s.h00[i] = (u / v) * (p0 * p0 - p.h00[i] - 1.0);
      s.H_contract[i] = -s.gi00[i] * s.h00[i];
      const double m00 = s.gi00[i] * s.h00[i];
      s.A_sq[i] = m00 * m00;
    }
    const double D = convexity_scalar(g, p, i);
    s.conv[i] = D;
    const double H = D / (u * v);
    s.H[i] = H;
    s.w[i] = u / v;
    const double u_pow_ma = std::exp(-alpha * std::log(u));  // u^-alpha
    s.speed[i] = u_pow_ma / H;
    s.psi[i] = v * u_pow_ma / (u * H);
    const double un = (g.spec.n == 2) ? u2 : u;
    s.area_el[i] = un * v * g.sqrt_det[i];
    s.hausdorff += un * v * g.quad_weight[i];
  }
  return s;
}

/// sum over nodes of u^n v * quad_weight (the discrete n-Hausdorff measure
/// of the graph; det g = u^{2n} v^2 det sigma collapses the area element).
inline double hausdorff_measure(const GraphField& f, const Grid& g) {
  GraphField tmp = f;
  apply_neumann(tmp, g);
  const DifferentialPack p = differentiate(tmp, g);
  double total = 0.0;
  for (int i = 0; i < g.n_real; ++i) {
    const double un = (g.spec.n == 2) ? tmp.u[i] * tmp.u[i] : tmp.u[i];
    total += un * p.v[i] * g.quad_weight[i];
  }
  return total;
}

/// Anisotropy weight integral over the current slice: the right-hand side
/// of the area ODE f'(t) = -Int u^-alpha dH^n.
inline double anisotropy_integral(const GraphField& f, const Grid& g, double alpha) {
  GraphField tmp = f;
  apply_neumann(tmp, g);
  const DifferentialPack p = differentiate(tmp, g);
  double total = 0.0;
  for (int i = 0; i < g.n_real; ++i) {
    const double u = tmp.u[i];
    const double un = (g.spec.n == 2) ? u * u : u;
    total += std::pow(u, -alpha) * un * p.v[i] * g.quad_weight[i];
  }
  return total;
}

}  // namespace imcf
