#pragma once

// Reference computations the tests measure the library against. Everything
// here is built from first principles — embeddings, finite differences of
// closed forms, classical ODE integration — and shares no code with the
// routines under test.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "imcf/domain.hpp"
#include "imcf/field.hpp"

namespace oracle {

inline double lorentz_dot(const double a[3], const double b[3]) {
  return a[0] * b[0] + a[1] * b[1] - a[2] * b[2];
}

// The chart drops the third coordinate of the hyperboloid, so the inverse
// map is E(r, theta) = (r cos theta, r sin theta, sqrt(1 + r^2)).
inline void embed(double r, double theta, double out[3]) {
  out[0] = r * std::cos(theta);
  out[1] = r * std::sin(theta);
  out[2] = std::sqrt(1.0 + r * r);
}

/// sigma_ij at (r, theta) by centered differences of the embedding pulled
/// back through the Lorentz product. Step 1e-5 puts the truncation error
/// near 1e-11.
inline void pullback_metric_fd(double r, double theta, double sig[2][2]) {
  const double h = 1e-5;
  double rp[3], rm[3], tp[3], tm[3], er[3], et[3];
  embed(r + h, theta, rp);
  embed(r - h, theta, rm);
  embed(r, theta + h, tp);
  embed(r, theta - h, tm);
  for (int a = 0; a < 3; ++a) {
    er[a] = (rp[a] - rm[a]) / (2.0 * h);
    et[a] = (tp[a] - tm[a]) / (2.0 * h);
  }
  sig[0][0] = lorentz_dot(er, er);
  sig[0][1] = sig[1][0] = lorentz_dot(er, et);
  sig[1][1] = lorentz_dot(et, et);
}

/// Gamma^k_ij at radius r assembled from centered differences of the chart
/// metric: Gamma^k_ij = 1/2 sigma^{kl} (d_i sig_jl + d_j sig_il - d_l sig_ij).
/// The metric depends on r only, so all theta-derivatives vanish.
inline void christoffel_fd(double r, double gamma[2][2][2]) {
  const double h = 1e-5;
  auto sig = [](double rr, double s[2][2]) {
    s[0][0] = 1.0 / (1.0 + rr * rr);
    s[0][1] = s[1][0] = 0.0;
    s[1][1] = rr * rr;
  };
  double sp[2][2], sm[2][2], s0[2][2];
  sig(r + h, sp);
  sig(r - h, sm);
  sig(r, s0);
  double dr[2][2];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) dr[i][j] = (sp[i][j] - sm[i][j]) / (2.0 * h);
  const double inv[2][2] = {{1.0 / s0[0][0], 0.0}, {0.0, 1.0 / s0[1][1]}};
  auto ds = [&dr](int coord, int a, int b) {
    return coord == 0 ? dr[a][b] : 0.0;
  };
  for (int k = 0; k < 2; ++k)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        double acc = 0.0;
        for (int l = 0; l < 2; ++l)
          acc += inv[k][l] * (ds(i, j, l) + ds(j, i, l) - ds(l, i, j));
        gamma[k][i][j] = 0.5 * acc;
      }
}

/// Worst |K + 1| over interior rings, K recovered from the ring metric the
/// grid stores. For an orthogonal metric E(r) dr^2 + G(r) dtheta^2 the Gauss
/// curvature is K = -(G'/sqrt(EG))' / (2 sqrt(EG)); both derivatives are
/// centered differences at the grid spacing, so the defect shrinks like h^2.
inline double max_gauss_defect(const imcf::Grid& g) {
  if (!g.polar()) throw std::invalid_argument("needs the polar chart");
  const int Nr = g.spec.Nr;
  std::vector<double> E(Nr), G(Nr);
  for (int j = 0; j < Nr; ++j) {
    const int i = g.idx(j, 0);
    E[j] = 1.0 / g.sig_inv_00[i];
    G[j] = 1.0 / g.sig_inv_11[i];
  }
  const double h = g.h_r;
  auto P = [&](int j) {
    return (G[j + 1] - G[j - 1]) / (2.0 * h) / std::sqrt(E[j] * G[j]);
  };
  double worst = 0.0;
  for (int j = 2; j + 2 < Nr; ++j) {
    const double K = -(P(j + 1) - P(j - 1)) / (2.0 * h) / (2.0 * std::sqrt(E[j] * G[j]));
    worst = std::max(worst, std::fabs(K + 1.0));
  }
  return worst;
}

/// Classical fixed-step RK4 for dy/dt = f(t, y).
inline double rk4(const std::function<double(double, double)>& f, double y0,
                  double t0, double t1, int steps) {
  double y = y0;
  const double dt = (t1 - t0) / steps;
  for (int k = 0; k < steps; ++k) {
    const double t = t0 + k * dt;
    const double k1 = f(t, y);
    const double k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1);
    const double k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2);
    const double k4 = f(t + dt, y + dt * k3);
    y += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return y;
}

/// Composite Simpson rule; intervals must be even.
inline double simpson(const std::function<double(double)>& f, double a,
                      double b, int intervals) {
  const double h = (b - a) / intervals;
  double acc = f(a) + f(b);
  for (int k = 1; k < intervals; ++k)
    acc += f(a + k * h) * ((k % 2) ? 4.0 : 2.0);
  return acc * h / 3.0;
}

}  // namespace oracle

namespace testutil {

/// Smooth admissible state without rotational symmetry: a radial bump plus a
/// quadrupole term that is a polynomial in the ambient (x, y), hence smooth
/// across the pole. Amplitudes keep sup |D phi| well under the spacelike
/// bound and the convexity scalar near n.
inline imcf::GraphField wavy_field(const imcf::Grid& g, double amp_r = 0.04,
                                   double amp_t = 0.02) {
  imcf::GraphField f = imcf::make_field(g);
  const double R2 = g.spec.R * g.spec.R;
  for (int i = 0; i < g.n_real; ++i) {
    const double x0 = g.point[i].x0;
    const double q = x0 * x0 / R2;
    double phi = amp_r * std::cos(M_PI * q);
    if (g.polar())
      phi += amp_t * x0 * x0 * std::cos(2.0 * g.point[i].x1) * (1.0 - q);
    f.phi[i] = phi;
    f.u[i] = std::exp(phi);
  }
  imcf::apply_neumann(f, g);
  return f;
}

}  // namespace testutil
