#pragma once

// Chart geometry for a convex geodesic disk of the unit hyperboloid
// H^n(1) = {x : <x,x>_L = -1, x_{n+1} > 0} in Minkowski R^{n+1}_1,
// together with the finite-difference grid the solver runs on.
//
// n = 1: arclength chart rho in [-R, R], sigma = 1, flat connection.
// n = 2: projected polar chart (r, theta), r in (0, R], obtained by
//        dropping the x_3 = sqrt(1 + r^2) coordinate of the hyperboloid:
//            sigma_rr = 1/(1+r^2),  sigma_thth = r^2,  sigma_rth = 0.
//        Gauss curvature of sigma is -1; closed-form Christoffels below.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace imcf {

struct DomainSpec {
  int n = 2;          // base dimension, 1 or 2
  double R = 1.0;     // chart radius; geodesic radius is asinh(R) for n = 2
  int Nr = 32;        // radial nodes (n=2) / total nodes on [-R, R] (n=1)
  int Ntheta = 32;    // angular nodes, even, n=2 only
};

struct ChartPoint {
  double x0 = 0.0;  // rho (n=1) or r (n=2)
  double x1 = 0.0;  // theta (n=2)
};

/// Metric data of sigma at one chart point, chart components.
struct MetricAtPoint {
  int n = 2;
  double sig[2][2] = {{0, 0}, {0, 0}};      // sigma_ij
  double sig_inv[2][2] = {{0, 0}, {0, 0}};  // sigma^ij
  double sqrt_det = 0.0;
  double gamma[2][2][2] = {};  // gamma[k][i][j] = Gamma^k_ij
};

/// Closed-form sigma, sigma^{-1}, sqrt(det sigma), Christoffels.
/// n=2 expects p.x0 = r > 0 (the grid never places a node at the pole).
inline MetricAtPoint metric_at(const ChartPoint& p, int n) {
  MetricAtPoint m;
  m.n = n;
  if (n == 1) {
    m.sig[0][0] = 1.0;
    m.sig_inv[0][0] = 1.0;
    m.sqrt_det = 1.0;
    return m;  // gamma = 0
  }
  const double r = p.x0;
  if (!(r > 0.0)) throw std::invalid_argument("metric_at: r must be positive");
  const double opr2 = 1.0 + r * r;
  m.sig[0][0] = 1.0 / opr2;
  m.sig[1][1] = r * r;
  m.sig_inv[0][0] = opr2;
  m.sig_inv[1][1] = 1.0 / (r * r);
  m.sqrt_det = r / std::sqrt(opr2);
  // Nonzero Christoffels of the diagonal metric (functions of r only):
  //   Gamma^r_rr = -r/(1+r^2), Gamma^r_thth = -r(1+r^2), Gamma^th_rth = 1/r.
  m.gamma[0][0][0] = -r / opr2;
  m.gamma[0][1][1] = -r * opr2;
  m.gamma[1][0][1] = m.gamma[1][1][0] = 1.0 / r;
  return m;
}

/// sigma-measure of the full geodesic disk: 2R (n=1), 2*pi*(sqrt(1+R^2)-1) (n=2).
inline double disk_measure(int n, double R) {
  if (n == 1) return 2.0 * R;
  return 2.0 * M_PI * (std::sqrt(1.0 + R * R) - 1.0);
}

/// Outward unit conormal of the disk boundary in chart components,
/// sigma(mu, mu) = 1. n=2: mu = sqrt(1+R^2) d_r at r = R. n=1: -+d_rho.
struct Conormal {
  int node = -1;      // owning real-node index (boundary ring / endpoint)
  double mu[2] = {0, 0};
  ChartPoint at;      // where mu lives: (R, theta_k) resp. rho = -+R
};

// Node layout.
//   n=2: real nodes idx(j,k) = j*Ntheta + k with r_j = (j+1/2)h_r (no pole
//        node, boundary face at r = R between ring Nr-1 and the ghost ring),
//        theta_k = k*h_theta periodic; one ghost ring at j = Nr.
//   n=1: real nodes i = 0..Nr-1 at rho_i = -R + i*h (endpoints included);
//        ghost indices Nr (left, at -R-h) and Nr+1 (right, at R+h).
// Neighbor index tables encode the across-the-pole stencil: ring 0's inward
// neighbor along theta_k is ring 0 at theta_k + pi (requires even Ntheta).
struct Grid {
  DomainSpec spec;
  int n_real = 0;
  int n_total = 0;  // real + ghost
  double h_r = 0.0, h_theta = 0.0;

  std::vector<ChartPoint> point;      // per real node
  std::vector<uint8_t> is_boundary;   // per real node (outermost ring / endpoints)
  std::vector<double> quad_weight;    // midpoint-cell weight, sqrt(det sigma)*cell
  std::vector<Conormal> conormals;

  // Per-real-node metric coefficients (chart components).
  std::vector<double> sig_inv_00, sig_inv_11, sqrt_det;
  std::vector<double> gamma_r_rr, gamma_r_tt, gamma_t_rt;  // zero for n=1

  // Stencil neighbor tables, one entry per real node; values index into the
  // full (real + ghost) array. Single source of truth for every difference
  // operator in the project.
  std::vector<int32_t> jp, jm, kp, km;          // +-1 in x0 / x1
  std::vector<int32_t> jpkp, jpkm, jmkp, jmkm;  // mixed-corner samples (n=2)

  int idx(int j, int k) const { return j * spec.Ntheta + k; }
  bool polar() const { return spec.n == 2; }
};

inline Grid build_grid(const DomainSpec& s) {
  if (s.n != 1 && s.n != 2) throw std::invalid_argument("domain.n must be 1 or 2");
  if (!(s.R > 0.0)) throw std::invalid_argument("domain.R must be positive");
  Grid g;
  g.spec = s;

  if (s.n == 1) {
    if (s.Nr < 3) throw std::invalid_argument("domain.Nr must be >= 3 for n=1");
    const int N = s.Nr;
    g.n_real = N;
    g.n_total = N + 2;
    g.h_r = 2.0 * s.R / (N - 1);
    g.point.resize(N);
    g.is_boundary.assign(N, 0);
    g.quad_weight.resize(N);
    g.sig_inv_00.assign(N, 1.0);
    g.sig_inv_11.assign(N, 0.0);
    g.sqrt_det.assign(N, 1.0);
    g.gamma_r_rr.assign(N, 0.0);
    g.gamma_r_tt.assign(N, 0.0);
    g.gamma_t_rt.assign(N, 0.0);
    g.jp.resize(N);
    g.jm.resize(N);
    for (int i = 0; i < N; ++i) {
      g.point[i].x0 = -s.R + i * g.h_r;
      g.quad_weight[i] = (i == 0 || i == N - 1) ? 0.5 * g.h_r : g.h_r;
      g.jm[i] = (i == 0) ? N : i - 1;          // left ghost at index N
      g.jp[i] = (i == N - 1) ? N + 1 : i + 1;  // right ghost at index N+1
    }
    g.is_boundary[0] = g.is_boundary[N - 1] = 1;
    Conormal left;
    left.node = 0;
    left.mu[0] = -1.0;
    left.at.x0 = -s.R;
    Conormal right;
    right.node = N - 1;
    right.mu[0] = 1.0;
    right.at.x0 = s.R;
    g.conormals = {left, right};
    return g;
  }

  // n = 2
  if (s.Nr < 4) throw std::invalid_argument("domain.Nr must be >= 4 for n=2");
  if (s.Ntheta < 8) throw std::invalid_argument("domain.Ntheta must be >= 8");
  if (s.Ntheta % 2 != 0)
    throw std::invalid_argument("domain.Ntheta must be even (across-the-pole stencil)");
  const int Nr = s.Nr, Nt = s.Ntheta;
  g.n_real = Nr * Nt;
  g.n_total = (Nr + 1) * Nt;  // ghost ring j = Nr
  g.h_r = s.R / Nr;
  g.h_theta = 2.0 * M_PI / Nt;

  g.point.resize(g.n_real);
  g.is_boundary.assign(g.n_real, 0);
  g.quad_weight.resize(g.n_real);
  g.sig_inv_00.resize(g.n_real);
  g.sig_inv_11.resize(g.n_real);
  g.sqrt_det.resize(g.n_real);
  g.gamma_r_rr.resize(g.n_real);
  g.gamma_r_tt.resize(g.n_real);
  g.gamma_t_rt.resize(g.n_real);
  g.jp.resize(g.n_real);
  g.jm.resize(g.n_real);
  g.kp.resize(g.n_real);
  g.km.resize(g.n_real);
  g.jpkp.resize(g.n_real);
  g.jpkm.resize(g.n_real);
  g.jmkp.resize(g.n_real);
  g.jmkm.resize(g.n_real);

  const int half = Nt / 2;
  for (int j = 0; j < Nr; ++j) {
    const double r = (j + 0.5) * g.h_r;
    const ChartPoint rp{r, 0.0};
    const MetricAtPoint m = metric_at(rp, 2);
    for (int k = 0; k < Nt; ++k) {
      const int i = g.idx(j, k);
      g.point[i] = {r, k * g.h_theta};
      g.quad_weight[i] = m.sqrt_det * g.h_r * g.h_theta;
      g.sig_inv_00[i] = m.sig_inv[0][0];
      g.sig_inv_11[i] = m.sig_inv[1][1];
      g.sqrt_det[i] = m.sqrt_det;
      g.gamma_r_rr[i] = m.gamma[0][0][0];
      g.gamma_r_tt[i] = m.gamma[0][1][1];
      g.gamma_t_rt[i] = m.gamma[1][0][1];

      const int kpp = (k + 1) % Nt, kmm = (k + Nt - 1) % Nt;
      g.kp[i] = g.idx(j, kpp);
      g.km[i] = g.idx(j, kmm);
      g.jp[i] = g.idx(j + 1, k);  // j = Nr-1 lands on the ghost ring
      g.jpkp[i] = g.idx(j + 1, kpp);
      g.jpkm[i] = g.idx(j + 1, kmm);
      if (j == 0) {
        // Across the pole: the sample at chart radius -h_r/2 along theta_k
        // is the ring-0 node at theta_k + pi (smooth continuation, so the
        // same index shift applies to the mixed-corner samples).
        const int ko = (k + half) % Nt;
        g.jm[i] = g.idx(0, ko);
        g.jmkp[i] = g.idx(0, (ko + 1) % Nt);
        g.jmkm[i] = g.idx(0, (ko + Nt - 1) % Nt);
      } else {
        g.jm[i] = g.idx(j - 1, k);
        g.jmkp[i] = g.idx(j - 1, kpp);
        g.jmkm[i] = g.idx(j - 1, kmm);
      }
    }
  }
  const double muR = std::sqrt(1.0 + s.R * s.R);
  for (int k = 0; k < Nt; ++k) {
    const int i = g.idx(Nr - 1, k);
    g.is_boundary[i] = 1;
    Conormal c;
    c.node = i;
    c.mu[0] = muR;  // sigma_rr(R) * muR^2 = 1
    c.at = {s.R, k * g.h_theta};
    g.conormals.push_back(c);
  }
  return g;
}

}  // namespace imcf
