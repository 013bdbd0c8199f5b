#pragma once

// Explicit time stepping for the graph scalar equation
//
//   physical:  d phi / dt = Q  = -e^{-alpha phi} (1 - |D phi|^2) / D
//   rescaled:  d phi~/ ds = Q~ = -e^{-alpha phi~} (1 - |D phi~|^2) / D~ + 1/n
//
// with D = n + (sigma^{ij} + phi^i phi^j / v^2) phi_ij. Both modes share one
// kernel; the rescaled mode only adds the constant 1/n and reads the tilde
// field. The kernel fuses the right-hand side with the per-node stability
// denominator and the admissibility minima, so a forward-Euler step is a
// single sweep.
//
// Stability: Euler for Q^{ij} phi_ij with chart spacings (h0, h1) needs
//   dt <= 1 / (2 Q^{00}/h0^2 + 2 Q^{11}/h1^2 + |Q^{01}|/(h0 h1)),
// Q^{ij} = e^{-alpha phi} v^2 (sigma^{ij} + phi^i phi^j/v^2) / D^2 being the
// parabolic coefficient. stable_dt takes the node-min times cfl. Doubling
// the resolution of either grid direction quarters the admissible dt; for
// u == r0 the bound scales like r0^alpha.

#include <cmath>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "imcf/field.hpp"

namespace imcf {

enum class Stepper { euler, rk2 };
enum class FlowMode { physical, rescaled };

struct FlowParams {
  double alpha = 0.0;  // <= 0
  Stepper stepper = Stepper::euler;
  FlowMode mode = FlowMode::physical;
  double cfl = 0.4;
  double horizon = 1.0;  // t_end (physical) or s_end (rescaled)
  long max_steps = 0;    // 0 = no cap
};

enum class FlowStatus {
  ok,            // reached horizon
  step_limit,    // max_steps exhausted first
  callback_stop, // monitor requested stop (e.g. rescaled convergence)
  spacelike_lost,
  convexity_lost,
  nonfinite,
};

namespace detail {

// Anisotropy factor e^{-alpha phi} = u^{-alpha}. The acceptance-relevant
// exponents avoid exp in the hot loop.
enum AnisoMode { kAlphaZero, kAlphaMinusOne, kAlphaMinusHalf, kAlphaGeneral };

inline AnisoMode aniso_mode(double alpha) {
  if (alpha == 0.0) return kAlphaZero;
  if (alpha == -1.0) return kAlphaMinusOne;
  if (alpha == -0.5) return kAlphaMinusHalf;
  return kAlphaGeneral;
}

template <AnisoMode M>
inline double aniso(double phi, double u, double alpha) {
  if constexpr (M == kAlphaZero) return 1.0;
  if constexpr (M == kAlphaMinusOne) return u;
  if constexpr (M == kAlphaMinusHalf) return std::sqrt(u);
  return std::exp(-alpha * phi);
}

struct KernelOut {
  double denom_max = 0.0;  // max node stability denominator
  double min_vsq = 1.0;    // min 1 - |D phi|^2
  double min_D = 1e300;    // min mean-convexity scalar
  double q_sum = 0.0;      // NaN/inf detector
};

template <AnisoMode M>
inline KernelOut rhs_line(const Grid& g, const double* phi, const double* u,
                          double alpha, double add, double* q) {
  KernelOut out;
  const int N = g.n_real;
  const double i2h = 1.0 / (2.0 * g.h_r);
  const double ih2 = 1.0 / (g.h_r * g.h_r);
  const double ih2x = 2.0 * ih2;
  for (int i = 0; i < N; ++i) {
    const double c = phi[i];
    const double pl = phi[g.jm[i]], pr = phi[g.jp[i]];
    const double d = (pr - pl) * i2h;
    const double dd = (pr - 2.0 * c + pl) * ih2;
    const double vsq = 1.0 - d * d;
    const double ivsq = 1.0 / vsq;
    const double st = 1.0 + d * d * ivsq;  // tilde-sigma^{rr}
    const double D = 1.0 + st * dd;
    const double an = aniso<M>(c, u[i], alpha);
    const double qi = -an * vsq / D + add;
    const double coef = an * vsq / (D * D);
    const double denom = coef * st * ih2x;
    q[i] = qi;
    out.q_sum += qi;
    if (vsq < out.min_vsq) out.min_vsq = vsq;
    if (D < out.min_D) out.min_D = D;
    if (denom > out.denom_max) out.denom_max = denom;
  }
  return out;
}

// One polar node given its nine stencil samples and ring constants.
template <AnisoMode M>
inline void eval_polar(double c, double pjp, double pjm, double pkp, double pkm,
                       double qpp, double qpm, double qmp, double qmm, double uu,
                       double alpha, double add, double i2hr, double ihr2,
                       double i2ht, double iht2, double i4, double s00i,
                       double s11i, double gm_rr, double gm_tt, double gm_rt,
                       double ihr2x, double iht2x, double ihrht, double* q_out,
                       KernelOut* out) {
  const double dr = (pjp - pjm) * i2hr;
  const double dt = (pkp - pkm) * i2ht;
  const double drr = (pjp - 2.0 * c + pjm) * ihr2;
  const double dtt = (pkp - 2.0 * c + pkm) * iht2;
  const double drt = (qpp - qpm - qmp + qmm) * i4;
  const double hrr = drr - gm_rr * dr;
  const double hrt = drt - gm_rt * dt;
  const double htt = dtt - gm_tt * dr;
  const double vsq = 1.0 - (s00i * dr * dr + s11i * dt * dt);
  const double ivsq = 1.0 / vsq;
  const double pr = s00i * dr, pt = s11i * dt;
  const double st00 = s00i + pr * pr * ivsq;
  const double st01 = pr * pt * ivsq;
  const double st11 = s11i + pt * pt * ivsq;
  const double D = 2.0 + st00 * hrr + 2.0 * st01 * hrt + st11 * htt;
  const double an = aniso<M>(c, uu, alpha);
  const double qi = -an * vsq / D + add;
  const double coef = an * vsq / (D * D);
  const double denom =
      coef * (st00 * ihr2x + st11 * iht2x + std::fabs(st01) * ihrht);
  *q_out = qi;
  out->q_sum += qi;
  if (vsq < out->min_vsq) out->min_vsq = vsq;
  if (D < out->min_D) out->min_D = D;
  if (denom > out->denom_max) out->denom_max = denom;
}

template <AnisoMode M>
inline KernelOut rhs_polar(const Grid& g, const double* phi, const double* u,
                           double alpha, double add, double* q) {
  KernelOut out;
  const int Nr = g.spec.Nr, Nt = g.spec.Ntheta;
  const double i2hr = 1.0 / (2.0 * g.h_r), ihr2 = 1.0 / (g.h_r * g.h_r);
  const double i2ht = 1.0 / (2.0 * g.h_theta), iht2 = 1.0 / (g.h_theta * g.h_theta);
  const double i4 = i2hr * i2ht;
  const double ihr2x = 2.0 * ihr2, iht2x = 2.0 * iht2;
  const double ihrht = 1.0 / (g.h_r * g.h_theta);

  // Ring 0 goes through the index tables (across-the-pole neighbors).
  {
    const int base = 0;
    const double s00i = g.sig_inv_00[base], s11i = g.sig_inv_11[base];
    const double gm_rr = g.gamma_r_rr[base], gm_tt = g.gamma_r_tt[base];
    const double gm_rt = g.gamma_t_rt[base];
    for (int k = 0; k < Nt; ++k) {
      const int i = k;
      eval_polar<M>(phi[i], phi[g.jp[i]], phi[g.jm[i]], phi[g.kp[i]],
                    phi[g.km[i]], phi[g.jpkp[i]], phi[g.jpkm[i]],
                    phi[g.jmkp[i]], phi[g.jmkm[i]], u[i], alpha, add, i2hr,
                    ihr2, i2ht, iht2, i4, s00i, s11i, gm_rr, gm_tt, gm_rt,
                    ihr2x, iht2x, ihrht, q + i, &out);
    }
  }
  // Rings 1..Nr-1: direct row offsets, theta-wrap peeled to the two edge
  // columns (ring Nr-1's outward row is the ghost ring).
  for (int j = 1; j < Nr; ++j) {
    const int row = j * Nt;
    const double* pc = phi + row;
    const double* po = phi + row + Nt;  // outward
    const double* pi_ = phi + row - Nt; // inward
    const double* uc = u + row;
    const double s00i = g.sig_inv_00[row], s11i = g.sig_inv_11[row];
    const double gm_rr = g.gamma_r_rr[row], gm_tt = g.gamma_r_tt[row];
    const double gm_rt = g.gamma_t_rt[row];
    double* qrow = q + row;
    for (int k = 1; k < Nt - 1; ++k) {
      eval_polar<M>(pc[k], po[k], pi_[k], pc[k + 1], pc[k - 1], po[k + 1],
                    po[k - 1], pi_[k + 1], pi_[k - 1], uc[k], alpha, add, i2hr,
                    ihr2, i2ht, iht2, i4, s00i, s11i, gm_rr, gm_tt, gm_rt,
                    ihr2x, iht2x, ihrht, qrow + k, &out);
    }
    eval_polar<M>(pc[0], po[0], pi_[0], pc[1], pc[Nt - 1], po[1], po[Nt - 1],
                  pi_[1], pi_[Nt - 1], uc[0], alpha, add, i2hr, ihr2, i2ht,
                  iht2, i4, s00i, s11i, gm_rr, gm_tt, gm_rt, ihr2x, iht2x,
                  ihrht, qrow + 0, &out);
    eval_polar<M>(pc[Nt - 1], po[Nt - 1], pi_[Nt - 1], pc[0], pc[Nt - 2],
                  po[0], po[Nt - 2], pi_[0], pi_[Nt - 2], uc[Nt - 1], alpha,
                  add, i2hr, ihr2, i2ht, iht2, i4, s00i, s11i, gm_rr, gm_tt,
                  gm_rt, ihr2x, iht2x, ihrht, qrow + Nt - 1, &out);
  }
  return out;
}

inline KernelOut rhs_dispatch(const Grid& g, const double* phi, const double* u,
                              double alpha, double add, double* q) {
  const AnisoMode m = aniso_mode(alpha);
  if (g.polar()) {
    switch (m) {
      case kAlphaZero: return rhs_polar<kAlphaZero>(g, phi, u, alpha, add, q);
      case kAlphaMinusOne: return rhs_polar<kAlphaMinusOne>(g, phi, u, alpha, add, q);
      case kAlphaMinusHalf: return rhs_polar<kAlphaMinusHalf>(g, phi, u, alpha, add, q);
      default: return rhs_polar<kAlphaGeneral>(g, phi, u, alpha, add, q);
    }
  }
  switch (m) {
    case kAlphaZero: return rhs_line<kAlphaZero>(g, phi, u, alpha, add, q);
    case kAlphaMinusOne: return rhs_line<kAlphaMinusOne>(g, phi, u, alpha, add, q);
    case kAlphaMinusHalf: return rhs_line<kAlphaMinusHalf>(g, phi, u, alpha, add, q);
    default: return rhs_line<kAlphaGeneral>(g, phi, u, alpha, add, q);
  }
}

// exp(x) by 5-term Taylor for the multiplicative u update; per-step relative
// error <= x^5/120, i.e. <= 1e-12 whenever |x| <= 1e-2. Steps that large only
// occur on toy grids; step_inplace falls back to exp beyond that.
inline double texp(double x) {
  return 1.0 + x * (1.0 + x * (0.5 + x * ((1.0 / 6.0) + x * (1.0 / 24.0))));
}

}  // namespace detail

/// Reference right-hand side built on differentiate(); the fused kernel is
/// tested against this path. Ghosts are refreshed internally.
inline std::vector<double> rhs_Q(const GraphField& f, const Grid& g, double alpha,
                                 FlowMode mode = FlowMode::physical) {
  GraphField tmp = f;
  apply_neumann(tmp, g);
  const DifferentialPack p = differentiate(tmp, g);
  std::vector<double> q(g.n_real);
  const double add = (mode == FlowMode::rescaled) ? 1.0 / g.spec.n : 0.0;
  for (int i = 0; i < g.n_real; ++i) {
    const double vsq = 1.0 - p.grad_sq[i];
    const double D = convexity_scalar(g, p, i);
    q[i] = -std::exp(-alpha * tmp.phi[i]) * vsq / D + add;
  }
  return q;
}

/// cfl * min over nodes of the explicit stability bound (see header note).
inline double stable_dt(const GraphField& f, const Grid& g, double alpha,
                        double cfl) {
  GraphField tmp = f;
  apply_neumann(tmp, g);
  std::vector<double> q(g.n_real);
  const detail::KernelOut out =
      detail::rhs_dispatch(g, tmp.phi.data(), tmp.u.data(), alpha, 0.0, q.data());
  return cfl / out.denom_max;
}

struct StepOutcome {
  FlowStatus status = FlowStatus::ok;
  double dt = 0.0;
  double min_vsq = 1.0;
  double min_D = 0.0;
};

/// Scratch buffers reused across steps.
struct Workspace {
  std::vector<double> q1, q2, phi_s, u_s;
  void reserve(const Grid& g) {
    q1.assign(g.n_real, 0.0);
    q2.assign(g.n_real, 0.0);
    phi_s.assign(g.n_total, 0.0);
    u_s.assign(g.n_total, 0.0);
  }
};

namespace detail {

constexpr double kAdmissMargin = 1e-12;

inline FlowStatus classify(const KernelOut& k) {
  if (!std::isfinite(k.q_sum)) return FlowStatus::nonfinite;
  if (!(k.min_vsq > kAdmissMargin)) return FlowStatus::spacelike_lost;
  if (!(k.min_D > kAdmissMargin)) return FlowStatus::convexity_lost;
  return FlowStatus::ok;
}

// phi += dt*q on real nodes, u updated multiplicatively in lockstep.
inline void apply_update(const Grid& g, const double* q, double dt,
                         std::vector<double>& phi, std::vector<double>& u) {
  const bool big = dt > 1e-3;
  for (int i = 0; i < g.n_real; ++i) {
    const double x = dt * q[i];
    phi[i] += x;
    u[i] *= big ? std::exp(x) : texp(x);
  }
}

inline void apply_update_avg(const Grid& g, const double* qa, const double* qb,
                             double half_dt, std::vector<double>& phi,
                             std::vector<double>& u) {
  const bool big = half_dt > 5e-4;
  for (int i = 0; i < g.n_real; ++i) {
    const double x = half_dt * (qa[i] + qb[i]);
    phi[i] += x;
    u[i] *= big ? std::exp(x) : texp(x);
  }
}

}  // namespace detail

/// One explicit step (Euler or two-stage RK2 with Neumann re-application per
/// stage); dt = cfl/denom from the current state, clamped so the horizon is
/// hit exactly. Advances f in place; on failure f holds the offending state.
inline StepOutcome step_inplace(Workspace& ws, GraphField& f, const Grid& g,
                                const FlowParams& p) {
  const double add = (p.mode == FlowMode::rescaled) ? 1.0 / g.spec.n : 0.0;
  StepOutcome so;
  detail::KernelOut k1 =
      detail::rhs_dispatch(g, f.phi.data(), f.u.data(), p.alpha, add, ws.q1.data());
  so.status = detail::classify(k1);
  so.min_vsq = k1.min_vsq;
  so.min_D = k1.min_D;
  if (so.status != FlowStatus::ok) return so;

  double dt = p.cfl / k1.denom_max;
  bool clamped = false;
  if (f.time + dt >= p.horizon) {
    dt = p.horizon - f.time;
    clamped = true;
  }
  so.dt = dt;

  if (p.stepper == Stepper::euler) {
    detail::apply_update(g, ws.q1.data(), dt, f.phi, f.u);
  } else {
    std::memcpy(ws.phi_s.data(), f.phi.data(), sizeof(double) * g.n_total);
    std::memcpy(ws.u_s.data(), f.u.data(), sizeof(double) * g.n_total);
    detail::apply_update(g, ws.q1.data(), dt, ws.phi_s, ws.u_s);
    GraphField stage;  // shallow view would do; swap keeps it allocation-free
    stage.flavor = f.flavor;
    stage.phi.swap(ws.phi_s);
    stage.u.swap(ws.u_s);
    apply_neumann(stage, g);
    detail::KernelOut k2 = detail::rhs_dispatch(g, stage.phi.data(),
                                                stage.u.data(), p.alpha, add,
                                                ws.q2.data());
    stage.phi.swap(ws.phi_s);
    stage.u.swap(ws.u_s);
    so.status = detail::classify(k2);
    so.min_vsq = std::min(so.min_vsq, k2.min_vsq);
    so.min_D = std::min(so.min_D, k2.min_D);
    if (so.status != FlowStatus::ok) return so;
    detail::apply_update_avg(g, ws.q1.data(), ws.q2.data(), 0.5 * dt, f.phi, f.u);
  }
  apply_neumann(f, g);
  f.time = clamped ? p.horizon : f.time + dt;
  return so;
}

/// Spec-level step: one advance with internally allocated scratch.
inline StepOutcome step(GraphField& f, const Grid& g, const FlowParams& p) {
  Workspace ws;
  ws.reserve(g);
  return step_inplace(ws, f, g, p);
}

struct Trajectory {
  FlowStatus status = FlowStatus::ok;
  std::string message;
  long steps = 0;
  double final_time = 0.0;
  std::vector<int> bad_nodes;  // filled on admissibility failures
};

/// Advance until the horizon (or max_steps / monitor stop). The monitor
/// callback fires after step 0's predecessor (the initial state), every
/// monitor_stride accepted steps, and at the final state; returning false
/// stops the run with status callback_stop.
inline Trajectory run_flow(
    GraphField& f, const Grid& g, const FlowParams& p, long monitor_stride,
    const std::function<bool(const GraphField&, long, const StepOutcome&)>& mon) {
  Trajectory tr;
  Workspace ws;
  ws.reserve(g);
  apply_neumann(f, g);
  if (monitor_stride < 1) monitor_stride = 1;
  if (mon && !mon(f, 0, StepOutcome{})) {
    tr.status = FlowStatus::callback_stop;
    tr.final_time = f.time;
    return tr;
  }
  while (f.time < p.horizon) {
    if (p.max_steps > 0 && tr.steps >= p.max_steps) {
      tr.status = FlowStatus::step_limit;
      break;
    }
    const StepOutcome so = step_inplace(ws, f, g, p);
    if (so.status != FlowStatus::ok) {
      tr.status = so.status;
      const AdmissibilityReport rep = check_admissible(f, g);
      tr.bad_nodes = rep.bad_nodes;
      tr.message = "flow aborted: min(1-|Dphi|^2) = " +
                   std::to_string(rep.min_spacelike_margin) +
                   ", min D = " + std::to_string(rep.min_convexity);
      break;
    }
    ++tr.steps;
    const bool final_now = !(f.time < p.horizon);
    if (mon && (tr.steps % monitor_stride == 0 || final_now)) {
      if (!mon(f, tr.steps, so)) {
        tr.status = FlowStatus::callback_stop;
        break;
      }
    }
  }
  tr.final_time = f.time;
  return tr;
}

}  // namespace imcf
