#pragma once

// Exact radial solution, blow-down factor Theta and the physical/rescaled
// time change.
//
// Radial data phi0 == c evolves as phi(t) = (1/alpha) log(-(alpha/n) t + e^{alpha c})
// for alpha < 0 and phi(t) = c - t/n for alpha = 0; Theta(t, c) = e^{phi(t)}.
// Theta^alpha = -(alpha/n) t + e^{alpha c} exactly (the power collapses),
// which is the form used everywhere to avoid cancellation.
//
// Rescaled radius u~ = u / Theta, rescaled time s with dt/ds = Theta^alpha:
//   t(s) = (n/alpha) e^{alpha c} (1 - e^{-alpha s / n})   (alpha < 0)
//   t(s) = s                                              (alpha = 0)
// Under the rescaling: H~ = H Theta, g~ = Theta^-2 g, h~ = Theta^-1 h,
// D phi~ = D phi.

#include <cmath>
#include <stdexcept>

#include "imcf/field.hpp"

namespace imcf {

/// Blow-down normalization: c defaults to the midpoint of the initial
/// phi-range [phi1, phi2] = [inf phi0, sup phi0].
struct ScalePlan {
  int n = 2;
  double alpha = 0.0;  // <= 0
  double c = 0.0;
  double phi1 = 0.0, phi2 = 0.0;  // initial envelope anchors
};

inline ScalePlan make_scale_plan(const GraphField& f0, const Grid& g, double alpha) {
  if (!(alpha <= 0.0)) throw std::invalid_argument("alpha must be <= 0");
  ScalePlan plan;
  plan.n = g.spec.n;
  plan.alpha = alpha;
  double lo = f0.phi[0], hi = f0.phi[0];
  for (int i = 0; i < g.n_real; ++i) {
    lo = std::min(lo, f0.phi[i]);
    hi = std::max(hi, f0.phi[i]);
  }
  plan.phi1 = lo;
  plan.phi2 = hi;
  plan.c = 0.5 * (lo + hi);
  return plan;
}

/// Theta(t, c)^alpha without roundoff-prone powers; equals 1 when alpha = 0.
inline double theta_pow_alpha(double t, double c, double alpha, int n) {
  if (alpha == 0.0) return 1.0;
  return -(alpha / n) * t + std::exp(alpha * c);
}

/// log Theta(t, c); this is also the exact radial solution with phi0 == c.
inline double log_theta(double t, double c, double alpha, int n) {
  if (alpha == 0.0) return -t / n + c;
  return std::log(theta_pow_alpha(t, c, alpha, n)) / alpha;
}

inline double theta(double t, double c, double alpha, int n) {
  return std::exp(log_theta(t, c, alpha, n));
}

/// Exact radial solution phi(t) for constant initial data phi0 == c.
inline double exact_radial_phi(double t, double c, double alpha, int n) {
  return log_theta(t, c, alpha, n);
}

/// Physical horizon: alpha = 0 flows forever; alpha < 0 too (the argument
/// of the log stays positive for all t >= 0 since alpha/n < 0).

/// t(s), closed form of dt/ds = Theta(t(s), c)^alpha, t(0) = 0.
inline double t_of_s(double s, double c, double alpha, int n) {
  if (alpha == 0.0) return s;
  return (n / alpha) * std::exp(alpha * c) * (1.0 - std::exp(-alpha * s / n));
}

/// Inverse map s(t).
inline double s_of_t(double t, double c, double alpha, int n) {
  if (alpha == 0.0) return t;
  // e^{-alpha s/n} = Theta^alpha * e^{-alpha c}
  return -(n / alpha) *
         std::log(theta_pow_alpha(t, c, alpha, n) * std::exp(-alpha * c));
}

/// Physical state at time t -> rescaled state at s(t): phi~ = phi - log Theta.
/// The transform is pointwise; the grid is taken for signature symmetry only.
inline GraphField rescale_state(const GraphField& f, [[maybe_unused]] const Grid& g,
                                const ScalePlan& plan) {
  if (f.flavor != Flavor::physical)
    throw std::invalid_argument("rescale_state expects a physical-flavor field");
  GraphField out = f;
  out.flavor = Flavor::rescaled;
  const double lt = log_theta(f.time, plan.c, plan.alpha, plan.n);
  const double it = std::exp(-lt);
  out.time = s_of_t(f.time, plan.c, plan.alpha, plan.n);
  for (size_t i = 0; i < out.phi.size(); ++i) {
    out.phi[i] = f.phi[i] - lt;
    out.u[i] = f.u[i] * it;
  }
  return out;
}

/// Rescaled state at s -> physical state at t(s): phi = phi~ + log Theta.
inline GraphField unscale_state(const GraphField& f, [[maybe_unused]] const Grid& g,
                                const ScalePlan& plan) {
  if (f.flavor != Flavor::rescaled)
    throw std::invalid_argument("unscale_state expects a rescaled-flavor field");
  GraphField out = f;
  out.flavor = Flavor::physical;
  const double t = t_of_s(f.time, plan.c, plan.alpha, plan.n);
  const double lt = log_theta(t, plan.c, plan.alpha, plan.n);
  const double th = std::exp(lt);
  out.time = t;
  for (size_t i = 0; i < out.phi.size(); ++i) {
    out.phi[i] = f.phi[i] + lt;
    out.u[i] = f.u[i] * th;
  }
  return out;
}

}  // namespace imcf
