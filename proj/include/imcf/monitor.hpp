#pragma once

// Runtime verification of the a-priori estimates along a run:
//   - C0 envelopes      log Theta(t, phi1) <= phi <= log Theta(t, phi2)
//   - gradient bound    sup |D phi|(t) <= sup |D phi|(0)
//   - M sandwich        min(inf M0, -1/n) <= M <= max(sup M0, -1/n),
//                       M = (d phi/dt) Theta^alpha = -e^{-alpha phi~} v^2 / D
//   - H Theta window    positivity strict; run floor 1/2 min(min H Theta(0), n)
//   - area ODE          f'(t) = -Int u^-alpha dH^n, plus the radial sandwich
//   - metric evolution  d/dt g_ij = 2 Phi h_ij + (L_T g)_ij across records
//
// The graph parametrization moves points radially, not normally, so at a
// fixed chart point the metric evolves by the normal-gauge rate 2 Phi h plus
// the Lie derivative along the tangential reparametrization field
// T^i = e^{-alpha phi} phi^i / D (zero on rotationally symmetric data).
//
// Soft checks compare margins against C_tol (h^2 + dt); spacelike and
// mean-convexity margins are hard (the solver aborts on those). All records
// carry both clocks t and s regardless of the run flavor.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "imcf/curvature.hpp"
#include "imcf/rescale.hpp"
#include "imcf/solver.hpp"

namespace imcf {

struct ToleranceModel {
  double C_tol = 10.0;
  double area_ode_tol = 0.05;  // relative residual allowance for the area ODE
  double h_sq = 0.0;           // h_r^2 + (R h_theta)^2, set from the grid

  static ToleranceModel for_grid(const Grid& g, double C_tol, double area_tol) {
    ToleranceModel tm;
    tm.C_tol = C_tol;
    tm.area_ode_tol = area_tol;
    tm.h_sq = g.h_r * g.h_r;
    if (g.polar()) tm.h_sq += (g.spec.R * g.h_theta) * (g.spec.R * g.h_theta);
    return tm;
  }
  double slice_tol(double dt) const { return C_tol * (h_sq + dt); }
};

struct MonitorRecord {
  long step = 0;
  double t = 0.0, s = 0.0;
  double dt = 0.0;             // step size of the triggering step
  double sup_phi = 0.0, inf_phi = 0.0;  // physical phi
  double env_lo = 0.0, env_hi = 0.0;    // C0 envelope at t
  double sup_grad = 0.0;
  double M_min = 0.0, M_max = 0.0;
  double Htheta_min = 0.0, Htheta_max = 0.0;
  double area = 0.0;           // physical H^n(M_t)
  double aniso_int = 0.0;      // physical Int u^-alpha dH^n
  double area_lo = 0.0, area_hi = 0.0;  // radial area sandwich at t
  double osc_u = 0.0;          // sup - inf of rescaled u~
  double metric_resid = 0.0;   // sup-relative, vs previous record
  double min_vsq = 1.0, min_D = 0.0;
};

struct Violation {
  std::string check;
  double time = 0.0;    // t
  double margin = 0.0;  // negative means violated by |margin|
  double threshold = 0.0;
};

/// Slice data carried between records for the metric-evolution residual:
/// physical g_ij and the full rate 2 Phi h_ij + (L_T g)_ij per node (the Lie
/// term is evaluated on interior nodes, where centered stencils stay on the
/// real grid).
struct MetricTrace {
  double t = 0.0;
  bool valid = false;
  std::vector<double> g00, g01, g11;
  std::vector<double> f00, f01, f11;
};

class MonitorEngine {
 public:
  MonitorEngine(const Grid& g, const ScalePlan& plan, ToleranceModel tol)
      : grid_(&g), plan_(plan), tol_(tol) {}

  /// Evaluate the current state, append a record, run the soft checks.
  const MonitorRecord& observe(const GraphField& f, long step, double dt_step) {
    MonitorRecord r;
    r.step = step;
    r.dt = dt_step;
    const int n = grid_->spec.n;
    const double alpha = plan_.alpha;
    if (f.flavor == Flavor::physical) {
      r.t = f.time;
      r.s = s_of_t(f.time, plan_.c, alpha, n);
    } else {
      r.s = f.time;
      r.t = t_of_s(f.time, plan_.c, alpha, n);
    }
    const double lt = log_theta(r.t, plan_.c, alpha, n);
    const double theta_n = std::exp(n * lt);
    const double theta_1 = std::exp(lt);

    GraphField tmp = f;
    apply_neumann(tmp, *grid_);
    const DifferentialPack p = differentiate(tmp, *grid_);

    double sup_phi = -1e300, inf_phi = 1e300, sup_gsq = 0.0;
    double Mmin = 1e300, Mmax = -1e300, HTmin = 1e300, HTmax = -1e300;
    double umin_t = 1e300, umax_t = -1e300;
    double area_t = 0.0, aniso_t = 0.0;  // tilde quantities
    double vsq_min = 1e300, D_min = 1e300;
    for (int i = 0; i < grid_->n_real; ++i) {
      const double phi_phys = (f.flavor == Flavor::physical) ? tmp.phi[i]
                                                             : tmp.phi[i] + lt;
      const double phi_til = phi_phys - lt;
      const double u_til = std::exp(phi_til);
      sup_phi = std::max(sup_phi, phi_phys);
      inf_phi = std::min(inf_phi, phi_phys);
      sup_gsq = std::max(sup_gsq, p.grad_sq[i]);
      const double vsq = 1.0 - p.grad_sq[i];
      const double v = std::sqrt(vsq);
      const double D = convexity_scalar(*grid_, p, i);
      vsq_min = std::min(vsq_min, vsq);
      D_min = std::min(D_min, D);
      const double M = -std::exp(-alpha * phi_til) * vsq / D;
      Mmin = std::min(Mmin, M);
      Mmax = std::max(Mmax, M);
      const double HT = D / (u_til * v);  // H Theta = rescaled mean curvature
      HTmin = std::min(HTmin, HT);
      HTmax = std::max(HTmax, HT);
      umin_t = std::min(umin_t, u_til);
      umax_t = std::max(umax_t, u_til);
      const double un = (n == 2) ? u_til * u_til : u_til;
      area_t += un * v * grid_->quad_weight[i];
      aniso_t += std::exp(-alpha * phi_til) * un * v * grid_->quad_weight[i];
    }
    r.sup_phi = sup_phi;
    r.inf_phi = inf_phi;
    r.sup_grad = std::sqrt(sup_gsq);
    r.M_min = Mmin;
    r.M_max = Mmax;
    r.Htheta_min = HTmin;
    r.Htheta_max = HTmax;
    r.osc_u = umax_t - umin_t;
    r.min_vsq = vsq_min;
    r.min_D = D_min;
    r.area = theta_n * area_t;
    // Int u^-alpha dH^n = Theta^{n-alpha} Int u~^-alpha dH~^n
    r.aniso_int = theta_n * std::exp(-alpha * lt) * aniso_t;
    r.env_lo = log_theta(r.t, plan_.phi1, alpha, n);
    r.env_hi = log_theta(r.t, plan_.phi2, alpha, n);

    if (records_.empty() && !anchored_) {
      grad0_ = r.sup_grad;
      M_lo_ = std::min(r.M_min, -1.0 / n);
      M_hi_ = std::max(r.M_max, -1.0 / n);
      HT_floor_ = 0.5 * std::min(r.Htheta_min, double(n));
      area0_ = r.area;
    }
    r.area_lo = area0_ * std::exp(n * (log_theta(r.t, plan_.phi2, alpha, n) - plan_.phi2));
    r.area_hi = area0_ * std::exp(n * (log_theta(r.t, plan_.phi1, alpha, n) - plan_.phi1));

    update_metric_trace(tmp, p, r, theta_1);
    run_soft_checks(r, dt_step);
    c3_ = std::min(c3_, r.Htheta_min);
    c4_ = std::max(c4_, r.Htheta_max);
    records_.push_back(r);
    return records_.back();
  }

  /// Area-ODE relative residual over the records, using the three-point
  /// derivative for unevenly spaced times (records are not equispaced in t:
  /// the step size grows and the final step is horizon-clamped). Appends a
  /// violation beyond the configured allowance. Call once at the end.
  double finalize_area_ode() {
    double worst = 0.0;
    for (size_t k = 1; k + 1 < records_.size(); ++k) {
      const MonitorRecord& a = records_[k - 1];
      const MonitorRecord& m = records_[k];
      const MonitorRecord& b = records_[k + 1];
      const double ha = m.t - a.t, hb = b.t - m.t;
      if (!(ha > 0.0) || !(hb > 0.0)) continue;
      const double dfdt = (ha * ha * b.area - hb * hb * a.area +
                           (hb * hb - ha * ha) * m.area) /
                          (ha * hb * (ha + hb));
      const double rhs = -m.aniso_int;
      const double rel = std::fabs(dfdt - rhs) / std::fabs(rhs);
      worst = std::max(worst, rel);
    }
    area_ode_resid_ = worst;
    if (records_.size() >= 3 && worst > tol_.area_ode_tol)
      violations_.push_back({"area_ode", records_.back().t,
                             tol_.area_ode_tol - worst, tol_.area_ode_tol});
    return worst;
  }

  /// Adopt stored run aggregates as the check anchors (offline snapshot
  /// checks, where the t = 0 slice is not available).
  void seed_anchors(double grad0, double M_lo, double M_hi, double HT_floor,
                    double area0) {
    grad0_ = grad0;
    M_lo_ = M_lo;
    M_hi_ = M_hi;
    HT_floor_ = HT_floor;
    area0_ = area0;
    anchored_ = true;
  }

  const std::vector<MonitorRecord>& records() const { return records_; }
  const std::vector<Violation>& violations() const { return violations_; }
  const ScalePlan& plan() const { return plan_; }
  double empirical_c3() const { return c3_; }
  double empirical_c4() const { return c4_; }
  double grad0() const { return grad0_; }
  double M_lo() const { return M_lo_; }
  double M_hi() const { return M_hi_; }
  double HT_floor() const { return HT_floor_; }
  double area0() const { return area0_; }
  double area_ode_resid() const { return area_ode_resid_; }

  /// Worst (most negative) margin seen per check, for reporting.
  struct MarginLedger {
    double c0 = 1e300, grad = 1e300, msand = 1e300, htheta = 1e300;
    double area_sandwich = 1e300, metric = 1e300;
  };
  const MarginLedger& margins() const { return margins_; }

 private:
  void update_metric_trace(const GraphField& tmp, const DifferentialPack& p,
                           MonitorRecord& r, double theta_1) {
    const int N = grid_->n_real;
    MetricTrace now;
    now.t = r.t;
    now.valid = true;
    now.g00.resize(N);
    now.g01.assign(N, 0.0);
    now.g11.assign(N, 0.0);
    now.f00.resize(N);
    now.f01.assign(N, 0.0);
    now.f11.assign(N, 0.0);
    std::vector<double> T0(N), T1(N, 0.0);
    const double alpha = plan_.alpha;
    const bool polar = grid_->polar();
    for (int i = 0; i < N; ++i) {
      // physical u = Theta * u~ when the run is rescaled
      const double u = (tmp.flavor == Flavor::physical) ? tmp.u[i]
                                                        : tmp.u[i] * theta_1;
      const double u2 = u * u;
      const double vsq = 1.0 - p.grad_sq[i];
      const double v = std::sqrt(vsq);
      const double D = convexity_scalar(*grid_, p, i);
      const double upa = std::exp(-alpha * std::log(u));  // u^-alpha
      const double Phi = upa * u * v / D;                 // u^-alpha / H
      const double uv = u / v;
      if (polar) {
        const double s00 = 1.0 / grid_->sig_inv_00[i];
        const double s11 = 1.0 / grid_->sig_inv_11[i];
        now.g00[i] = u2 * (s00 - p.d0[i] * p.d0[i]);
        now.g01[i] = u2 * (-p.d0[i] * p.d1[i]);
        now.g11[i] = u2 * (s11 - p.d1[i] * p.d1[i]);
        now.f00[i] = 2.0 * Phi * uv * (p.d0[i] * p.d0[i] - p.h00[i] - s00);
        now.f01[i] = 2.0 * Phi * uv * (p.d0[i] * p.d1[i] - p.h01[i]);
        now.f11[i] = 2.0 * Phi * uv * (p.d1[i] * p.d1[i] - p.h11[i] - s11);
        T0[i] = upa * grid_->sig_inv_00[i] * p.d0[i] / D;
        T1[i] = upa * grid_->sig_inv_11[i] * p.d1[i] / D;
      } else {
        now.g00[i] = u2 * (1.0 - p.d0[i] * p.d0[i]);
        now.f00[i] = 2.0 * Phi * uv * (p.d0[i] * p.d0[i] - p.h00[i] - 1.0);
        T0[i] = upa * p.d0[i] / D;
      }
    }
    // Tangential transport (L_T g)_ij = T^k d_k g_ij + g_kj d_i T^k
    // + g_ik d_j T^k, added on interior nodes (centered stencils there never
    // cross the pole or the boundary ghosts).
    if (judged_.empty()) build_judged_mask();
    if (polar) {
      const double i2hr = 1.0 / (2.0 * grid_->h_r);
      const double i2ht = 1.0 / (2.0 * grid_->h_theta);
      for (int i = 0; i < N; ++i) {
        if (!judged_[i]) continue;
        const int jp = grid_->jp[i], jm = grid_->jm[i];
        const int kp = grid_->kp[i], km = grid_->km[i];
        const double dT0r = (T0[jp] - T0[jm]) * i2hr;
        const double dT0t = (T0[kp] - T0[km]) * i2ht;
        const double dT1r = (T1[jp] - T1[jm]) * i2hr;
        const double dT1t = (T1[kp] - T1[km]) * i2ht;
        const double dg00r = (now.g00[jp] - now.g00[jm]) * i2hr;
        const double dg00t = (now.g00[kp] - now.g00[km]) * i2ht;
        const double dg01r = (now.g01[jp] - now.g01[jm]) * i2hr;
        const double dg01t = (now.g01[kp] - now.g01[km]) * i2ht;
        const double dg11r = (now.g11[jp] - now.g11[jm]) * i2hr;
        const double dg11t = (now.g11[kp] - now.g11[km]) * i2ht;
        const double g00 = now.g00[i], g01 = now.g01[i], g11 = now.g11[i];
        const double t0 = T0[i], t1 = T1[i];
        now.f00[i] += t0 * dg00r + t1 * dg00t + 2.0 * (g00 * dT0r + g01 * dT1r);
        now.f01[i] += t0 * dg01r + t1 * dg01t + g01 * dT0r + g11 * dT1r +
                      g00 * dT0t + g01 * dT1t;
        now.f11[i] += t0 * dg11r + t1 * dg11t + 2.0 * (g01 * dT0t + g11 * dT1t);
      }
    } else {
      const double i2h = 1.0 / (2.0 * grid_->h_r);
      for (int i = 0; i < N; ++i) {
        if (!judged_[i]) continue;
        const int jp = grid_->jp[i], jm = grid_->jm[i];
        const double dT = (T0[jp] - T0[jm]) * i2h;
        const double dg = (now.g00[jp] - now.g00[jm]) * i2h;
        now.f00[i] += T0[i] * dg + 2.0 * now.g00[i] * dT;
      }
    }
    if (trace_.valid) {
      const double span = now.t - trace_.t;
      if (span > 0.0) {
        // Difference quotient of g against the endpoint average of 2 Phi h:
        // the average cancels the first-order drift of the slope across the
        // span, so the residual measures the identity and not the sampling.
        double resid = 0.0, scale = 0.0, dslope = 0.0;
        auto acc = [&](const std::vector<double>& gb, const std::vector<double>& ga,
                       const std::vector<double>& fb, const std::vector<double>& fa,
                       int i) {
          const double mid = 0.5 * (fa[i] + fb[i]);
          resid = std::max(resid, std::fabs((gb[i] - ga[i]) / span - mid));
          scale = std::max(scale, std::fabs(mid));
          dslope = std::max(dslope, std::fabs(fb[i] - fa[i]));
        };
        for (int i = 0; i < N; ++i) {
          if (!judged_[i]) continue;
          acc(now.g00, trace_.g00, now.f00, trace_.f00, i);
          if (polar) {
            acc(now.g01, trace_.g01, now.f01, trace_.f01, i);
            acc(now.g11, trace_.g11, now.f11, trace_.f11, i);
          }
        }
        r.metric_resid = resid / std::max(scale, 1e-300);
        // Judged only when the slope field is resolved on the record span;
        // across under-resolved transients (slope changing by a large
        // fraction between records) the residual is a sampling artifact and
        // is recorded without a verdict.
        if (dslope <= 0.25 * scale) {
          const double thr = tol_.C_tol * (tol_.h_sq + span);
          note("metric_evolution", r.t, thr - r.metric_resid, thr, &margins_.metric);
        }
      }
    }
    trace_ = std::move(now);
  }

  void run_soft_checks(const MonitorRecord& r, double dt_step) {
    const double tol = tol_.slice_tol(dt_step);
    note("c0_envelope", r.t,
         std::min(r.inf_phi - r.env_lo, r.env_hi - r.sup_phi) + tol, tol,
         &margins_.c0);
    if (!records_.empty() || anchored_) {  // the t = 0 record defines the anchors
      note("gradient", r.t, grad0_ - r.sup_grad + tol, tol, &margins_.grad);
      note("M_sandwich", r.t,
           std::min(r.M_min - M_lo_, M_hi_ - r.M_max) + tol, tol,
           &margins_.msand);
      if (!(r.Htheta_min > 0.0))
        violations_.push_back({"Htheta_positive", r.t, r.Htheta_min, 0.0});
      note("Htheta_floor", r.t, r.Htheta_min - HT_floor_ + tol, tol,
           &margins_.htheta);
      const double rel_lo = (r.area - r.area_lo) / area0_;
      const double rel_hi = (r.area_hi - r.area) / area0_;
      note("area_sandwich", r.t, std::min(rel_lo, rel_hi) + tol, tol,
           &margins_.area_sandwich);
    }
  }

  void note(const char* name, double t, double margin, double thr, double* ledger) {
    *ledger = std::min(*ledger, margin - thr);  // raw margin without slack
    if (margin < 0.0) violations_.push_back({name, t, margin, thr});
  }

  // Nodes whose centered stencil stays on real nodes: the transport term of
  // the metric-evolution residual is only evaluated (and judged) there.
  void build_judged_mask() {
    judged_.assign(grid_->n_real, 0);
    if (grid_->polar()) {
      const int Nt = grid_->spec.Ntheta;
      for (int j = 1; j + 1 < grid_->spec.Nr; ++j)
        for (int k = 0; k < Nt; ++k) judged_[grid_->idx(j, k)] = 1;
    } else {
      for (int i = 1; i + 1 < grid_->n_real; ++i) judged_[i] = 1;
    }
  }

  const Grid* grid_;
  ScalePlan plan_;
  ToleranceModel tol_;
  std::vector<MonitorRecord> records_;
  std::vector<Violation> violations_;
  MetricTrace trace_;
  MarginLedger margins_;
  double grad0_ = 0.0, M_lo_ = 0.0, M_hi_ = 0.0, HT_floor_ = 0.0, area0_ = 0.0;
  double c3_ = 1e300, c4_ = -1e300, area_ode_resid_ = 0.0;
  bool anchored_ = false;
  std::vector<char> judged_;
};

struct LimitRadius {
  double r_inf = 0.0;
  double lower = 0.0, upper = 0.0;  // radius interval from the area bound
  bool pass = false;                // within [0.98 lower, 1.02 upper]
};

/// r_inf = quadrature mean of the final rescaled radius; the interval is
///   (1/sup u0) (H(M0)/H(M))^{1/n} <= r_inf <= (1/inf u0) (H(M0)/H(M))^{1/n}
/// with discrete measures on both sides and 2% slack.
inline LimitRadius estimate_limit_radius(const GraphField& final_state,
                                         const Grid& g, const ScalePlan& plan,
                                         const GraphField& initial_physical) {
  LimitRadius lr;
  double wsum = 0.0, usum = 0.0;
  const int n = g.spec.n;
  double lt_final = 0.0;
  if (final_state.flavor == Flavor::physical)
    lt_final = log_theta(final_state.time, plan.c, plan.alpha, n);
  for (int i = 0; i < g.n_real; ++i) {
    const double u_til = (final_state.flavor == Flavor::rescaled)
                             ? final_state.u[i]
                             : final_state.u[i] * std::exp(-lt_final);
    wsum += g.quad_weight[i];
    usum += u_til * g.quad_weight[i];
  }
  lr.r_inf = usum / wsum;
  double u0_min = 1e300, u0_max = -1e300;
  for (int i = 0; i < g.n_real; ++i) {
    u0_min = std::min(u0_min, initial_physical.u[i]);
    u0_max = std::max(u0_max, initial_physical.u[i]);
  }
  const double ratio = hausdorff_measure(initial_physical, g) / wsum;
  const double root = (n == 2) ? std::sqrt(ratio) : ratio;
  lr.lower = root / u0_max;
  lr.upper = root / u0_min;
  lr.pass = lr.r_inf >= 0.98 * lr.lower && lr.r_inf <= 1.02 * lr.upper;
  return lr;
}

}  // namespace imcf
