#pragma once

// Run orchestration: config -> grid -> initial state -> flow loop with the
// monitor engine attached -> series.csv / summary.json / violations.json /
// snapshot CSVs. Also the grid-refinement study and the offline snapshot
// checker backing the CLI subcommands.
//
// Exit codes: 0 ok, 2 config error (thrown as ConfigError), 3 inadmissible
// data, 4 flow failure, 5 estimate violation.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "imcf/config.hpp"
#include "imcf/curvature.hpp"
#include "imcf/monitor.hpp"
#include "imcf/rescale.hpp"
#include "imcf/solver.hpp"

namespace imcf {

inline GraphField initial_from_config(const RunConfig& c, const Grid& g) {
  if (c.preset == Preset::constant) return make_constant(g, c.initial_c);
  return make_bump(g, c.initial_r0, c.initial_eps);
}

struct RunArtifacts {
  int exit_code = 0;
  FlowStatus status = FlowStatus::ok;
  std::string out_dir;  // resolved, empty when outputs were not written
  std::string hash;
  RunConfig config;
  Trajectory traj;
  ScalePlan plan;
  std::vector<MonitorRecord> records;
  std::vector<Violation> violations;
  MonitorEngine::MarginLedger margins;
  double c3 = 0.0, c4 = 0.0;
  double area_ode_resid = 0.0;
  LimitRadius limit_radius;
  double Hu_dev_final = 0.0;  // max |H~ u~ - n| on the final slice
  GraphField initial_physical, final_state;
  double runtime_seconds = 0.0;
  bool converged = false;  // rescaled run hit osc(u~) < convergence_tol
};

namespace detail {

inline std::string resolved_out_dir(const RunConfig& c) {
  const char* root = std::getenv("IMCF_OUTPUT_ROOT");
  if (root && *root)
    return (std::filesystem::path(root) / c.out_dir).string();
  return c.out_dir;
}

inline void write_snapshot(const std::string& path, const GraphField& f,
                           const Grid& g, const RunConfig& c,
                           const std::string& hash, const ScalePlan& plan,
                           double grad0, double M_lo, double M_hi,
                           double HT_floor, double area0, double t, double s) {
  GraphField tmp = f;
  apply_neumann(tmp, g);
  const DifferentialPack p = differentiate(tmp, g);
  std::FILE* out = std::fopen(path.c_str(), "w");
  if (!out) throw std::runtime_error("cannot write snapshot: " + path);
  std::fprintf(out, "# imcf snapshot\n");
  std::fprintf(out, "# config_hash=%s\n", hash.c_str());
  std::fprintf(out, "# n=%d R=%.17g Nr=%d Ntheta=%d\n", g.spec.n, g.spec.R,
               g.spec.Nr, g.spec.Ntheta);
  std::fprintf(out, "# alpha=%.17g flavor=%s t=%.17g s=%.17g\n", plan.alpha,
               f.flavor == Flavor::physical ? "physical" : "rescaled", t, s);
  std::fprintf(out, "# c=%.17g phi1=%.17g phi2=%.17g\n", plan.c, plan.phi1,
               plan.phi2);
  std::fprintf(out,
               "# grad0=%.17g M_lo=%.17g M_hi=%.17g HT_floor=%.17g area0=%.17g "
               "C_tol=%.17g\n",
               grad0, M_lo, M_hi, HT_floor, area0, c.C_tol);
  std::fprintf(out, "# columns: i,x0,x1,phi,u,v\n");
  for (int i = 0; i < g.n_real; ++i)
    std::fprintf(out, "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", i, g.point[i].x0,
                 g.point[i].x1, tmp.phi[i], tmp.u[i], p.v[i]);
  std::fclose(out);
}

inline void write_series(const std::string& path, const std::string& hash,
                         const std::vector<MonitorRecord>& recs) {
  std::FILE* out = std::fopen(path.c_str(), "w");
  if (!out) throw std::runtime_error("cannot write series: " + path);
  std::fprintf(out, "# config_hash=%s\n", hash.c_str());
  std::fprintf(out,
               "step,t,s,dt,inf_phi,sup_phi,env_lo,env_hi,sup_grad,M_min,M_max,"
               "Htheta_min,Htheta_max,area,aniso_int,area_lo,area_hi,osc_u,"
               "metric_resid,min_vsq,min_D\n");
  for (const MonitorRecord& r : recs)
    std::fprintf(out,
                 "%ld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                 "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                 "%.17g\n",
                 r.step, r.t, r.s, r.dt, r.inf_phi, r.sup_phi, r.env_lo,
                 r.env_hi, r.sup_grad, r.M_min, r.M_max, r.Htheta_min,
                 r.Htheta_max, r.area, r.aniso_int, r.area_lo, r.area_hi,
                 r.osc_u, r.metric_resid, r.min_vsq, r.min_D);
  std::fclose(out);
}

inline const char* status_name(FlowStatus s) {
  switch (s) {
    case FlowStatus::ok: return "ok";
    case FlowStatus::step_limit: return "step_limit";
    case FlowStatus::callback_stop: return "converged_stop";
    case FlowStatus::spacelike_lost: return "spacelike_lost";
    case FlowStatus::convexity_lost: return "convexity_lost";
    case FlowStatus::nonfinite: return "nonfinite";
  }
  return "unknown";
}

}  // namespace detail

/// Execute one configured run. Throws ConfigError for invalid setups (exit
/// 2); all other failures are reported through exit_code/status.
inline RunArtifacts run_from_config(const RunConfig& c, bool write_outputs = true) {
  const auto t_start = std::chrono::steady_clock::now();
  RunArtifacts art;
  art.config = c;
  art.hash = config_hash(c);

  Grid grid;
  try {
    grid = build_grid(c.domain);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("domain: ") + e.what());
  }

  // Initial data; preset guards (bump amplitude) count as inadmissible data.
  GraphField f0;
  try {
    f0 = initial_from_config(c, grid);
  } catch (const std::invalid_argument& e) {
    art.exit_code = 3;
    art.traj.message = e.what();
    return art;
  }
  art.initial_physical = f0;
  const AdmissibilityReport rep0 = check_admissible(f0, grid);
  if (!rep0.ok) {
    art.exit_code = 3;
    art.traj.bad_nodes = rep0.bad_nodes;
    art.traj.message = "initial data inadmissible";
    return art;
  }

  ScalePlan plan = make_scale_plan(f0, grid, c.flow.alpha);
  if (c.rescale_c_set) plan.c = c.rescale_c;
  art.plan = plan;

  GraphField state = f0;
  if (c.flow.mode == FlowMode::rescaled) state = rescale_state(f0, grid, plan);

  const ToleranceModel tol = ToleranceModel::for_grid(grid, c.C_tol, c.area_ode_tol);
  MonitorEngine engine(grid, plan, tol);

  std::string outdir;
  if (write_outputs) {
    outdir = detail::resolved_out_dir(c);
    std::filesystem::create_directories(outdir);
    art.out_dir = outdir;
  }

  long record_counter = 0;
  bool converged = false;
  auto monitor = [&](const GraphField& f, long step, const StepOutcome& so) {
    const MonitorRecord& r = engine.observe(f, step, so.dt);
    const bool want_snap =
        write_outputs && c.snapshot_stride > 0 &&
        (record_counter % c.snapshot_stride == 0);
    if (want_snap) {
      char name[64];
      std::snprintf(name, sizeof(name), "snap_%08ld.csv", step);
      detail::write_snapshot((std::filesystem::path(outdir) / name).string(),
                             f, grid, c, art.hash, plan, engine.grad0(),
                             engine.M_lo(), engine.M_hi(), engine.HT_floor(),
                             engine.area0(), r.t, r.s);
    }
    ++record_counter;
    if (c.flow.mode == FlowMode::rescaled && c.convergence_tol > 0.0 &&
        step > 0 && r.osc_u < c.convergence_tol) {
      converged = true;
      return false;
    }
    return true;
  };

  art.traj = run_flow(state, grid, c.flow, c.monitor_stride, monitor);
  art.status = art.traj.status;
  art.converged = converged;
  art.final_state = state;
  engine.finalize_area_ode();

  art.records = engine.records();
  art.violations = engine.violations();
  art.margins = engine.margins();
  art.c3 = engine.empirical_c3();
  art.c4 = engine.empirical_c4();
  art.area_ode_resid = engine.area_ode_resid();

  const bool flow_failed = art.status == FlowStatus::spacelike_lost ||
                           art.status == FlowStatus::convexity_lost ||
                           art.status == FlowStatus::nonfinite;
  if (!flow_failed) {
    art.limit_radius = estimate_limit_radius(state, grid, plan, f0);
    const CurvatureSlice slice = curvature_slice(state, grid, c.flow.alpha);
    double dev = 0.0;
    if (state.flavor == Flavor::rescaled) {
      for (int i = 0; i < grid.n_real; ++i)
        dev = std::max(dev, std::fabs(slice.H[i] * state.u[i] - grid.spec.n));
    } else {
      // H u~ Theta = (H Theta) u~; reconstruct the rescaled factors
      const double lt = log_theta(state.time, plan.c, plan.alpha, grid.spec.n);
      for (int i = 0; i < grid.n_real; ++i) {
        const double u_til = state.u[i] * std::exp(-lt);
        const double HT = slice.H[i] * std::exp(lt);
        dev = std::max(dev, std::fabs(HT * u_til - grid.spec.n));
      }
    }
    art.Hu_dev_final = dev;
  }

  if (flow_failed) art.exit_code = 4;
  else if (!art.violations.empty()) art.exit_code = 5;
  else art.exit_code = 0;

  art.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();

  if (write_outputs) {
    detail::write_series((std::filesystem::path(outdir) / "series.csv").string(),
                         art.hash, art.records);
    // first + final snapshots always
    if (!art.records.empty()) {
      const MonitorRecord& r0 = art.records.front();
      const MonitorRecord& rl = art.records.back();
      GraphField init_state = (c.flow.mode == FlowMode::rescaled)
                                  ? rescale_state(f0, grid, plan)
                                  : f0;
      detail::write_snapshot(
          (std::filesystem::path(outdir) / "snap_initial.csv").string(),
          init_state, grid, c, art.hash, plan, engine.grad0(), engine.M_lo(),
          engine.M_hi(), engine.HT_floor(), engine.area0(), r0.t, r0.s);
      detail::write_snapshot(
          (std::filesystem::path(outdir) / "snap_final.csv").string(), state,
          grid, c, art.hash, plan, engine.grad0(), engine.M_lo(), engine.M_hi(),
          engine.HT_floor(), engine.area0(), rl.t, rl.s);
    }

    nlohmann::json vio = nlohmann::json::array();
    for (const Violation& v : art.violations)
      vio.push_back({{"check", v.check},
                     {"t", v.time},
                     {"margin", v.margin},
                     {"threshold", v.threshold}});
    nlohmann::json jv;
    jv["config_hash"] = art.hash;
    jv["violations"] = vio;
    std::ofstream((std::filesystem::path(outdir) / "violations.json").string())
        << jv.dump(2) << "\n";

    nlohmann::json js;
    js["config_hash"] = art.hash;
    nlohmann::json jc;
    for (const auto& [k, v] : c.raw) jc[k] = v;
    js["config"] = jc;
    js["status"] = detail::status_name(art.status);
    js["exit_code"] = art.exit_code;
    js["steps"] = art.traj.steps;
    js["final_t"] = art.records.empty() ? 0.0 : art.records.back().t;
    js["final_s"] = art.records.empty() ? 0.0 : art.records.back().s;
    js["converged"] = art.converged;
    js["runtime_seconds"] = art.runtime_seconds;
    js["scale_plan"] = {{"c", plan.c}, {"phi1", plan.phi1}, {"phi2", plan.phi2}};
    js["empirical"] = {{"c3_Htheta_min", art.c3},
                       {"c4_Htheta_max", art.c4},
                       {"grad0", engine.grad0()},
                       {"M_lo", engine.M_lo()},
                       {"M_hi", engine.M_hi()}};
    js["checks"] = {{"c0_envelope", art.margins.c0},
                    {"gradient", art.margins.grad},
                    {"M_sandwich", art.margins.msand},
                    {"Htheta_floor", art.margins.htheta},
                    {"area_sandwich", art.margins.area_sandwich},
                    {"metric_evolution", art.margins.metric},
                    {"area_ode_resid", art.area_ode_resid}};
    js["limit_radius"] = {{"r_inf", art.limit_radius.r_inf},
                          {"lower", art.limit_radius.lower},
                          {"upper", art.limit_radius.upper},
                          {"pass", art.limit_radius.pass}};
    js["final_Hu_dev"] = art.Hu_dev_final;
    js["final_osc_u"] = art.records.empty() ? 0.0 : art.records.back().osc_u;
    std::ofstream((std::filesystem::path(outdir) / "summary.json").string())
        << js.dump(2) << "\n";
  }
  return art;
}

// ---------------------------------------------------------------------------
// Grid refinement study.

struct StudyLevel {
  int Nr = 0, Ntheta = 0;
  long steps = 0;
  double err = 0.0;
};

struct StudyResult {
  std::vector<StudyLevel> levels;
  std::vector<double> orders;
  double observed_order = 0.0;  // finest consecutive pair
  std::string hash;
};

namespace detail {

/// 4-point Lagrange interpolation of (xs, ys) at x; xs ascending. Falls back
/// to a smaller window on short inputs.
inline double lagrange4(const std::vector<double>& xs,
                        const std::vector<double>& ys, double x) {
  const int N = int(xs.size());
  const int w = std::min(4, N);
  const int hi = int(std::lower_bound(xs.begin(), xs.end(), x) - xs.begin());
  const int start = std::max(0, std::min(hi - w / 2, N - w));
  double acc = 0.0;
  for (int a = start; a < start + w; ++a) {
    double lag = 1.0;
    for (int b = start; b < start + w; ++b)
      if (b != a) lag *= (x - xs[b]) / (xs[a] - xs[b]);
    acc += lag * ys[a];
  }
  return acc;
}

/// Radial profile of phi: n=1 passes through, n=2 averages each ring (the
/// study presets are rotationally symmetric).
inline void radial_profile(const GraphField& f, const Grid& g,
                           std::vector<double>* xs, std::vector<double>* ys) {
  xs->clear();
  ys->clear();
  if (!g.polar()) {
    for (int i = 0; i < g.n_real; ++i) {
      xs->push_back(g.point[i].x0);
      ys->push_back(f.phi[i]);
    }
    return;
  }
  const int Nr = g.spec.Nr, Nt = g.spec.Ntheta;
  for (int j = 0; j < Nr; ++j) {
    double acc = 0.0;
    for (int k = 0; k < Nt; ++k) acc += f.phi[g.idx(j, k)];
    xs->push_back(g.point[g.idx(j, 0)].x0);
    ys->push_back(acc / Nt);
  }
}

}  // namespace detail

/// Runs the configuration at `levels` resolutions (Nr and Ntheta doubling per
/// level). Constant-preset errors are measured against the exact radial
/// solution across all records; otherwise final radial profiles are compared
/// against the finest level. Needs levels >= 2 (>= 3 for profile reference).
inline StudyResult convergence_study(const RunConfig& base, int levels) {
  if (levels < 2) throw ConfigError("study: --levels must be >= 2");
  const bool oracle = base.preset == Preset::constant;
  if (!oracle && levels < 3)
    throw ConfigError("study: --levels must be >= 3 for non-constant presets");
  StudyResult res;
  res.hash = config_hash(base);
  std::vector<RunArtifacts> arts;
  std::vector<Grid> grids;
  for (int l = 0; l < levels; ++l) {
    RunConfig c = base;
    if (base.domain.n == 1) {
      // node-centered line: keep the endpoints, halve h exactly
      c.domain.Nr = ((base.domain.Nr - 1) << l) + 1;
    } else {
      c.domain.Nr = base.domain.Nr << l;
      c.domain.Ntheta = base.domain.Ntheta << l;
    }
    RunArtifacts a = run_from_config(c, false);
    if (a.exit_code == 3 || a.exit_code == 4)
      throw std::runtime_error("study: level " + std::to_string(l) +
                               " failed with exit " + std::to_string(a.exit_code));
    StudyLevel lev;
    lev.Nr = c.domain.Nr;
    lev.Ntheta = c.domain.Ntheta;
    lev.steps = a.traj.steps;
    if (oracle) {
      double err = 0.0;
      for (const MonitorRecord& r : a.records) {
        const double ex =
            exact_radial_phi(r.t, base.initial_c, base.flow.alpha, base.domain.n);
        err = std::max(err, std::max(std::fabs(r.sup_phi - ex),
                                     std::fabs(r.inf_phi - ex)));
      }
      lev.err = err;
    }
    res.levels.push_back(lev);
    arts.push_back(std::move(a));
    grids.push_back(build_grid(arts.back().config.domain));
  }
  if (!oracle) {
    std::vector<double> xs_f, ys_f;
    detail::radial_profile(arts.back().final_state, grids.back(), &xs_f, &ys_f);
    for (int l = 0; l + 1 < levels; ++l) {
      std::vector<double> xs, ys;
      detail::radial_profile(arts[l].final_state, grids[l], &xs, &ys);
      double err = 0.0;
      for (size_t i = 0; i < xs.size(); ++i)
        err = std::max(err, std::fabs(ys[i] - detail::lagrange4(xs_f, ys_f, xs[i])));
      res.levels[l].err = err;
    }
    res.levels.back().err = 0.0;
  }
  const int usable = oracle ? levels : levels - 1;
  for (int l = 0; l + 1 < usable; ++l) {
    const double e0 = res.levels[l].err, e1 = res.levels[l + 1].err;
    res.orders.push_back(std::log2(e0 / e1));
  }
  res.observed_order = res.orders.empty() ? 0.0 : res.orders.back();
  return res;
}

/// Write study.json next to the run outputs.
inline void write_study(const StudyResult& res, const RunConfig& base) {
  const std::string outdir = detail::resolved_out_dir(base);
  std::filesystem::create_directories(outdir);
  nlohmann::json js;
  js["config_hash"] = res.hash;
  js["observed_order"] = res.observed_order;
  js["orders"] = res.orders;
  nlohmann::json lv = nlohmann::json::array();
  for (const StudyLevel& l : res.levels)
    lv.push_back({{"Nr", l.Nr}, {"Ntheta", l.Ntheta}, {"steps", l.steps}, {"err", l.err}});
  js["levels"] = lv;
  std::ofstream((std::filesystem::path(outdir) / "study.json").string())
      << js.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Offline snapshot check.

struct SnapshotData {
  DomainSpec domain;
  double alpha = 0.0;
  Flavor flavor = Flavor::physical;
  double t = 0.0, s = 0.0;
  ScalePlan plan;
  double grad0 = 0.0, M_lo = 0.0, M_hi = 0.0, HT_floor = 0.0, area0 = 0.0;
  double C_tol = 10.0;
  std::string hash;
  std::vector<double> phi;  // real nodes
};

inline SnapshotData read_snapshot(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open snapshot: " + path);
  SnapshotData sd;
  std::string line;
  auto grab = [&line](const char* key, double* out) {
    const std::string pat = std::string(key) + "=";
    const auto pos = line.find(pat);
    if (pos == std::string::npos) return;
    *out = std::strtod(line.c_str() + pos + pat.size(), nullptr);
  };
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') {
      double tmp = 0.0;
      grab("n", &tmp);
      if (line.find(" n=") != std::string::npos) sd.domain.n = int(tmp);
      grab("R", &sd.domain.R);
      tmp = 0;
      grab("Nr", &tmp);
      if (tmp != 0.0) sd.domain.Nr = int(tmp);
      tmp = 0;
      grab("Ntheta", &tmp);
      if (tmp != 0.0) sd.domain.Ntheta = int(tmp);
      grab("alpha", &sd.alpha);
      grab("t", &sd.t);
      grab("s", &sd.s);
      grab("c", &sd.plan.c);
      grab("phi1", &sd.plan.phi1);
      grab("phi2", &sd.plan.phi2);
      grab("grad0", &sd.grad0);
      grab("M_lo", &sd.M_lo);
      grab("M_hi", &sd.M_hi);
      grab("HT_floor", &sd.HT_floor);
      grab("area0", &sd.area0);
      grab("C_tol", &sd.C_tol);
      if (line.find("flavor=rescaled") != std::string::npos)
        sd.flavor = Flavor::rescaled;
      const auto hp = line.find("config_hash=");
      if (hp != std::string::npos) sd.hash = line.substr(hp + 12);
      continue;
    }
    // data row: i,x0,x1,phi,u,v
    double cols[6];
    const char* p = line.c_str();
    char* end = nullptr;
    int got = 0;
    for (int c = 0; c < 6; ++c) {
      cols[c] = std::strtod(p, &end);
      if (end == p) break;
      ++got;
      p = (*end == ',') ? end + 1 : end;
    }
    if (got == 6) sd.phi.push_back(cols[3]);
  }
  sd.plan.alpha = sd.alpha;
  sd.plan.n = sd.domain.n;
  return sd;
}

struct SnapshotCheck {
  int exit_code = 0;
  std::vector<std::string> report;
};

/// Re-run the slice-level estimate checks on a stored snapshot.
inline SnapshotCheck check_snapshot(const std::string& path) {
  const SnapshotData sd = read_snapshot(path);
  SnapshotCheck out;
  Grid grid = build_grid(sd.domain);
  if (int(sd.phi.size()) != grid.n_real)
    throw std::runtime_error("snapshot node count mismatch: got " +
                             std::to_string(sd.phi.size()) + ", grid has " +
                             std::to_string(grid.n_real));
  GraphField f = make_field(grid, sd.flavor);
  f.time = (sd.flavor == Flavor::physical) ? sd.t : sd.s;
  for (int i = 0; i < grid.n_real; ++i) {
    f.phi[i] = sd.phi[i];
    f.u[i] = std::exp(sd.phi[i]);
  }
  apply_neumann(f, grid);

  const AdmissibilityReport rep = check_admissible(f, grid);
  char buf[256];
  std::snprintf(buf, sizeof(buf), "admissible: %s (min 1-|Dphi|^2 = %.3e, min D = %.3e)",
                rep.ok ? "yes" : "NO", rep.min_spacelike_margin, rep.min_convexity);
  out.report.push_back(buf);
  if (!rep.ok) {
    out.exit_code = 3;
    return out;
  }

  const ToleranceModel tol = ToleranceModel::for_grid(grid, sd.C_tol, 0.05);
  MonitorEngine engine(grid, sd.plan, tol);
  // Seed the anchors from the stored run aggregates, then observe the slice.
  engine.seed_anchors(sd.grad0, sd.M_lo, sd.M_hi, sd.HT_floor, sd.area0);
  engine.observe(f, 0, 0.0);
  for (const Violation& v : engine.violations()) {
    std::snprintf(buf, sizeof(buf), "violation: %s margin=%.3e threshold=%.3e",
                  v.check.c_str(), v.margin, v.threshold);
    out.report.push_back(buf);
  }
  const MonitorRecord& r = engine.records().back();
  std::snprintf(buf, sizeof(buf),
                "phi in [%.6g, %.6g], envelope [%.6g, %.6g], sup|Dphi| = %.6g",
                r.inf_phi, r.sup_phi, r.env_lo, r.env_hi, r.sup_grad);
  out.report.push_back(buf);
  std::snprintf(buf, sizeof(buf), "M in [%.6g, %.6g], H*Theta in [%.6g, %.6g]",
                r.M_min, r.M_max, r.Htheta_min, r.Htheta_max);
  out.report.push_back(buf);
  if (!engine.violations().empty()) out.exit_code = 5;
  return out;
}

}  // namespace imcf
