// Command-line front end: `run <config>`, `study <config> --levels k`,
// `check <snapshot>`. Exit codes: 0 ok, 2 config/usage error, 3 inadmissible
// initial data, 4 flow failure, 5 estimate violation.

#include <clocale>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "imcf/runner.hpp"

namespace {

int do_run(const std::string& cfg_path) {
  const imcf::RunConfig cfg = imcf::parse_config_file(cfg_path);
  const imcf::RunArtifacts art = imcf::run_from_config(cfg, true);
  std::printf("run %s status=%s exit=%d steps=%ld\n", art.hash.c_str(),
              imcf::detail::status_name(art.status), art.exit_code,
              art.traj.steps);
  if (art.exit_code == 3) {
    std::printf("initial data rejected: %s\n", art.traj.message.c_str());
    return art.exit_code;
  }
  if (!art.records.empty()) {
    const imcf::MonitorRecord& r = art.records.back();
    std::printf("final t=%.6g s=%.6g osc_u=%.3e area=%.9g\n", r.t, r.s,
                r.osc_u, r.area);
  }
  if (!art.traj.message.empty())
    std::printf("note: %s\n", art.traj.message.c_str());
  std::printf(
      "margins: c0=%.3e grad=%.3e M=%.3e Htheta=%.3e area=%.3e metric=%.3e\n",
      art.margins.c0, art.margins.grad, art.margins.msand, art.margins.htheta,
      art.margins.area_sandwich, art.margins.metric);
  std::printf("area_ode_resid=%.3e\n", art.area_ode_resid);
  std::printf("limit_radius r_inf=%.9g interval=[%.9g, %.9g] pass=%s\n",
              art.limit_radius.r_inf, art.limit_radius.lower,
              art.limit_radius.upper, art.limit_radius.pass ? "yes" : "no");
  for (const imcf::Violation& v : art.violations)
    std::printf("violation: %s at t=%.6g margin=%.3e threshold=%.3e\n",
                v.check.c_str(), v.time, v.margin, v.threshold);
  std::printf("violations=%zu outputs=%s runtime=%.2fs\n",
              art.violations.size(), art.out_dir.c_str(),
              art.runtime_seconds);
  return art.exit_code;
}

int do_study(const std::string& cfg_path, int levels) {
  const imcf::RunConfig cfg = imcf::parse_config_file(cfg_path);
  const imcf::StudyResult res = imcf::convergence_study(cfg, levels);
  imcf::write_study(res, cfg);
  std::printf("study %s levels=%d\n", res.hash.c_str(), levels);
  for (size_t l = 0; l < res.levels.size(); ++l) {
    const imcf::StudyLevel& lev = res.levels[l];
    std::printf("  level %zu: %dx%d steps=%ld err=%.6e", l, lev.Nr,
                lev.Ntheta, lev.steps, lev.err);
    if (l > 0 && l - 1 < res.orders.size())
      std::printf(" order=%.3f", res.orders[l - 1]);
    std::printf("\n");
  }
  std::printf("observed_order=%.3f\n", res.observed_order);
  return 0;
}

int do_check(const std::string& snap_path) {
  const imcf::SnapshotCheck chk = imcf::check_snapshot(snap_path);
  for (const std::string& line : chk.report)
    std::printf("%s\n", line.c_str());
  std::printf("check exit=%d\n", chk.exit_code);
  return chk.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  std::setlocale(LC_ALL, "C");
  CLI::App app{"spacelike graphical inverse-mean-curvature flow in hyperbolic space"};
  app.require_subcommand(1);

  std::string cfg_path, snap_path;
  int levels = 3;
  CLI::App* run = app.add_subcommand("run", "execute one configured flow run");
  run->add_option("config", cfg_path, "key = value config file")->required();
  CLI::App* study = app.add_subcommand("study", "grid refinement study");
  study->add_option("config", cfg_path, "key = value config file")->required();
  study->add_option("--levels", levels, "grid levels, doubling each (default 3)");
  CLI::App* check = app.add_subcommand("check", "re-check a stored snapshot");
  check->add_option("snapshot", snap_path, "snapshot CSV from a run")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return do_run(cfg_path);
    if (study->parsed()) return do_study(cfg_path, levels);
    return do_check(snap_path);
  } catch (const imcf::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
