#pragma once

// Plain-text key = value run configuration. '#' starts a comment, blank
// lines are skipped, unknown keys are rejected. Errors carry the offending
// field name.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "imcf/domain.hpp"
#include "imcf/solver.hpp"

namespace imcf {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class Preset { constant, bump };

struct RunConfig {
  DomainSpec domain;
  FlowParams flow;
  double convergence_tol = 0.0;  // rescaled runs stop when osc(u~) < tol (0 = off)
  long monitor_stride = 100;

  Preset preset = Preset::constant;
  double initial_c = 0.0;    // constant preset: phi0 == c
  double initial_r0 = 1.0;   // bump preset
  double initial_eps = 0.0;  // bump preset

  bool rescale_c_set = false;
  double rescale_c = 0.0;  // optional override of the blow-down constant

  std::string out_dir = "out";
  long snapshot_stride = 0;  // records between field snapshots (0 = ends only)

  double C_tol = 10.0;
  double area_ode_tol = 0.05;

  std::map<std::string, std::string> raw;  // canonical parsed key/value
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline double want_num(const std::map<std::string, std::string>& kv,
                       const std::string& key, double fallback, bool* seen = nullptr) {
  auto it = kv.find(key);
  if (it == kv.end()) {
    if (seen) *seen = false;
    return fallback;
  }
  if (seen) *seen = true;
  try {
    size_t pos = 0;
    const double x = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("");
    return x;
  } catch (...) {
    throw ConfigError("config field '" + key + "': not a number: '" + it->second + "'");
  }
}

inline long want_int(const std::map<std::string, std::string>& kv,
                     const std::string& key, long fallback) {
  const double x = want_num(kv, key, double(fallback));
  const long v = long(x);
  if (double(v) != x)
    throw ConfigError("config field '" + key + "': expected an integer");
  return v;
}

}  // namespace detail

inline RunConfig parse_config_text(const std::string& text) {
  static const char* known[] = {
      "domain.n",        "domain.R",           "domain.Nr",
      "domain.Ntheta",   "flow.alpha",         "flow.mode",
      "flow.stepper",    "flow.cfl",           "flow.horizon",
      "flow.max_steps",  "flow.convergence_tol", "flow.monitor_stride",
      "initial.preset",  "initial.c",          "initial.r0",
      "initial.eps",     "rescale.c",          "output.dir",
      "output.snapshot_stride", "tolerances.C_tol", "tolerances.area_ode",
  };
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError("config line " + std::to_string(lineno) +
                               ": unknown key '" + key + "'");
    if (kv.count(key))
      throw ConfigError("config field '" + key + "': duplicate");
    if (val.empty())
      throw ConfigError("config field '" + key + "': empty value");
    kv[key] = val;
  }

  RunConfig c;
  c.raw = kv;
  c.domain.n = int(detail::want_int(kv, "domain.n", 2));
  if (c.domain.n != 1 && c.domain.n != 2)
    throw ConfigError("config field 'domain.n': must be 1 or 2");
  c.domain.R = detail::want_num(kv, "domain.R", 1.0);
  if (!(c.domain.R > 0.0))
    throw ConfigError("config field 'domain.R': must be positive");
  c.domain.Nr = int(detail::want_int(kv, "domain.Nr", 32));
  c.domain.Ntheta = int(detail::want_int(kv, "domain.Ntheta", 32));

  c.flow.alpha = detail::want_num(kv, "flow.alpha", 0.0);
  if (!(c.flow.alpha <= 0.0))
    throw ConfigError("config field 'flow.alpha': must be <= 0");
  if (auto it = kv.find("flow.mode"); it != kv.end()) {
    if (it->second == "physical") c.flow.mode = FlowMode::physical;
    else if (it->second == "rescaled") c.flow.mode = FlowMode::rescaled;
    else throw ConfigError("config field 'flow.mode': expected physical|rescaled");
  }
  if (auto it = kv.find("flow.stepper"); it != kv.end()) {
    if (it->second == "euler") c.flow.stepper = Stepper::euler;
    else if (it->second == "rk2") c.flow.stepper = Stepper::rk2;
    else throw ConfigError("config field 'flow.stepper': expected euler|rk2");
  }
  c.flow.cfl = detail::want_num(kv, "flow.cfl", 0.4);
  if (!(c.flow.cfl > 0.0 && c.flow.cfl <= 1.0))
    throw ConfigError("config field 'flow.cfl': must lie in (0, 1]");
  c.flow.horizon = detail::want_num(kv, "flow.horizon", 1.0);
  if (!(c.flow.horizon > 0.0))
    throw ConfigError("config field 'flow.horizon': must be positive");
  c.flow.max_steps = detail::want_int(kv, "flow.max_steps", 0);
  if (c.flow.max_steps < 0)
    throw ConfigError("config field 'flow.max_steps': must be >= 0");
  c.convergence_tol = detail::want_num(kv, "flow.convergence_tol", 0.0);
  if (c.convergence_tol < 0.0)
    throw ConfigError("config field 'flow.convergence_tol': must be >= 0");
  c.monitor_stride = detail::want_int(kv, "flow.monitor_stride", 100);
  if (c.monitor_stride < 1)
    throw ConfigError("config field 'flow.monitor_stride': must be >= 1");

  if (auto it = kv.find("initial.preset"); it != kv.end()) {
    if (it->second == "constant") c.preset = Preset::constant;
    else if (it->second == "bump") c.preset = Preset::bump;
    else throw ConfigError("config field 'initial.preset': expected constant|bump");
  }
  c.initial_c = detail::want_num(kv, "initial.c", 0.0);
  c.initial_r0 = detail::want_num(kv, "initial.r0", 1.0);
  if (!(c.initial_r0 > 0.0))
    throw ConfigError("config field 'initial.r0': must be positive");
  c.initial_eps = detail::want_num(kv, "initial.eps", 0.0);
  if (!(c.initial_eps > -1.0 && c.initial_eps < 1.0))
    throw ConfigError("config field 'initial.eps': must lie in (-1, 1)");
  c.rescale_c = detail::want_num(kv, "rescale.c", 0.0, &c.rescale_c_set);

  if (auto it = kv.find("output.dir"); it != kv.end()) c.out_dir = it->second;
  c.snapshot_stride = detail::want_int(kv, "output.snapshot_stride", 0);
  if (c.snapshot_stride < 0)
    throw ConfigError("config field 'output.snapshot_stride': must be >= 0");
  c.C_tol = detail::want_num(kv, "tolerances.C_tol", 10.0);
  if (!(c.C_tol > 0.0))
    throw ConfigError("config field 'tolerances.C_tol': must be positive");
  c.area_ode_tol = detail::want_num(kv, "tolerances.area_ode", 0.05);
  if (!(c.area_ode_tol > 0.0))
    throw ConfigError("config field 'tolerances.area_ode': must be positive");
  return c;
}

inline RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

/// FNV-1a over the canonical sorted "key=value\n" serialization, so the hash
/// is insensitive to comments, ordering and whitespace.
inline std::string config_hash(const RunConfig& c) {
  uint64_t h = 1469598103934665603ull;
  auto feed = [&h](const std::string& s) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 1099511628211ull;
    }
  };
  for (const auto& [k, v] : c.raw) {
    feed(k);
    feed("=");
    feed(v);
    feed("\n");
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", (unsigned long long)h);
  return std::string(buf);
}

}  // namespace imcf
