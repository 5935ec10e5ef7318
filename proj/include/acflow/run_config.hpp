/**
 * @file run_config.hpp
 * @brief Flat `key = value` run configuration with '#' comments.
 */
#pragma once

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "acflow/ac_stepper.hpp"

namespace acflow {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string scenario = "mms";
  int nx = 64;
  int ny = 64;
  double tol_m = 1e-3;
  double tol_c = 1e-3;
  Continuity continuity = Continuity::ga;
  OrderMode order = OrderMode::first;
  double k0 = 1e-3;
  double eps0 = 1e-3;
  double eps_min = 1e-8;
  double eps_max = 1e-1;
  /// Zero selects the scenario's own value.
  double t_final = 0.0;
  double nu = 0.0;
  std::string output;
  bool audit = false;
  unsigned long seed = 1;
  int steps = 50;
  bool adapt_k = true;
  bool adapt_eps = true;
  bool band_rule = false;
  PressureVelocity pressure_velocity = PressureVelocity::filtered;
  StepEstimator step_estimator = StepEstimator::order_matched;
  std::vector<double> tol_ladder{1e-3, 5.6234132519034908e-4, 3.1622776601683794e-4};

  void validate() const {
    if (nx < 4 || ny < 4) throw ConfigError("grid must have at least 4 cells per direction");
    if (!(tol_m > 0.0 && tol_c > 0.0)) throw ConfigError("tolerances must be positive");
    if (!(k0 > 0.0 && eps0 > 0.0)) throw ConfigError("k0 and eps0 must be positive");
    if (!(eps_min > 0.0 && eps_min <= eps_max)) throw ConfigError("need 0 < eps_min <= eps_max");
    if (t_final < 0.0 || nu < 0.0) throw ConfigError("t_final and nu must be nonnegative");
    if (steps < 1) throw ConfigError("steps must be >= 1");
    for (double t : tol_ladder)
      if (!(t > 0.0)) throw ConfigError("ladder tolerances must be positive");
  }

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

inline std::string to_string(Continuity c) { return c == Continuity::ga ? "ga" : "min"; }

inline std::string to_string(OrderMode o) {
  switch (o) {
    case OrderMode::first:
      return "1";
    case OrderMode::second:
      return "2";
    case OrderMode::variable:
      return "var";
  }
  return "?";
}

inline std::string to_string(PressureVelocity p) {
  return p == PressureVelocity::filtered ? "filtered" : "unfiltered";
}

inline std::string to_string(StepEstimator e) { return e == StepEstimator::order_matched ? "order" : "est1"; }

inline StepEstimator parse_step_estimator(const std::string& s) {
  if (s == "order") return StepEstimator::order_matched;
  if (s == "est1") return StepEstimator::first_order;
  throw ConfigError("step_estimator must be 'order' or 'est1', got '" + s + "'");
}

inline Continuity parse_continuity(const std::string& s) {
  if (s == "ga") return Continuity::ga;
  if (s == "min") return Continuity::min;
  throw ConfigError("continuity must be 'ga' or 'min', got '" + s + "'");
}

inline OrderMode parse_order(const std::string& s) {
  if (s == "1") return OrderMode::first;
  if (s == "2") return OrderMode::second;
  if (s == "var") return OrderMode::variable;
  throw ConfigError("order must be 1, 2 or var, got '" + s + "'");
}

inline PressureVelocity parse_pressure_velocity(const std::string& s) {
  if (s == "filtered") return PressureVelocity::filtered;
  if (s == "unfiltered") return PressureVelocity::unfiltered;
  throw ConfigError("pressure_velocity must be filtered or unfiltered, got '" + s + "'");
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
  errno = 0;
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || errno == ERANGE || !std::isfinite(d)) {
    throw ConfigError("bad number for '" + key + "': '" + v + "'");
  }
  return d;
}

inline long parse_long(const std::string& key, const std::string& v) {
  errno = 0;
  char* end = nullptr;
  const long n = std::strtol(v.c_str(), &end, 10);
  if (v.empty() || *end != '\0' || errno == ERANGE) throw ConfigError("bad integer for '" + key + "': '" + v + "'");
  return n;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("bad boolean for '" + key + "': '" + v + "'");
}

inline std::string fmt(double d) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  return buf;
}

}  // namespace detail

inline void apply_setting(RunConfig& c, const std::string& key, const std::string& v) {
  using namespace detail;
  if (key == "scenario") c.scenario = v;
  else if (key == "nx") c.nx = static_cast<int>(parse_long(key, v));
  else if (key == "ny") c.ny = static_cast<int>(parse_long(key, v));
  else if (key == "grid") c.nx = c.ny = static_cast<int>(parse_long(key, v));
  else if (key == "tol_m") c.tol_m = parse_double(key, v);
  else if (key == "tol_c") c.tol_c = parse_double(key, v);
  else if (key == "continuity") c.continuity = parse_continuity(v);
  else if (key == "order") c.order = parse_order(v);
  else if (key == "k0") c.k0 = parse_double(key, v);
  else if (key == "eps0") c.eps0 = parse_double(key, v);
  else if (key == "eps_min") c.eps_min = parse_double(key, v);
  else if (key == "eps_max") c.eps_max = parse_double(key, v);
  else if (key == "t_final") c.t_final = parse_double(key, v);
  else if (key == "nu") c.nu = parse_double(key, v);
  else if (key == "output") c.output = v;
  else if (key == "audit") c.audit = parse_bool(key, v);
  else if (key == "seed") c.seed = static_cast<unsigned long>(parse_long(key, v));
  else if (key == "steps") c.steps = static_cast<int>(parse_long(key, v));
  else if (key == "adapt_k") c.adapt_k = parse_bool(key, v);
  else if (key == "adapt_eps") c.adapt_eps = parse_bool(key, v);
  else if (key == "band_rule") c.band_rule = parse_bool(key, v);
  else if (key == "pressure_velocity") c.pressure_velocity = parse_pressure_velocity(v);
  else if (key == "step_estimator") c.step_estimator = parse_step_estimator(v);
  else if (key == "tol_ladder") {
    c.tol_ladder.clear();
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) c.tol_ladder.push_back(parse_double(key, trim(item)));
  } else {
    throw ConfigError("unknown key '" + key + "'");
  }
}

/// Parses configuration text on top of `base`.
inline RunConfig parse_config(const std::string& text, RunConfig base = {}) {
  RunConfig c = std::move(base);
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    try {
      apply_setting(c, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  c.validate();
  return c;
}

inline RunConfig load_config(const std::string& path, RunConfig base = {}) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

inline std::string render_config(const RunConfig& c) {
  using detail::fmt;
  std::ostringstream o;
  o << "scenario = " << c.scenario << "\n";
  o << "nx = " << c.nx << "\n";
  o << "ny = " << c.ny << "\n";
  o << "tol_m = " << fmt(c.tol_m) << "\n";
  o << "tol_c = " << fmt(c.tol_c) << "\n";
  o << "continuity = " << to_string(c.continuity) << "\n";
  o << "order = " << to_string(c.order) << "\n";
  o << "k0 = " << fmt(c.k0) << "\n";
  o << "eps0 = " << fmt(c.eps0) << "\n";
  o << "eps_min = " << fmt(c.eps_min) << "\n";
  o << "eps_max = " << fmt(c.eps_max) << "\n";
  o << "t_final = " << fmt(c.t_final) << "\n";
  o << "nu = " << fmt(c.nu) << "\n";
  o << "output = " << c.output << "\n";
  o << "audit = " << (c.audit ? "true" : "false") << "\n";
  o << "seed = " << c.seed << "\n";
  o << "steps = " << c.steps << "\n";
  o << "adapt_k = " << (c.adapt_k ? "true" : "false") << "\n";
  o << "adapt_eps = " << (c.adapt_eps ? "true" : "false") << "\n";
  o << "band_rule = " << (c.band_rule ? "true" : "false") << "\n";
  o << "pressure_velocity = " << to_string(c.pressure_velocity) << "\n";
  o << "step_estimator = " << to_string(c.step_estimator) << "\n";
  o << "tol_ladder = ";
  for (std::size_t i = 0; i < c.tol_ladder.size(); ++i) o << (i ? ", " : "") << fmt(c.tol_ladder[i]);
  o << "\n";
  return o.str();
}

}  // namespace acflow
