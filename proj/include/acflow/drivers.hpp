/**
 * @file drivers.hpp
 * @brief Run drivers: adaptive flow runs with CSV rows, the tolerance-ladder
 *        convergence study, GA/min comparison and randomized energy audits.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <future>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "acflow/ac_stepper.hpp"
#include "acflow/energy.hpp"
#include "acflow/run_config.hpp"
#include "acflow/scenario.hpp"

namespace acflow {

struct FlowRow {
  long step = 0;
  double t = 0.0, k = 0.0, eps = 0.0;
  double est1 = 0.0, est2 = 0.0, est_c = 0.0;
  bool has_est1 = false, has_est2 = false;
  int rejections = 0;
  int order = 1;
  double div_norm = 0.0;
  double energy = 0.0;
  std::optional<double> err_u, err_p;
  double center_pressure = 0.0;
};

struct FlowRun {
  std::vector<FlowRow> rows;
  FlowState final_state;
  std::optional<double> err_u, err_p;
  double avg_k = 0.0;
  double avg_eps = 0.0;       ///< time-weighted
  double avg_div = 0.0;       ///< time-weighted ||div u||
  double max_continuity_residual = 0.0;
  double max_filter_gap = 0.0;
  int rejections = 0;
};

namespace detail {

inline double mean_free_distance(const CellField& a, const CellField& b) {
  CellField d = a - b;
  double m = 0.0;
  for (double v : d.values()) m += v;
  m /= static_cast<double>(d.values().size());
  for (double& v : d.values()) v -= m;
  return norm(d);
}

inline double center_pressure(const CellField& p) {
  const MacGrid& g = p.grid();
  const int i = g.nx() / 2, j = g.ny() / 2;
  if (g.nx() % 2 == 1 && g.ny() % 2 == 1) return p(i, j);
  // average of the cells touching the center
  const int i0 = g.nx() % 2 ? i : i - 1, j0 = g.ny() % 2 ? j : j - 1;
  double s = 0.0;
  int n = 0;
  for (int jj = j0; jj <= j; ++jj)
    for (int ii = i0; ii <= i; ++ii, ++n) s += p(ii, jj);
  return s / n;
}

}  // namespace detail

/// Adaptive run from the scenario's initial data to t_final. The last step
/// is clipped to land on t_final.
inline FlowRun run_flow(const Scenario& sc, const MacGrid& g, const SchemeConfig& cfg, double k0, double eps0,
                        double t_final, const std::function<void(const FlowRow&)>& on_row = {}) {
  FlowRun run;
  FlowState s = FlowState::initial(sc.initial_velocity(g), sc.initial_pressure(g), k0, eps0);
  const Forcing f = sc.forcing_fn(g);
  const double span = t_final;
  double sum_eps = 0.0, sum_div = 0.0;
  while (t_final - s.t > 1e-12 * span) {
    double remaining = t_final - s.t;
    if (s.window.k_next > remaining || remaining - s.window.k_next < 1e-8 * span) s.window.k_next = remaining;
    StepOutcome o = step(s, cfg, f);
    const StepReport& r = o.report;
    FlowRow row;
    row.step = o.state.steps;
    row.t = r.t;
    row.k = r.k_used;
    row.eps = r.eps_used;
    row.est1 = r.est1;
    row.est2 = r.est2;
    row.est_c = r.est_c;
    row.has_est1 = r.has_est1;
    row.has_est2 = r.has_est2;
    row.rejections = r.rejections;
    row.order = r.order_chosen;
    row.div_norm = r.div_norm;
    row.energy = r.energy;
    row.center_pressure = detail::center_pressure(o.state.p_cur);
    if (sc.has_exact()) {
      row.err_u = norm(o.state.u_cur - sc.exact_velocity(g, r.t));
      row.err_p = detail::mean_free_distance(o.state.p_cur, sc.exact_pressure(g, r.t));
    }
    sum_eps += r.k_used * r.eps_used;
    sum_div += r.k_used * r.div_norm;
    run.rejections += r.rejections;
    run.max_continuity_residual = std::max(run.max_continuity_residual, r.continuity_residual);
    run.max_filter_gap = std::max(run.max_filter_gap, r.filter_gap);
    if (on_row) on_row(row);
    run.rows.push_back(std::move(row));
    s = std::move(o.state);
  }
  const double elapsed = s.t;
  run.avg_k = elapsed / static_cast<double>(run.rows.size());
  run.avg_eps = sum_eps / elapsed;
  run.avg_div = sum_div / elapsed;
  if (!run.rows.empty()) {
    run.err_u = run.rows.back().err_u;
    run.err_p = run.rows.back().err_p;
  }
  run.final_state = std::move(s);
  return run;
}

inline SchemeConfig scheme_from(const RunConfig& c, double nu) {
  SchemeConfig s;
  s.continuity = c.continuity;
  s.order_mode = c.order;
  s.tolerances.tol_m = c.tol_m;
  s.tolerances.tol_c = c.tol_c;
  s.nu = nu;
  s.eps_min = c.eps_min;
  s.eps_max = c.eps_max;
  s.pressure_velocity = c.pressure_velocity;
  s.adapt_k = c.adapt_k;
  s.adapt_eps = c.adapt_eps;
  s.band_rule = c.band_rule;
  s.step_estimator = c.step_estimator;
  return s;
}

inline Scenario scenario_for(const RunConfig& c) {
  Scenario sc = scenario_by_name(c.scenario);
  if (c.nu > 0.0) {
    if (c.scenario == "mms") sc = manufactured(c.nu);
    else if (c.scenario == "mms_discrete") sc = manufactured_discrete(c.nu);
    else if (c.scenario == "audit") sc = audit_problem(c.nu);
    else sc = driven_square(c.nu, sc.t_final);
  }
  if (c.t_final > 0.0) sc.t_final = c.t_final;
  return sc;
}

struct ConvergenceEntry {
  double tol = 0.0;
  double err_u = 0.0, err_p = 0.0;
  double avg_k = 0.0, avg_eps = 0.0;
  int rejections = 0;
  long steps = 0;
  double max_continuity_residual = 0.0;
};

struct ConvergenceTable {
  std::vector<ConvergenceEntry> entries;
  double slope_u = 0.0;  ///< least-squares slope of log err_u against log avg_k
  double slope_p = 0.0;
  bool monotone = false;  ///< err_u decreases as the tolerance tightens
};

inline double regression_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double den = n * sxx - sx * sx;
  return den == 0.0 ? std::numeric_limits<double>::quiet_NaN() : (n * sxy - sx * sy) / den;
}

/// Runs the tolerance ladder (tol_m = tol_c = tol) on a scenario with an exact
/// solution. Ladder entries run as independent concurrent sessions.
inline ConvergenceTable run_convergence(const RunConfig& c, std::vector<FlowRun>* runs = nullptr) {
  if (c.tol_ladder.size() < 3) throw ConfigError("run_convergence: ladder needs at least 3 tolerances");
  const Scenario sc = scenario_for(c);
  if (!sc.has_exact()) throw ConfigError("run_convergence: scenario has no exact solution");
  const MacGrid g = sc.grid(c.nx, c.ny);
  std::vector<std::future<FlowRun>> jobs;
  for (double tol : c.tol_ladder) {
    RunConfig rc = c;
    rc.tol_m = tol;
    rc.tol_c = tol;
    jobs.push_back(std::async(std::launch::async, [&sc, &g, rc] {
      return run_flow(sc, g, scheme_from(rc, sc.nu), rc.k0, rc.eps0, sc.t_final);
    }));
  }
  ConvergenceTable table;
  std::vector<double> lk, lu, lp;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    FlowRun r = jobs[i].get();
    ConvergenceEntry e;
    e.tol = c.tol_ladder[i];
    e.err_u = *r.err_u;
    e.err_p = *r.err_p;
    e.avg_k = r.avg_k;
    e.avg_eps = r.avg_eps;
    e.rejections = r.rejections;
    e.steps = static_cast<long>(r.rows.size());
    e.max_continuity_residual = r.max_continuity_residual;
    table.entries.push_back(e);
    lk.push_back(std::log(e.avg_k));
    lu.push_back(std::log(e.err_u));
    lp.push_back(std::log(e.err_p));
    if (runs) runs->push_back(std::move(r));
  }
  table.slope_u = regression_slope(lk, lu);
  table.slope_p = regression_slope(lk, lp);
  std::vector<ConvergenceEntry> by_tol = table.entries;
  std::sort(by_tol.begin(), by_tol.end(), [](const auto& a, const auto& b) { return a.tol > b.tol; });
  table.monotone = true;
  for (std::size_t i = 1; i < by_tol.size(); ++i) table.monotone = table.monotone && by_tol[i].err_u < by_tol[i - 1].err_u;
  return table;
}

struct ComparisonResult {
  FlowRun ga;
  FlowRun min;
};

/// Matched GA and min runs at constant k = c.k0 with eps adapted to tol_c,
/// run concurrently.
inline ComparisonResult run_comparison(const RunConfig& c) {
  const Scenario sc = scenario_for(c);
  const MacGrid g = sc.grid(c.nx, c.ny);
  auto launch = [&](Continuity variant) {
    RunConfig rc = c;
    rc.adapt_k = false;
    rc.continuity = variant;
    return std::async(std::launch::async, [&sc, &g, rc] {
      return run_flow(sc, g, scheme_from(rc, sc.nu), rc.k0, rc.eps0, sc.t_final);
    });
  };
  auto ga = launch(Continuity::ga);
  auto mn = launch(Continuity::min);
  ComparisonResult out;
  out.ga = ga.get();
  out.min = mn.get();
  return out;
}

/// Randomized (k_n, eps_n) schedule: k in [0.005, 0.02], eps log-uniform in
/// [1e-4, 1e-2]. constant_k repeats the first k.
inline std::vector<std::pair<double, double>> audit_schedule(int steps, unsigned long seed, bool constant_k) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uk(0.005, 0.02);
  std::uniform_real_distribution<double> le(std::log(1e-4), std::log(1e-2));
  std::vector<std::pair<double, double>> s;
  const double k_fixed = uk(rng);
  for (int i = 0; i < steps; ++i) {
    const double k = constant_k ? k_fixed : uk(rng);
    s.emplace_back(k, std::exp(le(rng)));
  }
  return s;
}

/// Energy audit on the audit scenario. First-order modes audit the
/// first-order equality for the chosen variant; order 2 audits the
/// constant-step GA equality.
inline EnergyBudget run_audit(const RunConfig& c) {
  if (!c.audit) throw ConfigError("run_audit: audit flag not set");
  if (c.order == OrderMode::variable) throw ConfigError("run_audit: no energy equality for variable order");
  if (c.order == OrderMode::second && c.continuity != Continuity::ga) {
    throw ConfigError("run_audit: the second-order equality covers the GA method only");
  }
  RunConfig rc = c;
  if (c.scenario == "mms" || c.scenario.empty()) rc.scenario = "audit";
  const Scenario sc = scenario_for(rc);
  const MacGrid g = sc.grid(c.nx, c.ny);
  SchemeConfig cfg = scheme_from(c, sc.nu);
  cfg.pressure_velocity = PressureVelocity::unfiltered;
  const bool second = c.order == OrderMode::second;
  const auto sched = audit_schedule(c.steps, c.seed, second);
  const Trajectory tr =
      record_scheduled_run(sc.initial_velocity(g), sc.initial_pressure(g), c.eps0, sched, cfg, sc.forcing_fn(g));
  return second ? energy_audit_second_order(tr) : energy_audit_first_order(tr);
}

inline void write_csv_header(std::ostream& o) {
  o << "step,t,k,eps,est1,est2,est_c,rejections,order,div_norm,energy,err_u,err_p\n";
}

inline void write_csv_row(std::ostream& o, const FlowRow& r) {
  char buf[512];
  auto num = [](double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.10e", v);
    return std::string(b);
  };
  std::snprintf(buf, sizeof buf, "%ld,%s,%s,%s,%s,%s,%s,%d,%d,%s,%s,%s,%s\n", r.step, num(r.t).c_str(),
                num(r.k).c_str(), num(r.eps).c_str(), r.has_est1 ? num(r.est1).c_str() : "",
                r.has_est2 ? num(r.est2).c_str() : "", num(r.est_c).c_str(), r.rejections, r.order,
                num(r.div_norm).c_str(), num(r.energy).c_str(), r.err_u ? num(*r.err_u).c_str() : "",
                r.err_p ? num(*r.err_p).c_str() : "");
  o << buf;
}

inline void write_csv(std::ostream& o, const std::vector<FlowRow>& rows) {
  write_csv_header(o);
  for (const FlowRow& r : rows) write_csv_row(o, r);
}

inline void print_budget(std::ostream& o, const EnergyBudget& b) {
  char buf[128];
  auto line = [&](const char* name, double v) {
    std::snprintf(buf, sizeof buf, "  %-22s %.15e\n", name, v);
    o << buf;
  };
  line("energy_start", b.energy_start);
  line("energy_end", b.energy_end);
  line("velocity_jumps", b.velocity_jumps);
  line("pressure_jumps", b.pressure_jumps);
  line("viscous", b.viscous);
  line("forcing_work", b.forcing_work);
  line("lhs", b.lhs);
  line("rhs", b.rhs);
  line("residual", b.residual);
  line("relative_residual", b.relative_residual);
  line("max_step_defect", b.max_step_defect);
  line("max_identity_gap", b.max_identity_gap);
}

}  // namespace acflow
