/**
 * @file acflow_cli.cpp
 * @brief Command-line driver for the artificial-compression flow library.
 *
 * Exit codes: 0 success, 1 tolerance or acceptance failure, 2 solver
 * failure, 3 configuration error.
 */
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "acflow/acflow.hpp"

namespace fs = std::filesystem;
using namespace acflow;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitTolerance = 1;
constexpr int kExitSolver = 2;
constexpr int kExitConfig = 3;

constexpr double kAuditRelTol = 1e-8;
constexpr double kSlopeBand = 0.3;
constexpr double kOdeBeBand = 0.15;
constexpr double kOdeFilteredBand = 0.2;
constexpr double kEpsRatio = 0.5;

/// Flags shared by every subcommand. Unset flags leave the config untouched.
struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<unsigned long> seed;
  std::optional<int> grid;
  std::optional<std::string> order;
  std::optional<std::string> continuity;
};

void add_common(CLI::App* sub, CommonFlags& f) {
  sub->add_option("--config", f.config, "key = value configuration file")->check(CLI::ExistingFile);
  sub->add_option("--out", f.out, "output directory for per-run CSV files");
  sub->add_option("--seed", f.seed, "seed for randomized audit schedules");
  sub->add_option("--grid", f.grid, "cells per direction");
  sub->add_option("--order", f.order, "time-stepping order")->check(CLI::IsMember({"1", "2", "var"}));
  sub->add_option("--continuity", f.continuity, "continuity update")->check(CLI::IsMember({"ga", "min"}));
}

/// Preset, then the config file, then the command-line flags.
RunConfig resolve(const CommonFlags& f, RunConfig preset) {
  RunConfig c = f.config.empty() ? std::move(preset) : load_config(f.config, std::move(preset));
  if (f.seed) c.seed = *f.seed;
  if (f.grid) c.nx = c.ny = *f.grid;
  if (f.order) c.order = parse_order(*f.order);
  if (f.continuity) c.continuity = parse_continuity(*f.continuity);
  if (!f.out.empty()) c.output = f.out;
  if (c.output.empty()) c.output = "acflow_out";
  c.validate();
  return c;
}

fs::path output_dir(const RunConfig& c) {
  const fs::path dir(c.output);
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_csv(const fs::path& path) {
  std::ofstream o(path);
  if (!o) throw ConfigError("cannot write '" + path.string() + "'");
  return o;
}

std::string tol_tag(std::size_t i) { return "tol" + std::to_string(i); }

// ------------------------------------------------------------------ presets

RunConfig ode_preset() {
  RunConfig c;
  c.tol_m = 1e-4;
  c.k0 = 1e-2;
  return c;
}

RunConfig mms_preset() {
  RunConfig c;
  c.scenario = "mms_discrete";
  c.k0 = 1e-2;
  c.eps0 = c.eps_max = 1e-6;
  c.step_estimator = StepEstimator::first_order;
  c.tol_ladder = {1e-3, std::pow(10.0, -3.5), 1e-4};
  return c;
}

RunConfig audit_preset() {
  RunConfig c;
  c.scenario = "audit";
  c.nx = c.ny = 32;
  c.nu = 0.01;
  c.steps = 50;
  c.audit = true;
  return c;
}

RunConfig compare_preset() {
  RunConfig c;
  c.k0 = 1e-2;
  c.eps0 = 1e-4;
  c.tol_m = c.tol_c = 1e-2;
  return c;
}

RunConfig driven_preset() {
  RunConfig c;
  c.scenario = "driven";
  c.nx = c.ny = 32;
  c.nu = 0.01;
  c.k0 = 1e-2;
  return c;
}

// -------------------------------------------------------------- subcommands

int ode_demo(const RunConfig& c) {
  using namespace acflow::ode;
  const fs::path dir = output_dir(c);
  IvpProblem decay{[](double, const Vector& y) { return Vector(-y); }, {}, Vector::Constant(1, 1.0), 0.0, 1.0};
  std::ofstream fixed = open_csv(dir / "ode_fixed.csv");
  fixed << "k,err_be,err_filtered\n";
  std::vector<double> lk, lbe, lf;
  for (int e = 4; e <= 10; ++e) {
    const double k = std::ldexp(1.0, -e);
    const double ebe = std::abs(run_fixed(decay, k, FixedMode::backward_euler).final_value()[0] - std::exp(-1.0));
    const double ef = std::abs(run_fixed(decay, k, FixedMode::filtered).final_value()[0] - std::exp(-1.0));
    fixed << k << ',' << ebe << ',' << ef << '\n';
    lk.push_back(std::log(k));
    lbe.push_back(std::log(ebe));
    lf.push_back(std::log(ef));
  }
  const double sbe = regression_slope(lk, lbe), sf = regression_slope(lk, lf);
  std::printf("y' = -y on [0,1]: BE slope %.3f, filtered slope %.3f\n", sbe, sf);

  IvpProblem logistic;
  logistic.rhs = [](double, const Vector& y) { return Vector(y.array() * (1.0 - y.array())); };
  logistic.y0 = Vector::Constant(1, 0.2);
  logistic.t0 = 0.0;
  logistic.t_final = 10.0;
  const OdeRunRecord rec = run_adaptive(logistic, c.tol_m, c.k0, c.order);
  std::ofstream adaptive = open_csv(dir / "ode_adaptive.csv");
  adaptive << "t,k,y,exact_error,est1,est2,order,accepted\n";
  double worst = 0.0;
  for (const OdeStepRecord& s : rec.steps) {
    const double err = std::abs(s.y[0] - 1.0 / (1.0 + 4.0 * std::exp(-s.t)));
    if (s.accepted) worst = std::max(worst, err);
    adaptive << s.t << ',' << s.k << ',' << s.y[0] << ',' << err << ',' << s.est1 << ',' << s.est2 << ','
             << s.order << ',' << (s.accepted ? 1 : 0) << '\n';
  }
  std::printf("logistic on [0,10], tol_m %.3e, order %s: %zu accepted steps, %d rejections, max error %.3e\n",
              c.tol_m, to_string(c.order).c_str(), rec.accepted().size(), rec.rejections(), worst);
  const bool ok = std::abs(sbe - 1.0) <= kOdeBeBand && std::abs(sf - 2.0) <= kOdeFilteredBand;
  return ok ? kExitOk : kExitTolerance;
}

int mms_convergence(const RunConfig& c) {
  const fs::path dir = output_dir(c);
  std::vector<FlowRun> runs;
  const ConvergenceTable t = run_convergence(c, &runs);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    std::ofstream o = open_csv(dir / ("mms_" + tol_tag(i) + ".csv"));
    write_csv(o, runs[i].rows);
  }
  std::ofstream summary = open_csv(dir / "mms_convergence.csv");
  summary << "tol,avg_k,avg_eps,steps,rejections,err_u,err_p,max_continuity_residual\n";
  std::printf("%-12s %-12s %-12s %-7s %-12s %-12s\n", "tol", "avg_k", "avg_eps", "steps", "err_u", "err_p");
  for (const ConvergenceEntry& e : t.entries) {
    summary << e.tol << ',' << e.avg_k << ',' << e.avg_eps << ',' << e.steps << ',' << e.rejections << ',' << e.err_u
            << ',' << e.err_p << ',' << e.max_continuity_residual << '\n';
    std::printf("%-12.4e %-12.4e %-12.4e %-7ld %-12.4e %-12.4e\n", e.tol, e.avg_k, e.avg_eps, e.steps, e.err_u,
                e.err_p);
  }
  std::printf("slope err_u %.3f, slope err_p %.3f, monotone %s\n", t.slope_u, t.slope_p, t.monotone ? "yes" : "no");
  bool ok = t.monotone;
  if (c.order != OrderMode::variable) {
    const double target = c.order == OrderMode::first ? 1.0 : 2.0;
    ok = ok && std::abs(t.slope_u - target) <= kSlopeBand;
  }
  return ok ? kExitOk : kExitTolerance;
}

int energy_audit(const RunConfig& c) {
  const EnergyBudget b = run_audit(c);
  std::printf("energy audit: %s, order %s, %dx%d, %d steps, seed %lu\n", to_string(c.continuity).c_str(),
              to_string(c.order).c_str(), c.nx, c.ny, c.steps, c.seed);
  print_budget(std::cout, b);
  const fs::path dir = output_dir(c);
  std::ofstream o = open_csv(dir / ("energy_audit_" + to_string(c.continuity) + ".csv"));
  o << "step,defect,identity_gap\n";
  for (std::size_t i = 0; i < b.step_defects.size(); ++i) {
    o << i + 1 << ',' << b.step_defects[i] << ','
      << (i < b.step_identity_gaps.size() ? b.step_identity_gaps[i] : 0.0) << '\n';
  }
  return b.relative_residual <= kAuditRelTol ? kExitOk : kExitTolerance;
}

int compare_continuity(const RunConfig& c) {
  const ComparisonResult r = run_comparison(c);
  const fs::path dir = output_dir(c);
  for (const auto& [name, run] : {std::pair<const char*, const FlowRun*>{"ga", &r.ga}, {"min", &r.min}}) {
    std::ofstream o = open_csv(dir / (std::string("compare_") + name + ".csv"));
    write_csv(o, run->rows);
    std::printf("%-3s avg eps %.4e, avg div %.4e, steps %zu, max continuity residual %.2e\n", name, run->avg_eps,
                run->avg_div, run->rows.size(), run->max_continuity_residual);
  }
  if (!c.adapt_eps) return kExitOk;
  const bool ok = r.min.avg_eps <= kEpsRatio * r.ga.avg_eps && r.min.avg_div <= r.ga.avg_div;
  return ok ? kExitOk : kExitTolerance;
}

int driven_flow(const RunConfig& c) {
  const Scenario sc = scenario_for(c);
  const MacGrid g = sc.grid(c.nx, c.ny);
  const fs::path dir = output_dir(c);
  std::ofstream main_csv = open_csv(dir / ("driven_" + to_string(c.continuity) + ".csv"));
  std::ofstream side = open_csv(dir / ("driven_" + to_string(c.continuity) + "_center_pressure.csv"));
  write_csv_header(main_csv);
  side << "step,t,center_pressure\n";
  const FlowRun run = run_flow(sc, g, scheme_from(c, sc.nu), c.k0, c.eps0, sc.t_final, [&](const FlowRow& row) {
    write_csv_row(main_csv, row);
    side << row.step << ',' << row.t << ',' << row.center_pressure << '\n';
  });
  std::printf("driven flow: %zu steps to t = %.3f, %d rejections, avg k %.3e, avg eps %.3e, final div %.3e\n",
              run.rows.size(), sc.t_final, run.rejections, run.avg_k, run.avg_eps,
              run.rows.empty() ? 0.0 : run.rows.back().div_norm);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive artificial-compression incompressible flow solver"};
  app.require_subcommand(1);
  CommonFlags flags;
  struct Command {
    const char* name;
    const char* help;
    RunConfig (*preset)();
    int (*run)(const RunConfig&);
  };
  const std::vector<Command> commands{
      {"ode-demo", "fixed and adaptive BE/filter runs on scalar test problems", ode_preset, ode_demo},
      {"mms-convergence", "tolerance-ladder convergence study on a manufactured solution", mms_preset,
       mms_convergence},
      {"energy-audit", "randomized-schedule discrete energy equality audit", audit_preset, energy_audit},
      {"compare-continuity", "matched GA and min runs with adaptive epsilon", compare_preset, compare_continuity},
      {"driven-flow", "rotationally forced square with center-pressure sidecar", driven_preset, driven_flow},
  };
  std::vector<CLI::App*> subs;
  for (const Command& cmd : commands) {
    subs.push_back(app.add_subcommand(cmd.name, cmd.help));
    add_common(subs.back(), flags);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  try {
    for (std::size_t i = 0; i < commands.size(); ++i) {
      if (subs[i]->parsed()) return commands[i].run(resolve(flags, commands[i].preset()));
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NonConvergence& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const StepFailure& e) {
    std::cerr << "step failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const ode::NewtonFailure& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const ode::StepUnderflow& e) {
    std::cerr << "step failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
