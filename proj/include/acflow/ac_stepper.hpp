/**
 * @file ac_stepper.hpp
 * @brief Artificial-compression flow steppers with independent k and eps
 *        adaptation.
 *
 * One step solves the linearly implicit momentum equation
 *
 *     (u1 - u_n)/k + C(u*) u1 - (k/eps_{n+1}) grad div u1 - nu lap u1
 *         = f_{n+1} - (eps_hat/eps_{n+1}) grad p_n
 *
 * optionally filters u1, and then updates the pressure algebraically:
 *
 *     p_{n+1} = (eps_hat/eps_{n+1}) p_n - (k/eps_{n+1}) div u.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "acflow/assemble.hpp"
#include "acflow/controllers.hpp"
#include "acflow/grid.hpp"
#include "acflow/linsolve.hpp"
#include "acflow/operators.hpp"

namespace acflow {

/// Coefficient of p_n in the discrete continuity equation.
enum class Continuity { ga, min };

/// Velocity whose divergence enters the pressure update.
enum class PressureVelocity { filtered, unfiltered };

/// Estimator governing k in second-order mode.
enum class StepEstimator { order_matched, first_order };

struct SchemeConfig {
  Continuity continuity = Continuity::ga;
  OrderMode order_mode = OrderMode::first;
  Tolerances tolerances{};
  double nu = 1.0;
  double eps_min = 1e-8;
  double eps_max = 1e-1;
  PressureVelocity pressure_velocity = PressureVelocity::filtered;
  SolveConfig solver{};
  bool adapt_k = true;
  bool adapt_eps = true;
  int max_retries = 10;
  /// Redo a step with a larger k when the governing estimator falls below tol_m/10.
  bool band_rule = false;
  StepEstimator step_estimator = StepEstimator::order_matched;

  void validate() const {
    tolerances.validate();
    solver.validate();
    if (!(nu > 0.0)) throw std::invalid_argument("SchemeConfig: nu must be positive");
    if (!(eps_min > 0.0 && eps_min <= eps_max)) {
      throw std::invalid_argument("SchemeConfig: need 0 < eps_min <= eps_max");
    }
    if (max_retries < 0) throw std::invalid_argument("SchemeConfig: max_retries must be >= 0");
  }
};

struct FlowState {
  FaceField u_cur;
  FaceField u_prev;
  CellField p_cur;
  StepWindow window;
  double eps_next = 0.0;
  double eps_cur = 0.0;
  std::optional<FaceField> d2_prev;
  double t = 0.0;
  long steps = 0;

  /// Startup state: u_prev = u0 so the first extrapolation returns u0.
  static FlowState initial(FaceField u0, CellField p0, double k0, double eps0, double t0 = 0.0) {
    require_same_grid(u0.grid(), p0.grid(), "FlowState::initial");
    if (!(eps0 > 0.0)) throw std::invalid_argument("FlowState::initial: eps0 must be positive");
    FlowState s;
    u0.enforce_no_slip();
    s.u_prev = u0;
    s.u_cur = std::move(u0);
    s.p_cur = std::move(p0);
    s.window = StepWindow(k0, k0, k0);
    s.eps_next = eps0;
    s.eps_cur = eps0;
    s.t = t0;
    return s;
  }

  [[nodiscard]] const MacGrid& grid() const { return u_cur.grid(); }
};

struct StepReport {
  bool accepted = false;
  double t = 0.0;
  double est1 = 0.0;
  double est2 = 0.0;
  double est_c = 0.0;
  bool has_est1 = false;
  bool has_est2 = false;
  double k_used = 0.0;
  double k_proposed = 0.0;
  double eps_used = 0.0;
  double eps_proposed = 0.0;
  double div_norm = 0.0;  ///< ||div u_{n+1}|| of the kept velocity
  int rejections = 0;
  int order_chosen = 1;
  double continuity_residual = 0.0;
  /// | ||u_filtered - u1|| - est1 |, zero when no filter was formed
  double filter_gap = 0.0;
  double energy = 0.0;  ///< 1/2 |u|^2 + 1/2 eps |p|^2 after the step
  int solver_iterations = 0;
};

/// Quantities of the accepted step needed to re-check the discrete equations.
struct StepDetail {
  FaceField u_star;
  FaceField u_be;
  FaceField f_next;
  double eps_hat = 0.0;
};

struct StepOutcome {
  FlowState state;
  StepReport report;
  StepDetail detail;
};

/// Retry budget exhausted or continuity tolerance unreachable within eps_min.
class StepFailure : public std::runtime_error {
 public:
  StepFailure(const std::string& what, std::vector<double> eps_history, std::vector<double> k_history)
      : std::runtime_error(what), eps_history_(std::move(eps_history)), k_history_(std::move(k_history)) {}

  [[nodiscard]] const std::vector<double>& eps_history() const { return eps_history_; }
  [[nodiscard]] const std::vector<double>& k_history() const { return k_history_; }

 private:
  std::vector<double> eps_history_;
  std::vector<double> k_history_;
};

using Forcing = std::function<FaceField(double)>;

inline FaceField extrapolate(const FaceField& u_cur, const FaceField& u_prev, const StepWindow& w) {
  require_same_grid(u_cur.grid(), u_prev.grid(), "extrapolate");
  const double tau = w.tau_next();
  return (1.0 + tau) * u_cur - tau * u_prev;
}

inline double epsilon_hat(double eps_next, double eps_cur, Continuity variant) {
  if (!(eps_next > 0.0 && eps_cur > 0.0)) throw std::invalid_argument("epsilon_hat: eps must be positive");
  if (variant == Continuity::min) return std::min(eps_next, eps_cur);
  if (eps_next == eps_cur) return eps_cur;
  return std::sqrt(eps_next * eps_cur);
}

/// Solves the momentum equation for u1 at step k with AC parameter eps.
inline FaceField momentum_solve(const FaceField& u_cur, const FaceField& u_star, const CellField& p_cur,
                                const FaceField& f_next, double k, double eps, double eps_hat, double nu,
                                const SolveConfig& solver, SolveStats* stats = nullptr) {
  const MacGrid& g = u_cur.grid();
  require_same_grid(g, u_star.grid(), "momentum_solve");
  require_same_grid(g, p_cur.grid(), "momentum_solve");
  require_same_grid(g, f_next.grid(), "momentum_solve");

  const SparseOperator A = assemble_momentum(g, u_star, k, eps, nu);
  FaceField rhs = (1.0 / k) * u_cur + f_next - (eps_hat / eps) * gradient(p_cur);
  const FaceIndex idx(g);
  const std::vector<double> b = idx.pack(rhs);
  std::vector<double> x = idx.pack(u_cur);
  const SolveStats s = solve(A, b, x, solver);
  if (stats) *stats = s;
  return idx.unpack(x);
}

inline FaceField momentum_solve(const FlowState& state, const SchemeConfig& cfg, const FaceField& f_next,
                                SolveStats* stats = nullptr) {
  const FaceField u_star = extrapolate(state.u_cur, state.u_prev, state.window);
  const double eh = epsilon_hat(state.eps_next, state.eps_cur, cfg.continuity);
  return momentum_solve(state.u_cur, u_star, state.p_cur, f_next, state.window.k_next, state.eps_next, eh, cfg.nu,
                        cfg.solver, stats);
}

inline CellField pressure_update(const CellField& p_cur, const FaceField& u_used, double eps_next, double eps_hat,
                                 double k) {
  if (!(eps_next > 0.0 && eps_hat > 0.0 && k > 0.0)) {
    throw std::invalid_argument("pressure_update: eps and k must be positive");
  }
  return (eps_hat / eps_next) * p_cur - (k / eps_next) * divergence(u_used);
}

/// ||(eps p_{n+1} - eps_hat p_n)/k + div u|| relative to the sum of the term norms.
inline double continuity_residual(const CellField& p_next, const CellField& p_cur, const FaceField& u_used,
                                  double eps_next, double eps_hat, double k) {
  const CellField a = (eps_next / k) * p_next;
  const CellField b = (eps_hat / k) * p_cur;
  const CellField d = divergence(u_used);
  const double scale = norm(a) + norm(b) + norm(d);
  if (scale == 0.0) return 0.0;
  return norm(a - b + d) / scale;
}

inline double flow_energy(const FaceField& u, const CellField& p, double eps) {
  return 0.5 * inner(u, u) + 0.5 * eps * inner(p, p);
}

namespace detail {

struct Trial {
  FaceField u_star, u_be, u_keep, u_press, d2, f_next;
  double eps_hat = 0.0;
  double est1 = 0.0, est2 = 0.0, est_c = 0.0;
  bool has_est1 = false, has_est2 = false, has_filter = false;
  double filter_gap = 0.0;
  int order = 1;       // order of the kept velocity
  int ctrl_order = 1;  // order whose estimator governs k
  int iterations = 0;
};

inline Trial run_trial(const FlowState& s, const SchemeConfig& cfg, const Forcing& forcing) {
  Trial r;
  const StepWindow& w = s.window;
  const double k = w.k_next;
  r.f_next = forcing(s.t + k);
  r.u_star = extrapolate(s.u_cur, s.u_prev, w);
  r.eps_hat = epsilon_hat(s.eps_next, s.eps_cur, cfg.continuity);
  SolveStats st;
  r.u_be = momentum_solve(s.u_cur, r.u_star, s.p_cur, r.f_next, k, s.eps_next, r.eps_hat, cfg.nu, cfg.solver, &st);
  r.iterations = st.iterations;
  r.u_keep = r.u_be;
  r.u_press = r.u_be;

  if (s.steps > 0) {
    r.d2 = second_difference(r.u_be, s.u_cur, s.u_prev, w);
    r.est1 = est1(r.d2, w, [](const FaceField& v) { return norm(v); });
    r.has_est1 = true;
    if (s.d2_prev && s.steps >= 2) {
      r.est2 = est2(r.d2, *s.d2_prev, w, [](const FaceField& v) { return norm(v); });
      r.has_est2 = true;
    }
    const FaceField u_filt = r.u_be - (0.5 * alpha1(w.tau_next())) * r.d2;
    r.has_filter = true;
    r.filter_gap = std::abs(norm(u_filt - r.u_be) - r.est1);

    bool keep_filtered = false;
    switch (cfg.order_mode) {
      case OrderMode::first:
        break;
      case OrderMode::second:
        keep_filtered = true;
        r.ctrl_order = r.has_est2 && cfg.step_estimator == StepEstimator::order_matched ? 2 : 1;
        break;
      case OrderMode::variable:
        if (r.has_est2) {
          const double tol_m = cfg.tolerances.tol_m;
          const double step_be = propose_step(k, r.est1, tol_m, 1, cfg.tolerances);
          const double step_filter = propose_step(k, r.est2, tol_m, 2, cfg.tolerances);
          keep_filtered = !(step_be > step_filter);
          r.ctrl_order = keep_filtered ? 2 : 1;
        }
        break;
    }
    if (keep_filtered) {
      r.u_keep = u_filt;
      r.order = 2;
      if (cfg.pressure_velocity == PressureVelocity::filtered) r.u_press = u_filt;
    }
  }
  r.est_c = norm(divergence(r.u_press));
  return r;
}

}  // namespace detail

/// One accept/reject cycle. Step 0 is the unfiltered first-order method with
/// no estimators; later steps follow cfg.order_mode.
inline StepOutcome step(const FlowState& state, const SchemeConfig& cfg, const Forcing& forcing) {
  cfg.validate();
  const Tolerances& tol = cfg.tolerances;
  FlowState trial_state = state;
  std::vector<double> eps_hist, k_hist;
  int rejections = 0;

  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    const double k = trial_state.window.k_next;
    const double eps = trial_state.eps_next;
    eps_hist.push_back(eps);
    k_hist.push_back(k);
    detail::Trial r = detail::run_trial(trial_state, cfg, forcing);

    double k_prop = k, eps_prop = eps;
    if (state.steps > 0) {
      const double governing = r.ctrl_order == 2 ? r.est2 : r.est1;
      const bool momentum_bad = cfg.adapt_k && governing > tol.tol_m;
      const bool continuity_bad = cfg.adapt_eps && r.est_c > tol.tol_c;
      if (momentum_bad || continuity_bad) {
        if (attempt == cfg.max_retries) break;
        if (continuity_bad && !momentum_bad && eps <= cfg.eps_min) {
          throw StepFailure("step: continuity tolerance unreachable with eps at eps_min", eps_hist, k_hist);
        }
        EstimatorBundle b{r.est1, r.est2, r.has_est2, r.est_c};
        if (!momentum_bad) (r.ctrl_order == 2 ? b.est2 : b.est1) = 0.0;
        if (!continuity_bad) b.est_c = 0.0;
        const auto [k_r, eps_r] = reject_step(k, eps, b, r.ctrl_order, tol);
        trial_state.window.k_next = k_r;
        trial_state.eps_next = std::clamp(eps_r, cfg.eps_min, cfg.eps_max);
        ++rejections;
        continue;
      }
      if (cfg.adapt_k) {
        k_prop = propose_step(k, governing, tol.tol_m, r.ctrl_order, tol);
        if (cfg.band_rule && governing < 0.1 * tol.tol_m && attempt < cfg.max_retries && k_prop > k) {
          trial_state.window.k_next = k_prop;
          ++rejections;
          continue;
        }
      }
      if (cfg.adapt_eps) eps_prop = std::clamp(propose_epsilon(eps, r.est_c, tol.tol_c, tol), cfg.eps_min, cfg.eps_max);
    }

    StepOutcome out;
    CellField p_next = pressure_update(state.p_cur, r.u_press, eps, r.eps_hat, k);
    StepReport& rep = out.report;
    rep.accepted = true;
    rep.t = state.t + k;
    rep.est1 = r.est1;
    rep.est2 = r.est2;
    rep.est_c = r.est_c;
    rep.has_est1 = r.has_est1;
    rep.has_est2 = r.has_est2;
    rep.k_used = k;
    rep.k_proposed = k_prop;
    rep.eps_used = eps;
    rep.eps_proposed = eps_prop;
    rep.div_norm = norm(divergence(r.u_keep));
    rep.rejections = rejections;
    rep.order_chosen = r.order;
    rep.continuity_residual = continuity_residual(p_next, state.p_cur, r.u_press, eps, r.eps_hat, k);
    rep.filter_gap = r.filter_gap;
    rep.energy = flow_energy(r.u_keep, p_next, eps);
    rep.solver_iterations = r.iterations;

    FlowState& ns = out.state;
    ns.u_prev = state.u_cur;
    ns.u_cur = r.u_keep;
    ns.p_cur = std::move(p_next);
    ns.window = StepWindow(k_prop, k, state.steps == 0 ? k : state.window.k_cur);
    ns.eps_cur = eps;
    ns.eps_next = eps_prop;
    if (r.has_filter) ns.d2_prev = std::move(r.d2);
    ns.t = state.t + k;
    ns.steps = state.steps + 1;

    out.detail = {std::move(r.u_star), std::move(r.u_be), std::move(r.f_next), r.eps_hat};
    return out;
  }
  throw StepFailure("step: retry budget of " + std::to_string(cfg.max_retries) + " exhausted at t = " +
                        std::to_string(state.t),
                    eps_hist, k_hist);
}

/// Takes one step with prescribed k and eps and no adaptation.
inline StepOutcome advance(const FlowState& state, SchemeConfig cfg, double k, double eps, const Forcing& forcing) {
  FlowState s = state;
  s.window.k_next = k;
  s.eps_next = eps;
  if (s.steps == 0) s.window = StepWindow(k, k, k);
  cfg.adapt_k = false;
  cfg.adapt_eps = false;
  cfg.band_rule = false;
  return step(s, cfg, forcing);
}

struct TrajectoryStep {
  double t = 0.0;  ///< end time
  double k = 0.0;
  double eps = 0.0;  ///< eps_{n+1}
  double eps_hat = 0.0;
  FaceField u;        ///< kept velocity u_{n+1}
  FaceField u_be;     ///< unfiltered velocity
  FaceField u_star;
  FaceField f;
  CellField p;
  int order = 1;
};

/// A scheduled run together with everything the energy audits need.
struct Trajectory {
  Continuity continuity = Continuity::ga;
  OrderMode order_mode = OrderMode::first;
  PressureVelocity pressure_velocity = PressureVelocity::unfiltered;
  double nu = 1.0;
  double eps0 = 0.0;
  FaceField u0;
  CellField p0;
  std::vector<TrajectoryStep> steps;
  std::vector<StepReport> reports;
};

/// Runs the prescribed (k_n, eps_n) schedule from (u0, p0, eps0).
inline Trajectory record_scheduled_run(const FaceField& u0, const CellField& p0, double eps0,
                                       const std::vector<std::pair<double, double>>& schedule,
                                       const SchemeConfig& cfg, const Forcing& forcing) {
  if (schedule.empty()) throw std::invalid_argument("record_scheduled_run: empty schedule");
  Trajectory tr;
  tr.continuity = cfg.continuity;
  tr.order_mode = cfg.order_mode;
  tr.pressure_velocity = cfg.pressure_velocity;
  tr.nu = cfg.nu;
  tr.eps0 = eps0;
  FlowState s = FlowState::initial(u0, p0, schedule.front().first, eps0);
  tr.u0 = s.u_cur;
  tr.p0 = s.p_cur;
  for (const auto& [k, eps] : schedule) {
    StepOutcome o = advance(s, cfg, k, eps, forcing);
    TrajectoryStep ts;
    ts.t = o.state.t;
    ts.k = k;
    ts.eps = eps;
    ts.eps_hat = o.detail.eps_hat;
    ts.u = o.state.u_cur;
    ts.u_be = std::move(o.detail.u_be);
    ts.u_star = std::move(o.detail.u_star);
    ts.f = std::move(o.detail.f_next);
    ts.p = o.state.p_cur;
    ts.order = o.report.order_chosen;
    tr.steps.push_back(std::move(ts));
    tr.reports.push_back(o.report);
    s = std::move(o.state);
  }
  return tr;
}

}  // namespace acflow
