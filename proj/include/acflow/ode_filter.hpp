/**
 * @file ode_filter.hpp
 * @brief Backward Euler plus time filter for y' = f(t, y), fixed and adaptive.
 *
 * The filtered value y = y1 - (alpha1/2) D2 is second order; the filter
 * correction doubles as the EST(1) estimator and differences of successive
 * D2 give EST(2).
 */
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "acflow/controllers.hpp"

namespace acflow::ode {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct IvpProblem {
  std::function<Vector(double, const Vector&)> rhs;
  /// Optional df/dy; a forward-difference Jacobian is used when empty.
  std::function<Matrix(double, const Vector&)> jacobian;
  Vector y0;
  double t0 = 0.0;
  double t_final = 1.0;
};

class NewtonFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StepUnderflow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class FixedMode { backward_euler, filtered };

/// First step of a filtered constant-step run: plain backward Euler, or the
/// Richardson combination 2 BE(k/2, k/2) - BE(k), which is locally third order.
enum class FilterStartup { backward_euler, richardson };

struct OdeStepRecord {
  double t = 0.0;  ///< time at the end of the step
  double k = 0.0;
  Vector y_be;     ///< pre-filter (backward Euler) value
  Vector y;        ///< kept value (post-filter when the filter is active)
  double est1 = 0.0;
  double est2 = 0.0;
  bool has_est1 = false;
  bool has_est2 = false;
  bool accepted = true;
  int order = 1;
};

struct OdeRunRecord {
  std::vector<OdeStepRecord> steps;

  [[nodiscard]] std::vector<const OdeStepRecord*> accepted() const {
    std::vector<const OdeStepRecord*> out;
    for (const auto& s : steps)
      if (s.accepted) out.push_back(&s);
    return out;
  }
  [[nodiscard]] int rejections() const {
    int r = 0;
    for (const auto& s : steps) r += s.accepted ? 0 : 1;
    return r;
  }
  [[nodiscard]] const Vector& final_value() const { return accepted().back()->y; }
  [[nodiscard]] double final_time() const { return accepted().back()->t; }
};

inline double vnorm(const Vector& v) { return v.norm(); }

namespace detail {

inline Matrix fd_jacobian(const IvpProblem& p, double t, const Vector& y, const Vector& fy) {
  const auto n = y.size();
  Matrix J(n, n);
  Vector yp = y;
  for (Eigen::Index c = 0; c < n; ++c) {
    const double h = 1e-7 * std::max(1.0, std::abs(y[c]));
    yp[c] = y[c] + h;
    J.col(c) = (p.rhs(t, yp) - fy) / h;
    yp[c] = y[c];
  }
  return J;
}

}  // namespace detail

/// Implicit Euler step: solves y1 - y - k f(t + k, y1) = 0 by Newton iteration.
/// Convergence when the residual is below nonlinear_tol * max(1, |y|).
inline Vector be_step(const IvpProblem& p, double t, const Vector& y, double k, double nonlinear_tol = 1e-12,
                      int max_newton = 50) {
  if (!(k > 0.0)) throw std::invalid_argument("be_step: k must be positive");
  const double t1 = t + k;
  const double target = nonlinear_tol * std::max(1.0, y.norm());
  Vector y1 = y;
  for (int it = 0; it <= max_newton; ++it) {
    const Vector f = p.rhs(t1, y1);
    const Vector G = y1 - y - k * f;
    if (G.norm() <= target) return y1;
    if (it == max_newton) break;
    const Matrix J = p.jacobian ? p.jacobian(t1, y1) : detail::fd_jacobian(p, t1, y1, f);
    const Matrix A = Matrix::Identity(y.size(), y.size()) - k * J;
    y1 -= A.partialPivLu().solve(G);
  }
  throw NewtonFailure("be_step: Newton iteration did not converge at t = " + std::to_string(t1));
}

inline Vector filter_step(const Vector& y1, const Vector& y_cur, const Vector& y_prev, const StepWindow& w) {
  const Vector d2 = second_difference(y1, y_cur, y_prev, w);
  return y1 - 0.5 * alpha1(w.tau_next()) * d2;
}

namespace detail {

inline int step_count(double span, double k) {
  return static_cast<int>(std::ceil(span / k - 1e-9));
}

}  // namespace detail

/// Constant-step run. The last step is shortened when k does not divide the
/// interval. In filtered mode the first step is unfiltered and taken as
/// selected by `startup`.
inline OdeRunRecord run_fixed(const IvpProblem& p, double k, FixedMode mode, double nonlinear_tol = 1e-12,
                              FilterStartup startup = FilterStartup::richardson) {
  if (!(k > 0.0)) throw std::invalid_argument("run_fixed: k must be positive");
  const double span = p.t_final - p.t0;
  if (!(span > 0.0)) throw std::invalid_argument("run_fixed: t_final must exceed t0");
  const int n = detail::step_count(span, k);

  OdeRunRecord rec;
  Vector y_cur = p.y0, y_prev = p.y0;
  std::optional<Vector> d2_prev;
  double t = p.t0, k_cur = k, k_prev = k;
  for (int s = 0; s < n; ++s) {
    const double ks = (s == n - 1) ? p.t_final - t : k;
    OdeStepRecord r;
    r.k = ks;
    r.y_be = be_step(p, t, y_cur, ks, nonlinear_tol);
    r.y = r.y_be;
    if (s == 0 && mode == FixedMode::filtered && startup == FilterStartup::richardson) {
      const Vector half = be_step(p, t, y_cur, 0.5 * ks, nonlinear_tol);
      r.y = 2.0 * be_step(p, t + 0.5 * ks, half, 0.5 * ks, nonlinear_tol) - r.y_be;
    }
    if (s > 0) {
      const StepWindow w(ks, k_cur, k_prev);
      const Vector d2 = second_difference(r.y_be, y_cur, y_prev, w);
      r.est1 = est1(d2, w, vnorm);
      r.has_est1 = true;
      if (d2_prev) {
        r.est2 = est2(d2, *d2_prev, w, vnorm);
        r.has_est2 = true;
      }
      if (mode == FixedMode::filtered) {
        r.y = r.y_be - 0.5 * alpha1(w.tau_next()) * d2;
        r.order = 2;
      }
      d2_prev = d2;
    }
    t = (s == n - 1) ? p.t_final : t + ks;
    r.t = t;
    y_prev = y_cur;
    y_cur = r.y;
    k_prev = s == 0 ? ks : k_cur;
    k_cur = ks;
    rec.steps.push_back(std::move(r));
  }
  return rec;
}

struct AdaptiveOptions {
  Tolerances tolerances{};
  double nonlinear_tol = 1e-12;
  /// Steps below underflow_fraction * (t_final - t0) signal controller failure.
  double underflow_fraction = 1e-12;
};

/// Accept/reject loop: EST(1) drives order 1, EST(2) order 2, and variable
/// mode keeps whichever method proposes the larger next step (ties go to
/// order 2). Step 0 is unfiltered with no estimator; step 1 has only EST(1).
inline OdeRunRecord run_adaptive(const IvpProblem& p, double tol_m, double k0, OrderMode order,
                                 AdaptiveOptions opt = {}) {
  if (!(tol_m > 0.0)) throw std::invalid_argument("run_adaptive: tol_m must be positive");
  if (!(k0 > 0.0)) throw std::invalid_argument("run_adaptive: k0 must be positive");
  const double span = p.t_final - p.t0;
  if (!(span > 0.0)) throw std::invalid_argument("run_adaptive: t_final must exceed t0");
  opt.tolerances.tol_m = tol_m;
  const Tolerances& tol = opt.tolerances;
  const double k_floor = opt.underflow_fraction * span;

  OdeRunRecord rec;
  Vector y_cur = p.y0, y_prev = p.y0;
  std::optional<Vector> d2_prev;
  double t = p.t0, k_next = k0, k_cur = k0, k_prev = k0;
  int accepted = 0;

  while (p.t_final - t > k_floor) {
    double k = std::min(k_next, p.t_final - t);
    // avoid leaving a sliver shorter than the underflow floor
    if (p.t_final - t - k < 1e-8 * span) k = p.t_final - t;
    bool final_step = k >= p.t_final - t;
    for (;;) {
      if (k < k_floor) throw StepUnderflow("run_adaptive: step size underflow at t = " + std::to_string(t));
      OdeStepRecord r;
      r.k = k;
      r.y_be = be_step(p, t, y_cur, k, opt.nonlinear_tol);
      r.y = r.y_be;
      r.t = final_step ? p.t_final : t + k;
      double proposal = k;
      std::optional<Vector> d2;

      if (accepted > 0) {
        const StepWindow w(k, k_cur, k_prev);
        d2 = second_difference(r.y_be, y_cur, y_prev, w);
        r.est1 = est1(*d2, w, vnorm);
        r.has_est1 = true;
        if (d2_prev && accepted >= 2) {
          r.est2 = est2(*d2, *d2_prev, w, vnorm);
          r.has_est2 = true;
        }
        const Vector y_filtered = r.y_be - 0.5 * alpha1(w.tau_next()) * *d2;

        int use_order = 1;
        if (order == OrderMode::second) {
          use_order = r.has_est2 ? 2 : 1;
        } else if (order == OrderMode::variable && r.has_est2) {
          const double step_be = propose_step(k, r.est1, tol_m, 1, tol);
          const double step_filter = propose_step(k, r.est2, tol_m, 2, tol);
          use_order = step_be > step_filter ? 1 : 2;
        }
        const double governing = use_order == 2 ? r.est2 : r.est1;
        if (order != OrderMode::first) r.y = (order == OrderMode::variable && use_order == 1) ? r.y_be : y_filtered;
        r.order = (order == OrderMode::first || (order == OrderMode::variable && use_order == 1)) ? 1 : 2;

        if (governing > tol_m) {
          EstimatorBundle b{r.est1, r.est2, r.has_est2, 0.0};
          const double k_retry = reject_step(k, 1.0, b, use_order, tol).first;
          r.accepted = false;
          rec.steps.push_back(std::move(r));
          k = k_retry;
          final_step = false;
          continue;
        }
        proposal = propose_step(k, governing, tol_m, use_order, tol);
      }

      t = r.t;
      y_prev = y_cur;
      y_cur = r.y;
      k_prev = accepted == 0 ? k : k_cur;
      k_cur = k;
      k_next = proposal;
      if (d2) d2_prev = std::move(d2);
      ++accepted;
      rec.steps.push_back(std::move(r));
      break;
    }
  }
  return rec;
}

}  // namespace acflow::ode
