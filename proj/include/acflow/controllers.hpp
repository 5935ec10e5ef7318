/**
 * @file controllers.hpp
 * @brief Time-filter coefficients, second differences, embedded error
 *        estimators and the clamped step-size / AC-parameter controllers.
 *
 * Everything here is scheme agnostic: the same functions drive the ODE
 * integrator and the flow stepper. State vectors are any type supporting
 * `a + b`, `a - b` and `double * a` (Eigen vectors, FaceField, CellField).
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace acflow {

/// Which velocity the adaptive loop keeps: backward Euler, the filtered
/// second-order value, or whichever promises the larger next step.
enum class OrderMode { first, second, variable };

/// Step sizes k_{n+1}, k_n, k_{n-1}.
struct StepWindow {
  double k_next = 0.0;
  double k_cur = 0.0;
  double k_prev = 0.0;

  StepWindow() = default;
  StepWindow(double next, double cur, double prev) : k_next(next), k_cur(cur), k_prev(prev) {
    if (!(next > 0.0 && cur > 0.0 && prev > 0.0)) {
      throw std::invalid_argument("StepWindow: step sizes must be positive");
    }
  }

  /// k_{n+1} / k_n
  [[nodiscard]] double tau_next() const { return k_next / k_cur; }
  /// k_n / k_{n-1}
  [[nodiscard]] double tau_cur() const { return k_cur / k_prev; }
};

struct Tolerances {
  double tol_m = 1e-3;
  double tol_c = 1e-3;
  double safety = 0.9;
  double clamp_lo = 0.5;
  double clamp_hi = 2.0;

  void validate() const {
    if (!(tol_m > 0.0 && tol_c > 0.0 && safety > 0.0)) throw std::invalid_argument("Tolerances: must be positive");
    if (!(clamp_lo > 0.0 && clamp_lo < 1.0 && clamp_hi > 1.0)) {
      throw std::invalid_argument("Tolerances: need 0 < clamp_lo < 1 < clamp_hi");
    }
  }
};

struct EstimatorBundle {
  double est1 = 0.0;
  double est2 = 0.0;
  bool has_est2 = false;
  double est_c = 0.0;
};

/// Filter coefficient tau(1+tau)/(1+2 tau).
inline double alpha1(double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("alpha1: ratio must be positive");
  return tau * (1.0 + tau) / (1.0 + 2.0 * tau);
}

/// EST(2) multiplier, with tau_cur = k_n/k_{n-1} and tau_next = k_{n+1}/k_n.
inline double alpha2(double tau_cur, double tau_next) {
  if (!(tau_cur > 0.0 && tau_next > 0.0)) throw std::invalid_argument("alpha2: ratios must be positive");
  const double tn = tau_cur, tp = tau_next;
  const double num = tn * (tp * tn + tn + 1.0) * (4.0 * tp * tp * tp + 5.0 * tp * tp + tp);
  const double den = 3.0 * (tn * tp * tp + 4.0 * tn * tp + 2.0 * tp + tn + 1.0);
  return num / den;
}

/// D2(n+1) = 2 k_n/(k_n+k_{n+1}) v_new - 2 v_cur + 2 k_{n+1}/(k_n+k_{n+1}) v_prev,
/// i.e. 2 k_n k_{n+1} times the second divided difference.
template <class Vec>
Vec second_difference(const Vec& v_new, const Vec& v_cur, const Vec& v_prev, const StepWindow& w) {
  const double s = w.k_cur + w.k_next;
  const double a = 2.0 * w.k_cur / s;
  const double c = 2.0 * w.k_next / s;
  Vec out = a * v_new - 2.0 * v_cur + c * v_prev;
  return out;
}

template <class Vec, class NormFn>
double est1(const Vec& d2, const StepWindow& w, NormFn&& norm_fn) {
  return 0.5 * alpha1(w.tau_next()) * norm_fn(d2);
}

/// Both D2 terms carry the coefficient 3 k_{n-1}/(k_{n+1}+k_n+k_{n-1}).
template <class Vec, class NormFn>
double est2(const Vec& d2_new, const Vec& d2_old, const StepWindow& w, NormFn&& norm_fn) {
  const double c = 3.0 * w.k_prev / (w.k_next + w.k_cur + w.k_prev);
  Vec diff = c * d2_new - c * d2_old;
  return alpha2(w.tau_cur(), w.tau_next()) / 6.0 * norm_fn(diff);
}

namespace detail {
inline double exponent_for(int order) {
  if (order != 1 && order != 2) throw std::invalid_argument("controller: order must be 1 or 2");
  return 1.0 / (order + 1);
}
}  // namespace detail

/// Next step from the estimator of a method of the given order, clamped to
/// [clamp_lo, clamp_hi] * k_cur. est == 0 proposes the upper clamp.
inline double propose_step(double k_cur, double est, double tol, int order, const Tolerances& t = {}) {
  if (!(k_cur > 0.0)) throw std::invalid_argument("propose_step: k must be positive");
  const double p = detail::exponent_for(order);
  if (est <= 0.0) return t.clamp_hi * k_cur;
  const double raw = t.safety * k_cur * std::pow(tol / est, p);
  return std::max(std::min(raw, t.clamp_hi * k_cur), t.clamp_lo * k_cur);
}

inline double propose_epsilon(double eps_cur, double est_c, double tol_c, const Tolerances& t = {}) {
  if (!(eps_cur > 0.0)) throw std::invalid_argument("propose_epsilon: eps must be positive");
  if (est_c <= 0.0) return t.clamp_hi * eps_cur;
  const double raw = t.safety * eps_cur * (tol_c / est_c);
  return std::max(std::min(raw, t.clamp_hi * eps_cur), t.clamp_lo * eps_cur);
}

/// Retry values after a rejection. Each quantity is reset only when its own
/// tolerance is violated; a retried step never grows.
inline std::pair<double, double> reject_step(double k_cur, double eps_cur, const EstimatorBundle& bundle, int order,
                                             const Tolerances& t) {
  const double est = order == 2 ? bundle.est2 : bundle.est1;
  const bool momentum_bad = est > t.tol_m;
  const bool continuity_bad = bundle.est_c > t.tol_c;
  if (!momentum_bad && !continuity_bad) {
    throw std::logic_error("reject_step: every estimator is within tolerance");
  }
  double k = k_cur, eps = eps_cur;
  if (continuity_bad) eps = std::max(t.safety * eps_cur * (t.tol_c / bundle.est_c), t.clamp_lo * eps_cur);
  if (momentum_bad) {
    const double raw = t.safety * k_cur * std::pow(t.tol_m / est, detail::exponent_for(order));
    k = std::max(std::min(raw, k_cur), t.clamp_lo * k_cur);
  }
  return {k, eps};
}

}  // namespace acflow
