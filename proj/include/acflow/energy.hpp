/**
 * @file energy.hpp
 * @brief Discrete energy budgets of recorded trajectories.
 *
 * Each audit evaluates both sides of an exact discrete energy equality and,
 * independently, the inner products of the discrete momentum and continuity
 * residuals with (u_{n+1}, p_{n+1}) so that a mismatch can be localized to a
 * step.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "acflow/ac_stepper.hpp"
#include "acflow/grid.hpp"
#include "acflow/operators.hpp"

namespace acflow {

struct EnergyBudget {
  double energy_start = 0.0;
  double energy_end = 0.0;
  double velocity_jumps = 0.0;
  double pressure_jumps = 0.0;
  double viscous = 0.0;
  double forcing_work = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
  double relative_residual = 0.0;
  /// k (R_mom, u) + k (R_cont, p) per step, from the discrete equations.
  std::vector<double> step_defects;
  /// Per-step difference between the telescoped identity and step_defects.
  std::vector<double> step_identity_gaps;
  double max_step_defect = 0.0;
  double max_identity_gap = 0.0;
};

class AuditMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline double pressure_jump(Continuity variant, const CellField& p_new, const CellField& p_old, double e_new,
                            double e_old) {
  if (variant == Continuity::ga) {
    const CellField d = std::sqrt(e_new) * p_new - std::sqrt(e_old) * p_old;
    return 0.5 * inner(d, d);
  }
  const CellField dp = p_new - p_old;
  return 0.5 * std::min(e_new, e_old) * inner(dp, dp) + 0.5 * std::max(0.0, e_new - e_old) * inner(p_new, p_new) +
         0.5 * std::max(0.0, e_old - e_new) * inner(p_old, p_old);
}

/// k (R_mom, w) + k (R_cont, p_new) where w is the velocity solved for.
inline double equation_defect(const FaceField& w, const FaceField& u_old, const FaceField& u_star,
                              const FaceField& f, const CellField& p_new, const CellField& p_old, double k,
                              double eps, double eps_hat, double nu) {
  FaceField r_mom = (1.0 / k) * (w - u_old) + advect_skew(u_star, w) + gradient(p_new) - nu * laplacian(w) - f;
  r_mom.enforce_no_slip();
  const CellField r_cont = (eps / k) * p_new - (eps_hat / k) * p_old + divergence(w);
  return k * inner(r_mom, w) + k * inner(r_cont, p_new);
}

inline void close_budget(EnergyBudget& b) {
  b.residual = std::abs(b.lhs - b.rhs);
  const double scale = std::abs(b.rhs);
  if (scale > 0.0) {
    b.relative_residual = b.residual / scale;
  } else {
    b.relative_residual = b.residual == 0.0 ? 0.0 : b.residual / std::max(std::abs(b.lhs), 1e-300);
  }
  for (double d : b.step_defects) b.max_step_defect = std::max(b.max_step_defect, std::abs(d));
  for (double d : b.step_identity_gaps) b.max_identity_gap = std::max(b.max_identity_gap, std::abs(d));
}

}  // namespace detail

/// First-order equality. Velocity jumps are 1/2|u_{n+1}-u_n|^2, viscous terms
/// k nu |grad u_{n+1}|^2, forcing work k (u_{n+1}, f_{n+1}).
inline EnergyBudget energy_audit_first_order(const Trajectory& tr) {
  if (tr.order_mode != OrderMode::first) {
    throw AuditMismatch("energy_audit_first_order: trajectory is not first order");
  }
  EnergyBudget b;
  b.energy_start = flow_energy(tr.u0, tr.p0, tr.eps0);
  const FaceField* u_old = &tr.u0;
  const CellField* p_old = &tr.p0;
  double e_old = tr.eps0;
  for (const TrajectoryStep& s : tr.steps) {
    const FaceField du = s.u - *u_old;
    const double vj = 0.5 * inner(du, du);
    const double pj = detail::pressure_jump(tr.continuity, s.p, *p_old, s.eps, e_old);
    const double vis = s.k * tr.nu * dirichlet_energy(s.u);
    const double work = s.k * inner(s.u, s.f);
    b.velocity_jumps += vj;
    b.pressure_jumps += pj;
    b.viscous += vis;
    b.forcing_work += work;

    const double telescoped =
        flow_energy(s.u, s.p, s.eps) - flow_energy(*u_old, *p_old, e_old) + vj + pj + vis - work;
    const double defect =
        detail::equation_defect(s.u, *u_old, s.u_star, s.f, s.p, *p_old, s.k, s.eps, s.eps_hat, tr.nu);
    b.step_defects.push_back(defect);
    b.step_identity_gaps.push_back(telescoped - defect);
    u_old = &s.u;
    p_old = &s.p;
    e_old = s.eps;
  }
  b.energy_end = flow_energy(*u_old, *p_old, e_old);
  b.lhs = b.energy_end + b.velocity_jumps + b.pressure_jumps + b.viscous;
  b.rhs = b.energy_start + b.forcing_work;
  detail::close_budget(b);
  return b;
}

namespace detail {

inline double second_order_energy(const FaceField& a, const FaceField& b, const CellField& p, double eps) {
  const FaceField two_a_b = 2.0 * a - b;
  const FaceField a_b = a - b;
  return 0.25 * inner(a, a) + 0.25 * inner(two_a_b, two_a_b) + 0.25 * inner(a_b, a_b) + 0.5 * eps * inner(p, p);
}

}  // namespace detail

/// Constant-step second-order equality for the GA method with the unfiltered
/// velocity in the continuity equation. The sum starts after the first-order
/// startup step, so the start energy is built from (u_1, u_0, p_1).
inline EnergyBudget energy_audit_second_order(const Trajectory& tr) {
  if (tr.order_mode != OrderMode::second) throw AuditMismatch("energy_audit_second_order: not a second-order run");
  if (tr.continuity != Continuity::ga) throw AuditMismatch("energy_audit_second_order: requires the GA method");
  if (tr.pressure_velocity != PressureVelocity::unfiltered) {
    throw AuditMismatch("energy_audit_second_order: requires the unfiltered continuity velocity");
  }
  if (tr.steps.size() < 2) throw AuditMismatch("energy_audit_second_order: need at least two steps");
  const double k = tr.steps.front().k;
  for (const TrajectoryStep& s : tr.steps) {
    if (std::abs(s.k - k) > 1e-12 * k) throw AuditMismatch("energy_audit_second_order: variable step size");
  }

  EnergyBudget b;
  b.energy_start = detail::second_order_energy(tr.steps[0].u, tr.u0, tr.steps[0].p, tr.steps[0].eps);
  for (std::size_t n = 1; n < tr.steps.size(); ++n) {
    const TrajectoryStep& s = tr.steps[n];
    const FaceField& a = s.u;
    const FaceField& bb = tr.steps[n - 1].u;
    const FaceField& c = n >= 2 ? tr.steps[n - 2].u : tr.u0;
    const CellField& p_old = tr.steps[n - 1].p;
    const double e_old = tr.steps[n - 1].eps;

    const FaceField d2 = a - 2.0 * bb + c;
    const FaceField ubar = 1.5 * a - bb + 0.5 * c;
    const double vj = 0.75 * inner(d2, d2);
    const double pj = detail::pressure_jump(Continuity::ga, s.p, p_old, s.eps, e_old);
    const double vis = k * tr.nu * dirichlet_energy(ubar);
    const double work = k * inner(ubar, s.f);
    b.velocity_jumps += vj;
    b.pressure_jumps += pj;
    b.viscous += vis;
    b.forcing_work += work;

    const double telescoped = detail::second_order_energy(a, bb, s.p, s.eps) -
                              detail::second_order_energy(bb, c, p_old, e_old) + vj + pj + vis - work;
    const double defect = detail::equation_defect(ubar, bb, s.u_star, s.f, s.p, p_old, k, s.eps, s.eps_hat, tr.nu);
    b.step_defects.push_back(defect);
    b.step_identity_gaps.push_back(telescoped - defect);
  }
  const TrajectoryStep& last = tr.steps.back();
  b.energy_end = detail::second_order_energy(last.u, tr.steps[tr.steps.size() - 2].u, last.p, last.eps);
  b.lhs = b.energy_end + b.velocity_jumps + b.pressure_jumps + b.viscous;
  b.rhs = b.energy_start + b.forcing_work;
  detail::close_budget(b);
  return b;
}

/// Per-step numerical dissipation of the first-order methods:
/// 1/2|u_{n+1}-u_n|^2 plus the pressure jump of the chosen variant.
inline std::vector<double> numerical_dissipation(const Trajectory& tr, Continuity variant) {
  std::vector<double> out;
  out.reserve(tr.steps.size());
  const FaceField* u_old = &tr.u0;
  const CellField* p_old = &tr.p0;
  double e_old = tr.eps0;
  for (const TrajectoryStep& s : tr.steps) {
    const FaceField du = s.u - *u_old;
    out.push_back(0.5 * inner(du, du) + detail::pressure_jump(variant, s.p, *p_old, s.eps, e_old));
    u_old = &s.u;
    p_old = &s.p;
    e_old = s.eps;
  }
  return out;
}

inline std::vector<double> numerical_dissipation(const Trajectory& tr) {
  return numerical_dissipation(tr, tr.continuity);
}

}  // namespace acflow
