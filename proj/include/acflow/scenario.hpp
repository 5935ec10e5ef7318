/**
 * @file scenario.hpp
 * @brief Flow scenarios: manufactured solutions, driven rotational square and
 *        a smooth forced problem for energy audits.
 */
#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

#include "acflow/ac_stepper.hpp"
#include "acflow/grid.hpp"
#include "acflow/operators.hpp"

namespace acflow {

using Vec2 = std::pair<double, double>;

struct Scenario {
  std::string name;
  double x0 = 0.0, y0 = 0.0, lx = 1.0, ly = 1.0;
  double nu = 1.0;
  double t_final = 1.0;
  std::function<Vec2(double, double, double)> forcing;
  std::function<Vec2(double, double, double)> u_exact;  ///< empty when unknown
  std::function<double(double, double, double)> p_exact;
  std::function<Vec2(double, double)> u0;
  std::function<double(double, double)> p0;
  /// Grid-level overrides; when set they replace point sampling.
  std::function<FaceField(const MacGrid&, double)> grid_forcing;
  std::function<FaceField(const MacGrid&, double)> grid_velocity;
  std::function<CellField(const MacGrid&, double)> grid_pressure;

  [[nodiscard]] bool has_exact() const {
    return (static_cast<bool>(u_exact) || static_cast<bool>(grid_velocity)) &&
           (static_cast<bool>(p_exact) || static_cast<bool>(grid_pressure));
  }

  [[nodiscard]] MacGrid grid(int nx, int ny) const { return MacGrid(nx, ny, lx, ly, x0, y0); }

  [[nodiscard]] FaceField forcing_field(const MacGrid& g, double t) const {
    if (grid_forcing) return grid_forcing(g, t);
    return FaceField::sample(g, [&](double x, double y) { return forcing(x, y, t); });
  }
  [[nodiscard]] Forcing forcing_fn(const MacGrid& g) const {
    return [this, g](double t) { return forcing_field(g, t); };
  }
  [[nodiscard]] FaceField initial_velocity(const MacGrid& g) const {
    if (grid_velocity) return grid_velocity(g, 0.0);
    return FaceField::sample(g, u0).enforce_no_slip();
  }
  [[nodiscard]] CellField initial_pressure(const MacGrid& g) const {
    if (grid_pressure) return grid_pressure(g, 0.0);
    return CellField::sample(g, p0);
  }

  [[nodiscard]] FaceField exact_velocity(const MacGrid& g, double t) const {
    if (grid_velocity) return grid_velocity(g, t);
    if (!u_exact) throw std::logic_error("Scenario " + name + " has no exact velocity");
    return FaceField::sample(g, [&](double x, double y) { return u_exact(x, y, t); }).enforce_no_slip();
  }
  [[nodiscard]] CellField exact_pressure(const MacGrid& g, double t) const {
    if (grid_pressure) return grid_pressure(g, t);
    if (!p_exact) throw std::logic_error("Scenario " + name + " has no exact pressure");
    return CellField::sample(g, [&](double x, double y) { return p_exact(x, y, t); });
  }
};

namespace mms {

inline constexpr double pi = std::numbers::pi;

inline Vec2 velocity(double x, double y, double t) {
  const double s = std::sin(t);
  const double sx = std::sin(pi * x), sy = std::sin(pi * y);
  return {pi * s * std::sin(2 * pi * y) * sx * sx, -pi * s * std::sin(2 * pi * x) * sy * sy};
}

inline double pressure(double x, double y, double t) { return std::cos(t) * std::cos(pi * x) * std::sin(pi * y); }

/// u_t + (u . grad) u + grad p - nu lap u for the manufactured fields.
inline Vec2 forcing(double x, double y, double t, double nu) {
  const double s = std::sin(t), c = std::cos(t);
  const double sx = std::sin(pi * x), sy = std::sin(pi * y);
  const double s2x = std::sin(2 * pi * x), s2y = std::sin(2 * pi * y);
  const double c2x = std::cos(2 * pi * x), c2y = std::cos(2 * pi * y);
  const double pi2 = pi * pi, pi3 = pi2 * pi;

  const double u1 = pi * s * s2y * sx * sx;
  const double u2 = -pi * s * s2x * sy * sy;
  const double u1_t = pi * c * s2y * sx * sx;
  const double u2_t = -pi * c * s2x * sy * sy;
  const double u1_x = pi2 * s * s2y * s2x;
  const double u1_y = 2 * pi2 * s * c2y * sx * sx;
  const double u2_x = -2 * pi2 * s * c2x * sy * sy;
  const double u2_y = -pi2 * s * s2x * s2y;
  const double lap1 = 2 * pi3 * s * s2y * c2x - 4 * pi3 * s * s2y * sx * sx;
  const double lap2 = 4 * pi3 * s * s2x * sy * sy - 2 * pi3 * s * s2x * c2y;
  const double p_x = -pi * c * sx * sy;
  const double p_y = pi * c * std::cos(pi * x) * std::cos(pi * y);

  return {u1_t + u1 * u1_x + u2 * u1_y + p_x - nu * lap1, u2_t + u1 * u2_x + u2 * u2_y + p_y - nu * lap2};
}

/// Stream function of the manufactured velocity at unit time amplitude.
inline double stream(double x, double y) {
  const double sx = std::sin(pi * x), sy = std::sin(pi * y);
  return sx * sx * sy * sy;
}

/// Spatial shape of the velocity from nodal differences of the stream
/// function; its discrete divergence vanishes identically.
inline FaceField discrete_shape(const MacGrid& g) {
  FaceField u(g);
  auto node = [&](int i, int j) { return stream(g.x0() + i * g.hx(), g.y0() + j * g.hy()); };
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 1; i < g.nx(); ++i) u.x(i, j) = (node(i, j + 1) - node(i, j)) / g.hy();
  for (int j = 1; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) u.y(i, j) = -(node(i + 1, j) - node(i, j)) / g.hx();
  return u;
}

inline CellField pressure_shape(const MacGrid& g) {
  return CellField::sample(g, [](double x, double y) { return std::cos(pi * x) * std::sin(pi * y); });
}

/// u_t + C(u) u + grad p - nu lap u with every spatial operator discrete.
inline FaceField discrete_forcing(const MacGrid& g, double t, double nu) {
  const FaceField shape = discrete_shape(g);
  const FaceField u = std::sin(t) * shape;
  FaceField f = std::cos(t) * shape + advect_skew(u, u) + std::cos(t) * gradient(pressure_shape(g)) - nu * laplacian(u);
  return f.enforce_no_slip();
}

}  // namespace mms

/// Manufactured solution on the unit square with nu = 1, T = 1. Starts from
/// the exact data u(0) = 0, p(0) = cos(pi x) sin(pi y).
inline Scenario manufactured(double nu = 1.0) {
  Scenario s;
  s.name = "mms";
  s.nu = nu;
  s.t_final = 1.0;
  s.forcing = [nu](double x, double y, double t) { return mms::forcing(x, y, t, nu); };
  s.u_exact = mms::velocity;
  s.p_exact = mms::pressure;
  s.u0 = [](double x, double y) { return mms::velocity(x, y, 0.0); };
  s.p0 = [](double x, double y) { return mms::pressure(x, y, 0.0); };
  return s;
}

/// The manufactured solution with the spatial operators applied discretely, so
/// the semi-discrete incompressible problem is solved exactly by the grid
/// fields and the measured error is purely temporal.
inline Scenario manufactured_discrete(double nu = 1.0) {
  Scenario s = manufactured(nu);
  s.name = "mms_discrete";
  s.grid_forcing = [nu](const MacGrid& g, double t) { return mms::discrete_forcing(g, t, nu); };
  s.grid_velocity = [](const MacGrid& g, double t) { return std::sin(t) * mms::discrete_shape(g); };
  s.grid_pressure = [](const MacGrid& g, double t) { return std::cos(t) * mms::pressure_shape(g); };
  return s;
}

/// Rotational body force ramped in over t in [0, 1] on [-1, 1]^2, fluid at rest.
inline Scenario driven_square(double nu = 1e-3, double t_final = 10.0) {
  Scenario s;
  s.name = "driven";
  s.x0 = -1.0;
  s.y0 = -1.0;
  s.lx = 2.0;
  s.ly = 2.0;
  s.nu = nu;
  s.t_final = t_final;
  s.forcing = [](double x, double y, double t) {
    const double ramp = std::min(t, 1.0);
    const double r = 1.0 - x * x - y * y;
    return Vec2{-4.0 * y * r * ramp, 4.0 * x * r * ramp};
  };
  s.u0 = [](double, double) { return Vec2{0.0, 0.0}; };
  s.p0 = [](double, double) { return 0.0; };
  return s;
}

/// Smooth nonzero forcing and data on the unit square for energy audits.
inline Scenario audit_problem(double nu = 0.01) {
  Scenario s;
  s.name = "audit";
  s.nu = nu;
  s.t_final = 1.0;
  s.forcing = [](double x, double y, double t) {
    const double pi = mms::pi;
    return Vec2{std::sin(pi * x) * std::cos(pi * y) * (1.0 + t), std::cos(2 * pi * x) * std::sin(pi * y) - 0.5 * t};
  };
  s.u0 = [](double x, double y) { return mms::velocity(x, y, 0.5 * mms::pi); };
  s.p0 = [](double x, double y) { return std::cos(mms::pi * x) * std::cos(mms::pi * y); };
  return s;
}

/// Pointwise forcing of a scenario with a known exact solution.
inline Vec2 mms_forcing(const Scenario& sc, double x, double y, double t) {
  if (!sc.has_exact()) throw std::invalid_argument("mms_forcing: scenario " + sc.name + " has no exact solution");
  return sc.forcing(x, y, t);
}

inline Scenario scenario_by_name(const std::string& name) {
  if (name == "mms") return manufactured();
  if (name == "mms_discrete") return manufactured_discrete();
  if (name == "driven") return driven_square();
  if (name == "audit") return audit_problem();
  throw std::invalid_argument("unknown scenario '" + name + "'");
}

}  // namespace acflow
