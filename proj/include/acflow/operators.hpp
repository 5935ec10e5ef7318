/**
 * @file operators.hpp
 * @brief Staggered finite-difference operators with exact discrete adjoint and
 *        skew-symmetry properties.
 *
 * For no-slip face fields v and any cell field p:
 *   inner(gradient(p), v) == -inner(p, divergence(v))
 *   inner(advect_skew(w, v), v) == 0
 *   inner(laplacian(u), v) == inner(u, laplacian(v)),  inner(laplacian(u), u) < 0
 * hold up to roundoff. The energy audits in energy.hpp rely on all three.
 */
#pragma once

#include "acflow/grid.hpp"

namespace acflow {

/// Cell value (ux(i+1,j) - ux(i,j))/hx + (uy(i,j+1) - uy(i,j))/hy.
inline CellField divergence(const FaceField& u) {
  const MacGrid& g = u.grid();
  CellField d(g);
  const double rhx = 1.0 / g.hx(), rhy = 1.0 / g.hy();
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i)
      d(i, j) = (u.x(i + 1, j) - u.x(i, j)) * rhx + (u.y(i, j + 1) - u.y(i, j)) * rhy;
  return d;
}

/// Face-centered difference of a cell field; wall faces are zero.
inline FaceField gradient(const CellField& p) {
  const MacGrid& g = p.grid();
  FaceField out(g);
  const double rhx = 1.0 / g.hx(), rhy = 1.0 / g.hy();
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 1; i < g.nx(); ++i) out.x(i, j) = (p(i, j) - p(i - 1, j)) * rhx;
  for (int j = 1; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) out.y(i, j) = (p(i, j) - p(i, j - 1)) * rhy;
  return out;
}

/// Five-point Laplacian per component on its own face lattice.
///
/// Along the wall-normal direction the neighbors are the (zero) wall faces.
/// Along the tangential direction the ghost value beyond the wall is the
/// reflection -u, so the wall value of the tangential velocity is zero.
inline FaceField laplacian(const FaceField& u) {
  const MacGrid& g = u.grid();
  const int nx = g.nx(), ny = g.ny();
  const double rhx2 = 1.0 / (g.hx() * g.hx()), rhy2 = 1.0 / (g.hy() * g.hy());
  FaceField out(g);
  for (int j = 0; j < ny; ++j) {
    for (int i = 1; i < nx; ++i) {
      const double c = u.x(i, j);
      const double s = j > 0 ? u.x(i, j - 1) : -c;
      const double n = j < ny - 1 ? u.x(i, j + 1) : -c;
      out.x(i, j) = (u.x(i + 1, j) - 2.0 * c + u.x(i - 1, j)) * rhx2 + (n - 2.0 * c + s) * rhy2;
    }
  }
  for (int j = 1; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const double c = u.y(i, j);
      const double w = i > 0 ? u.y(i - 1, j) : -c;
      const double e = i < nx - 1 ? u.y(i + 1, j) : -c;
      out.y(i, j) = (e - 2.0 * c + w) * rhx2 + (u.y(i, j + 1) - 2.0 * c + u.y(i, j - 1)) * rhy2;
    }
  }
  return out;
}

/// Discrete ||grad u||^2 as an explicit sum of squared differences, matching
/// -inner(laplacian(u), u) for no-slip u.
inline double dirichlet_energy(const FaceField& u) {
  const MacGrid& g = u.grid();
  const int nx = g.nx(), ny = g.ny();
  const double rhx2 = 1.0 / (g.hx() * g.hx()), rhy2 = 1.0 / (g.hy() * g.hy());
  double s = 0.0;
  auto sq = [](double a) { return a * a; };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) s += sq(u.x(i + 1, j) - u.x(i, j)) * rhx2;
    for (int i = 1; i < nx; ++i) {
      if (j + 1 < ny) s += sq(u.x(i, j + 1) - u.x(i, j)) * rhy2;
    }
  }
  for (int i = 1; i < nx; ++i) s += 2.0 * (sq(u.x(i, 0)) + sq(u.x(i, ny - 1))) * rhy2;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) s += sq(u.y(i, j + 1) - u.y(i, j)) * rhy2;
  }
  for (int j = 1; j < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) s += sq(u.y(i + 1, j) - u.y(i, j)) * rhx2;
    s += 2.0 * (sq(u.y(0, j)) + sq(u.y(nx - 1, j))) * rhx2;
  }
  return s * g.cell_area();
}

/// Mass fluxes through the four faces of the velocity control volumes,
/// interpolated from the transporting field w. Shared by advect_skew and the
/// matrix assembly so both produce bit-identical coefficients.
struct ControlVolumeFluxes {
  double east, west, north, south;
};

inline ControlVolumeFluxes xface_fluxes(const FaceField& w, int i, int j) {
  const MacGrid& g = w.grid();
  return {0.5 * (w.x(i, j) + w.x(i + 1, j)) * g.hy(), 0.5 * (w.x(i - 1, j) + w.x(i, j)) * g.hy(),
          0.5 * (w.y(i - 1, j + 1) + w.y(i, j + 1)) * g.hx(), 0.5 * (w.y(i - 1, j) + w.y(i, j)) * g.hx()};
}

inline ControlVolumeFluxes yface_fluxes(const FaceField& w, int i, int j) {
  const MacGrid& g = w.grid();
  return {0.5 * (w.x(i + 1, j - 1) + w.x(i + 1, j)) * g.hy(), 0.5 * (w.x(i, j - 1) + w.x(i, j)) * g.hy(),
          0.5 * (w.y(i, j) + w.y(i, j + 1)) * g.hx(), 0.5 * (w.y(i, j - 1) + w.y(i, j)) * g.hx()};
}

/// Skew-symmetric advection w.grad(v) + (div w) v / 2.
///
/// Average of the advective and divergence forms with central interpolation.
/// The diagonal contributions cancel, leaving half the flux-weighted sum of
/// neighbor values; neighbors beyond a wall in the tangential direction count
/// as zero. The resulting operator is exactly skew for any w.
inline FaceField advect_skew(const FaceField& w, const FaceField& v) {
  require_same_grid(w.grid(), v.grid(), "advect_skew");
  const MacGrid& g = v.grid();
  const int nx = g.nx(), ny = g.ny();
  const double scale = 0.5 / g.cell_area();
  FaceField out(g);
  for (int j = 0; j < ny; ++j) {
    for (int i = 1; i < nx; ++i) {
      const ControlVolumeFluxes f = xface_fluxes(w, i, j);
      const double vn = j + 1 < ny ? v.x(i, j + 1) : 0.0;
      const double vs = j > 0 ? v.x(i, j - 1) : 0.0;
      out.x(i, j) = scale * (f.east * v.x(i + 1, j) - f.west * v.x(i - 1, j) + f.north * vn - f.south * vs);
    }
  }
  for (int j = 1; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const ControlVolumeFluxes f = yface_fluxes(w, i, j);
      const double ve = i + 1 < nx ? v.y(i + 1, j) : 0.0;
      const double vw = i > 0 ? v.y(i - 1, j) : 0.0;
      out.y(i, j) = scale * (f.east * ve - f.west * vw + f.north * v.y(i, j + 1) - f.south * v.y(i, j - 1));
    }
  }
  return out;
}

inline FaceField grad_div(const FaceField& u) { return gradient(divergence(u)); }

}  // namespace acflow
