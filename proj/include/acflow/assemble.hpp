/**
 * @file assemble.hpp
 * @brief Interior-face unknown numbering and assembly of the implicit
 *        momentum operator (1/k) I + C(u*) - (k/eps) grad div - nu lap.
 */
#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "acflow/grid.hpp"
#include "acflow/operators.hpp"
#include "acflow/sparse.hpp"

namespace acflow {

/// Maps the non-wall faces of a MacGrid to a dense unknown vector.
class FaceIndex {
 public:
  explicit FaceIndex(const MacGrid& grid)
      : grid_(grid), nux_(static_cast<std::size_t>(grid.nx() - 1) * grid.ny()) {}

  [[nodiscard]] std::size_t size() const { return grid_.interior_face_count(); }
  [[nodiscard]] std::size_t x(int i, int j) const { return static_cast<std::size_t>(i - 1 + (grid_.nx() - 1) * j); }
  [[nodiscard]] std::size_t y(int i, int j) const { return nux_ + static_cast<std::size_t>(i + grid_.nx() * (j - 1)); }
  [[nodiscard]] bool x_interior(int i) const { return i >= 1 && i <= grid_.nx() - 1; }
  [[nodiscard]] bool y_interior(int j) const { return j >= 1 && j <= grid_.ny() - 1; }

  [[nodiscard]] std::vector<double> pack(const FaceField& u) const {
    require_same_grid(grid_, u.grid(), "FaceIndex::pack");
    std::vector<double> v(size());
    for (int j = 0; j < grid_.ny(); ++j)
      for (int i = 1; i < grid_.nx(); ++i) v[x(i, j)] = u.x(i, j);
    for (int j = 1; j < grid_.ny(); ++j)
      for (int i = 0; i < grid_.nx(); ++i) v[y(i, j)] = u.y(i, j);
    return v;
  }

  [[nodiscard]] FaceField unpack(const std::vector<double>& v) const {
    if (v.size() != size()) throw GridMismatch("FaceIndex::unpack: vector size mismatch");
    FaceField u(grid_);
    for (int j = 0; j < grid_.ny(); ++j)
      for (int i = 1; i < grid_.nx(); ++i) u.x(i, j) = v[x(i, j)];
    for (int j = 1; j < grid_.ny(); ++j)
      for (int i = 0; i < grid_.nx(); ++i) u.y(i, j) = v[y(i, j)];
    return u;
  }

 private:
  MacGrid grid_;
  std::size_t nux_;
};

namespace detail {

/// Adds s * divergence-row(cell ci,cj) into row r, skipping wall faces.
inline void add_divergence_row(SparseOperator::Builder& b, const FaceIndex& idx, const MacGrid& g, std::size_t r,
                               int ci, int cj, double s) {
  const double rhx = 1.0 / g.hx(), rhy = 1.0 / g.hy();
  if (idx.x_interior(ci + 1)) b.add(r, idx.x(ci + 1, cj), s * rhx);
  if (idx.x_interior(ci)) b.add(r, idx.x(ci, cj), -s * rhx);
  if (idx.y_interior(cj + 1)) b.add(r, idx.y(ci, cj + 1), s * rhy);
  if (idx.y_interior(cj)) b.add(r, idx.y(ci, cj), -s * rhy);
}

}  // namespace detail

/// Assembles the operator acting on interior-face unknowns. Its action equals
/// u/k + advect_skew(u_star, u) - (k/eps) grad_div(u) - nu laplacian(u) for
/// no-slip u.
inline SparseOperator assemble_momentum(const MacGrid& g, const FaceField& u_star, double k, double eps, double nu) {
  if (!(k > 0.0)) throw std::invalid_argument("assemble_momentum: k must be positive");
  if (!(eps > 0.0)) throw std::invalid_argument("assemble_momentum: eps must be positive");
  if (!(nu > 0.0)) throw std::invalid_argument("assemble_momentum: nu must be positive");
  require_same_grid(g, u_star.grid(), "assemble_momentum");

  const FaceIndex idx(g);
  const int nx = g.nx(), ny = g.ny();
  const double rhx2 = 1.0 / (g.hx() * g.hx()), rhy2 = 1.0 / (g.hy() * g.hy());
  const double adv = 0.5 / g.cell_area();
  const double gd = k / eps;
  SparseOperator::Builder b(idx.size());

  for (int j = 0; j < ny; ++j) {
    for (int i = 1; i < nx; ++i) {
      const std::size_t r = idx.x(i, j);
      // time derivative and viscous part
      double diag = 1.0 / k + nu * 2.0 * rhx2;
      diag += nu * rhy2 * ((j == 0 || j == ny - 1) ? 3.0 : 2.0);
      b.add(r, r, diag);
      if (idx.x_interior(i + 1)) b.add(r, idx.x(i + 1, j), -nu * rhx2);
      if (idx.x_interior(i - 1)) b.add(r, idx.x(i - 1, j), -nu * rhx2);
      if (j + 1 < ny) b.add(r, idx.x(i, j + 1), -nu * rhy2);
      if (j > 0) b.add(r, idx.x(i, j - 1), -nu * rhy2);
      // skew advection
      const ControlVolumeFluxes f = xface_fluxes(u_star, i, j);
      if (idx.x_interior(i + 1)) b.add(r, idx.x(i + 1, j), adv * f.east);
      if (idx.x_interior(i - 1)) b.add(r, idx.x(i - 1, j), -adv * f.west);
      if (j + 1 < ny) b.add(r, idx.x(i, j + 1), adv * f.north);
      if (j > 0) b.add(r, idx.x(i, j - 1), -adv * f.south);
      // -(k/eps) grad div: row is (d(i,j) - d(i-1,j))/hx
      const double s = -gd / g.hx();
      detail::add_divergence_row(b, idx, g, r, i, j, s);
      detail::add_divergence_row(b, idx, g, r, i - 1, j, -s);
    }
  }
  for (int j = 1; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const std::size_t r = idx.y(i, j);
      double diag = 1.0 / k + nu * 2.0 * rhy2;
      diag += nu * rhx2 * ((i == 0 || i == nx - 1) ? 3.0 : 2.0);
      b.add(r, r, diag);
      if (idx.y_interior(j + 1)) b.add(r, idx.y(i, j + 1), -nu * rhy2);
      if (idx.y_interior(j - 1)) b.add(r, idx.y(i, j - 1), -nu * rhy2);
      if (i + 1 < nx) b.add(r, idx.y(i + 1, j), -nu * rhx2);
      if (i > 0) b.add(r, idx.y(i - 1, j), -nu * rhx2);
      const ControlVolumeFluxes f = yface_fluxes(u_star, i, j);
      if (i + 1 < nx) b.add(r, idx.y(i + 1, j), adv * f.east);
      if (i > 0) b.add(r, idx.y(i - 1, j), -adv * f.west);
      if (idx.y_interior(j + 1)) b.add(r, idx.y(i, j + 1), adv * f.north);
      if (idx.y_interior(j - 1)) b.add(r, idx.y(i, j - 1), -adv * f.south);
      const double s = -gd / g.hy();
      detail::add_divergence_row(b, idx, g, r, i, j, s);
      detail::add_divergence_row(b, idx, g, r, i, j - 1, -s);
    }
  }

  bool still = true;
  for (double v : u_star.ux()) still = still && v == 0.0;
  for (double v : u_star.uy()) still = still && v == 0.0;
  return std::move(b).build(still);
}

}  // namespace acflow
