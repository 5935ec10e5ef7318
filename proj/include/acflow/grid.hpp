/**
 * @file grid.hpp
 * @brief Staggered (MAC) grid on a rectangle with face and cell field containers.
 *
 * Layout:
 *   - cell scalars p(i,j) at ((i+1/2)hx, (j+1/2)hy), 0 <= i < nx, 0 <= j < ny
 *   - x-face normal velocity ux(i,j) at (i hx, (j+1/2)hy), 0 <= i <= nx
 *   - y-face normal velocity uy(i,j) at ((i+1/2)hx, j hy), 0 <= j <= ny
 *
 * Faces with i = 0, nx (x-faces) or j = 0, ny (y-faces) lie on the wall and
 * carry the no-slip value zero.
 */
#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace acflow {

/// Thrown when two fields or a field and a grid do not conform.
class GridMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class MacGrid {
 public:
  MacGrid() = default;

  MacGrid(int nx, int ny, double lx, double ly, double x0 = 0.0, double y0 = 0.0)
      : nx_(nx), ny_(ny), lx_(lx), ly_(ly), x0_(x0), y0_(y0) {
    if (nx < 4 || ny < 4) {
      throw std::invalid_argument("MacGrid: need at least 4 cells per direction");
    }
    if (!(lx > 0.0) || !(ly > 0.0)) {
      throw std::invalid_argument("MacGrid: domain lengths must be positive");
    }
    hx_ = lx / nx;
    hy_ = ly / ny;
  }

  [[nodiscard]] int nx() const { return nx_; }
  [[nodiscard]] int ny() const { return ny_; }
  [[nodiscard]] double lx() const { return lx_; }
  [[nodiscard]] double ly() const { return ly_; }
  [[nodiscard]] double hx() const { return hx_; }
  [[nodiscard]] double hy() const { return hy_; }
  [[nodiscard]] double x0() const { return x0_; }
  [[nodiscard]] double y0() const { return y0_; }
  [[nodiscard]] double cell_area() const { return hx_ * hy_; }

  [[nodiscard]] std::size_t cell_count() const { return static_cast<std::size_t>(nx_) * ny_; }
  [[nodiscard]] std::size_t xface_count() const { return static_cast<std::size_t>(nx_ + 1) * ny_; }
  [[nodiscard]] std::size_t yface_count() const { return static_cast<std::size_t>(nx_) * (ny_ + 1); }

  /// Number of faces that are not on the wall, i.e. the velocity unknowns.
  [[nodiscard]] std::size_t interior_face_count() const {
    return static_cast<std::size_t>(nx_ - 1) * ny_ + static_cast<std::size_t>(nx_) * (ny_ - 1);
  }

  [[nodiscard]] std::size_t cell(int i, int j) const { return static_cast<std::size_t>(i + nx_ * j); }
  [[nodiscard]] std::size_t xface(int i, int j) const { return static_cast<std::size_t>(i + (nx_ + 1) * j); }
  [[nodiscard]] std::size_t yface(int i, int j) const { return static_cast<std::size_t>(i + nx_ * j); }

  [[nodiscard]] double cell_x(int i) const { return x0_ + (i + 0.5) * hx_; }
  [[nodiscard]] double cell_y(int j) const { return y0_ + (j + 0.5) * hy_; }
  [[nodiscard]] double xface_x(int i) const { return x0_ + i * hx_; }
  [[nodiscard]] double xface_y(int j) const { return y0_ + (j + 0.5) * hy_; }
  [[nodiscard]] double yface_x(int i) const { return x0_ + (i + 0.5) * hx_; }
  [[nodiscard]] double yface_y(int j) const { return y0_ + j * hy_; }

  friend bool operator==(const MacGrid&, const MacGrid&) = default;

 private:
  int nx_ = 0;
  int ny_ = 0;
  double lx_ = 0.0;
  double ly_ = 0.0;
  double x0_ = 0.0;
  double y0_ = 0.0;
  double hx_ = 0.0;
  double hy_ = 0.0;
};

inline void require_same_grid(const MacGrid& a, const MacGrid& b, const char* where) {
  if (!(a == b)) {
    throw GridMismatch(std::string(where) + ": fields live on different grids");
  }
}

/// Cell-centered scalar (pressure, divergence).
class CellField {
 public:
  CellField() = default;
  explicit CellField(const MacGrid& grid, double value = 0.0)
      : grid_(grid), values_(grid.cell_count(), value) {}

  [[nodiscard]] const MacGrid& grid() const { return grid_; }
  [[nodiscard]] std::vector<double>& values() & { return values_; }
  [[nodiscard]] const std::vector<double>& values() const& { return values_; }
  [[nodiscard]] std::vector<double> values() && { return std::move(values_); }

  double& operator()(int i, int j) { return values_[grid_.cell(i, j)]; }
  double operator()(int i, int j) const { return values_[grid_.cell(i, j)]; }

  CellField& operator+=(const CellField& o) {
    require_same_grid(grid_, o.grid_, "CellField +=");
    for (std::size_t n = 0; n < values_.size(); ++n) values_[n] += o.values_[n];
    return *this;
  }
  CellField& operator-=(const CellField& o) {
    require_same_grid(grid_, o.grid_, "CellField -=");
    for (std::size_t n = 0; n < values_.size(); ++n) values_[n] -= o.values_[n];
    return *this;
  }
  CellField& operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
  }

  friend CellField operator+(CellField a, const CellField& b) { return a += b; }
  friend CellField operator-(CellField a, const CellField& b) { return a -= b; }
  friend CellField operator*(double s, CellField a) { return a *= s; }
  friend CellField operator*(CellField a, double s) { return a *= s; }

  template <class Fn>
  static CellField sample(const MacGrid& grid, Fn&& fn) {
    CellField out(grid);
    for (int j = 0; j < grid.ny(); ++j)
      for (int i = 0; i < grid.nx(); ++i) out(i, j) = fn(grid.cell_x(i), grid.cell_y(j));
    return out;
  }

 private:
  MacGrid grid_;
  std::vector<double> values_;
};

/// Face-normal velocity components on the staggered lattice.
class FaceField {
 public:
  FaceField() = default;
  explicit FaceField(const MacGrid& grid, double value = 0.0)
      : grid_(grid), ux_(grid.xface_count(), value), uy_(grid.yface_count(), value) {}

  [[nodiscard]] const MacGrid& grid() const { return grid_; }
  [[nodiscard]] std::vector<double>& ux() & { return ux_; }
  [[nodiscard]] const std::vector<double>& ux() const& { return ux_; }
  [[nodiscard]] std::vector<double> ux() && { return std::move(ux_); }
  [[nodiscard]] std::vector<double>& uy() & { return uy_; }
  [[nodiscard]] const std::vector<double>& uy() const& { return uy_; }
  [[nodiscard]] std::vector<double> uy() && { return std::move(uy_); }

  double& x(int i, int j) { return ux_[grid_.xface(i, j)]; }
  double x(int i, int j) const { return ux_[grid_.xface(i, j)]; }
  double& y(int i, int j) { return uy_[grid_.yface(i, j)]; }
  double y(int i, int j) const { return uy_[grid_.yface(i, j)]; }

  /// Zero every wall face (homogeneous Dirichlet normal velocity).
  FaceField& enforce_no_slip() {
    const int nx = grid_.nx(), ny = grid_.ny();
    for (int j = 0; j < ny; ++j) {
      x(0, j) = 0.0;
      x(nx, j) = 0.0;
    }
    for (int i = 0; i < nx; ++i) {
      y(i, 0) = 0.0;
      y(i, ny) = 0.0;
    }
    return *this;
  }

  [[nodiscard]] bool is_no_slip() const {
    const int nx = grid_.nx(), ny = grid_.ny();
    for (int j = 0; j < ny; ++j)
      if (x(0, j) != 0.0 || x(nx, j) != 0.0) return false;
    for (int i = 0; i < nx; ++i)
      if (y(i, 0) != 0.0 || y(i, ny) != 0.0) return false;
    return true;
  }

  FaceField& operator+=(const FaceField& o) {
    require_same_grid(grid_, o.grid_, "FaceField +=");
    for (std::size_t n = 0; n < ux_.size(); ++n) ux_[n] += o.ux_[n];
    for (std::size_t n = 0; n < uy_.size(); ++n) uy_[n] += o.uy_[n];
    return *this;
  }
  FaceField& operator-=(const FaceField& o) {
    require_same_grid(grid_, o.grid_, "FaceField -=");
    for (std::size_t n = 0; n < ux_.size(); ++n) ux_[n] -= o.ux_[n];
    for (std::size_t n = 0; n < uy_.size(); ++n) uy_[n] -= o.uy_[n];
    return *this;
  }
  FaceField& operator*=(double s) {
    for (double& v : ux_) v *= s;
    for (double& v : uy_) v *= s;
    return *this;
  }

  friend FaceField operator+(FaceField a, const FaceField& b) { return a += b; }
  friend FaceField operator-(FaceField a, const FaceField& b) { return a -= b; }
  friend FaceField operator*(double s, FaceField a) { return a *= s; }
  friend FaceField operator*(FaceField a, double s) { return a *= s; }

  /// Sample a vector function (x, y) -> pair{vx, vy} at face centers.
  /// Wall faces are sampled too; call enforce_no_slip() to override them.
  template <class Fn>
  static FaceField sample(const MacGrid& grid, Fn&& fn) {
    FaceField out(grid);
    for (int j = 0; j < grid.ny(); ++j)
      for (int i = 0; i <= grid.nx(); ++i) out.x(i, j) = fn(grid.xface_x(i), grid.xface_y(j)).first;
    for (int j = 0; j <= grid.ny(); ++j)
      for (int i = 0; i < grid.nx(); ++i) out.y(i, j) = fn(grid.yface_x(i), grid.yface_y(j)).second;
    return out;
  }

 private:
  MacGrid grid_;
  std::vector<double> ux_;
  std::vector<double> uy_;
};

/// Discrete L2 inner product, hx*hy weighted. Each face component is weighted
/// on its own staggered lattice.
inline double inner(const CellField& a, const CellField& b) {
  require_same_grid(a.grid(), b.grid(), "inner");
  double s = 0.0;
  for (std::size_t n = 0; n < a.values().size(); ++n) s += a.values()[n] * b.values()[n];
  return s * a.grid().cell_area();
}

inline double inner(const FaceField& a, const FaceField& b) {
  require_same_grid(a.grid(), b.grid(), "inner");
  double s = 0.0;
  for (std::size_t n = 0; n < a.ux().size(); ++n) s += a.ux()[n] * b.ux()[n];
  for (std::size_t n = 0; n < a.uy().size(); ++n) s += a.uy()[n] * b.uy()[n];
  return s * a.grid().cell_area();
}

inline double norm(const CellField& a) { return std::sqrt(inner(a, a)); }
inline double norm(const FaceField& a) { return std::sqrt(inner(a, a)); }

}  // namespace acflow
