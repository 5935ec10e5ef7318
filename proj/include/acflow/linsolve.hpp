/**
 * @file linsolve.hpp
 * @brief Residual-controlled solves for the momentum systems.
 *
 * The contract is ||A x - b|| <= rel_tol ||b|| measured with a freshly computed
 * residual, or NonConvergence is thrown. Nothing is returned silently.
 */
#pragma once

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "acflow/sparse.hpp"

namespace acflow {

enum class Preconditioner { none, diagonal, ilu0 };
enum class SolverKind { gmres, direct };

struct SolveConfig {
  double rel_tol = 1e-11;
  int max_iter = 5000;
  int restart = 60;
  Preconditioner preconditioner = Preconditioner::diagonal;
  /// Sparse LU by default: the grad-div term makes Krylov iteration counts
  /// grow like k/eps and defeats incomplete factorization.
  SolverKind kind = SolverKind::direct;

  void validate() const {
    if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw std::invalid_argument("SolveConfig: rel_tol must lie in (0, 1)");
    if (max_iter < 1) throw std::invalid_argument("SolveConfig: max_iter must be >= 1");
    if (restart < 1) throw std::invalid_argument("SolveConfig: restart must be >= 1");
  }
};

class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, double achieved, int iterations)
      : std::runtime_error(what + " (relative residual " + format_residual(achieved) + " after " +
                           std::to_string(iterations) + " iterations)"),
        achieved_(achieved),
        iterations_(iterations) {}

  [[nodiscard]] double achieved_residual() const { return achieved_; }

  static std::string format_residual(double r) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", r);
    return buf;
  }
  [[nodiscard]] int iterations() const { return iterations_; }

 private:
  double achieved_;
  int iterations_;
};

struct SolveStats {
  int iterations = 0;
  double relative_residual = 0.0;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double residual_norm(const SparseOperator& A, std::span<const double> x, std::span<const double> b,
                            std::vector<double>& r) {
  A.apply(x, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  return norm2(r);
}

/// Applies z = M^{-1} r for the chosen preconditioner.
class PreconditionerApply {
 public:
  PreconditionerApply(const SparseOperator& A, Preconditioner kind) : A_(A), kind_(kind) {
    if (kind_ == Preconditioner::diagonal) {
      inv_diag_ = A.diagonal();
      for (double& d : inv_diag_) {
        if (d == 0.0) throw std::invalid_argument("diagonal preconditioner: zero on diagonal");
        d = 1.0 / d;
      }
    } else if (kind_ == Preconditioner::ilu0) {
      factor_ilu0();
    }
  }

  void apply(std::span<const double> r, std::span<double> z) const {
    const std::size_t n = r.size();
    switch (kind_) {
      case Preconditioner::none:
        for (std::size_t i = 0; i < n; ++i) z[i] = r[i];
        break;
      case Preconditioner::diagonal:
        for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag_[i] * r[i];
        break;
      case Preconditioner::ilu0: {
        const auto& rp = A_.row_ptr();
        const auto& ci = A_.cols();
        for (std::size_t i = 0; i < n; ++i) {
          double s = r[i];
          for (std::size_t k = rp[i]; k < diag_pos_[i]; ++k) s -= lu_[k] * z[ci[k]];
          z[i] = s;
        }
        for (std::size_t ii = n; ii-- > 0;) {
          double s = z[ii];
          for (std::size_t k = diag_pos_[ii] + 1; k < rp[ii + 1]; ++k) s -= lu_[k] * z[ci[k]];
          z[ii] = s / lu_[diag_pos_[ii]];
        }
        break;
      }
    }
  }

 private:
  void factor_ilu0() {
    const std::size_t n = A_.dim();
    const auto& rp = A_.row_ptr();
    const auto& ci = A_.cols();
    lu_ = A_.values();
    diag_pos_.assign(n, 0);
    std::vector<std::ptrdiff_t> pos(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
      bool found = false;
      for (std::size_t k = rp[i]; k < rp[i + 1]; ++k)
        if (ci[k] == i) {
          diag_pos_[i] = k;
          found = true;
        }
      if (!found) throw std::invalid_argument("ilu0: structurally zero diagonal");
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = rp[i]; k < rp[i + 1]; ++k) pos[ci[k]] = static_cast<std::ptrdiff_t>(k);
      for (std::size_t k = rp[i]; k < diag_pos_[i]; ++k) {
        const std::size_t c = ci[k];
        lu_[k] /= lu_[diag_pos_[c]];
        for (std::size_t kk = diag_pos_[c] + 1; kk < rp[c + 1]; ++kk) {
          const std::ptrdiff_t p = pos[ci[kk]];
          if (p >= 0) lu_[static_cast<std::size_t>(p)] -= lu_[k] * lu_[kk];
        }
      }
      for (std::size_t k = rp[i]; k < rp[i + 1]; ++k) pos[ci[k]] = -1;
      if (lu_[diag_pos_[i]] == 0.0) throw std::runtime_error("ilu0: zero pivot");
    }
  }

  const SparseOperator& A_;
  Preconditioner kind_;
  std::vector<double> inv_diag_;
  std::vector<double> lu_;
  std::vector<std::size_t> diag_pos_;
};

/// Restarted GMRES, right preconditioned so the Arnoldi residual is the true
/// (unpreconditioned) residual. Modified Gram-Schmidt with Givens rotations.
inline SolveStats gmres(const SparseOperator& A, std::span<const double> b, std::span<double> x,
                        const SolveConfig& cfg) {
  const std::size_t n = A.dim();
  const int m = cfg.restart;
  const PreconditionerApply M(A, cfg.preconditioner);
  const double bnorm = norm2(b);
  const double target = cfg.rel_tol * bnorm;

  std::vector<double> r(n), w(n), z(n);
  std::vector<std::vector<double>> V(static_cast<std::size_t>(m) + 1, std::vector<double>(n));
  std::vector<std::vector<double>> H(static_cast<std::size_t>(m) + 1, std::vector<double>(static_cast<std::size_t>(m)));
  std::vector<double> cs(static_cast<std::size_t>(m)), sn(static_cast<std::size_t>(m)), g(static_cast<std::size_t>(m) + 1);

  int total = 0;
  double rnorm = residual_norm(A, x, b, r);
  while (rnorm > target && total < cfg.max_iter) {
    for (std::size_t i = 0; i < n; ++i) V[0][i] = r[i] / rnorm;
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = rnorm;
    int j = 0;
    for (; j < m && total < cfg.max_iter; ++j, ++total) {
      const auto ju = static_cast<std::size_t>(j);
      M.apply(V[ju], z);
      A.apply(z, w);
      for (int i = 0; i <= j; ++i) {
        const auto iu = static_cast<std::size_t>(i);
        H[iu][ju] = dot(w, V[iu]);
        for (std::size_t q = 0; q < n; ++q) w[q] -= H[iu][ju] * V[iu][q];
      }
      const double hn = norm2(w);
      H[ju + 1][ju] = hn;
      if (hn != 0.0)
        for (std::size_t q = 0; q < n; ++q) V[ju + 1][q] = w[q] / hn;
      for (int i = 0; i < j; ++i) {
        const auto iu = static_cast<std::size_t>(i);
        const double t = cs[iu] * H[iu][ju] + sn[iu] * H[iu + 1][ju];
        H[iu + 1][ju] = -sn[iu] * H[iu][ju] + cs[iu] * H[iu + 1][ju];
        H[iu][ju] = t;
      }
      const double den = std::hypot(H[ju][ju], H[ju + 1][ju]);
      cs[ju] = den == 0.0 ? 1.0 : H[ju][ju] / den;
      sn[ju] = den == 0.0 ? 0.0 : H[ju + 1][ju] / den;
      H[ju][ju] = den;
      H[ju + 1][ju] = 0.0;
      g[ju + 1] = -sn[ju] * g[ju];
      g[ju] = cs[ju] * g[ju];
      if (std::abs(g[ju + 1]) <= 0.5 * target || hn == 0.0) {
        ++j;
        ++total;
        break;
      }
    }
    // Back substitution for y, then x += M^{-1} V y.
    std::vector<double> y(static_cast<std::size_t>(j));
    for (int i = j - 1; i >= 0; --i) {
      const auto iu = static_cast<std::size_t>(i);
      double s = g[iu];
      for (int q = i + 1; q < j; ++q) s -= H[iu][static_cast<std::size_t>(q)] * y[static_cast<std::size_t>(q)];
      y[iu] = s / H[iu][iu];
    }
    std::fill(w.begin(), w.end(), 0.0);
    for (int i = 0; i < j; ++i)
      for (std::size_t q = 0; q < n; ++q) w[q] += y[static_cast<std::size_t>(i)] * V[static_cast<std::size_t>(i)][q];
    M.apply(w, z);
    for (std::size_t q = 0; q < n; ++q) x[q] += z[q];
    rnorm = residual_norm(A, x, b, r);
  }
  return {total, bnorm > 0.0 ? rnorm / bnorm : rnorm};
}

inline SolveStats direct(const SparseOperator& A, std::span<const double> b, std::span<double> x,
                         double refine_below, int max_refinement = 5) {
  using SpMat = Eigen::SparseMatrix<double>;
  const auto n = static_cast<Eigen::Index>(A.dim());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(A.nonzeros());
  for (std::size_t r = 0; r < A.dim(); ++r)
    for (std::size_t k = A.row_ptr()[r]; k < A.row_ptr()[r + 1]; ++k)
      trip.emplace_back(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(A.cols()[k]), A.values()[k]);
  SpMat M(n, n);
  M.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(M);
  if (lu.info() != Eigen::Success) throw NonConvergence("direct solve: factorization failed", INFINITY, 0);
  const Eigen::Map<const Eigen::VectorXd> bv(b.data(), n);
  Eigen::Map<Eigen::VectorXd> xv(x.data(), n);
  xv = lu.solve(bv);
  std::vector<double> r(A.dim());
  const double bnorm = norm2(b);
  double rn = residual_norm(A, x, b, r);
  // iterative refinement with the same factors
  int sweeps = 1;
  for (; sweeps <= max_refinement && rn > refine_below * bnorm; ++sweeps) {
    const Eigen::Map<const Eigen::VectorXd> rv(r.data(), n);
    xv += lu.solve(rv);
    const double next = residual_norm(A, x, b, r);
    if (!(next < 0.5 * rn)) {
      rn = next;
      break;
    }
    rn = next;
  }
  return {sweeps, bnorm > 0.0 ? rn / bnorm : rn};
}

}  // namespace detail

/// Normwise backward error accepted from the direct solver when the relative
/// residual target lies below the conditioning floor.
inline constexpr double kDirectBackwardError = 1e-13;

/// Solves A x = b. `x` carries the initial guess on entry (zero-filled when
/// empty) and the solution on exit.
inline SolveStats solve(const SparseOperator& A, std::span<const double> b, std::vector<double>& x,
                        const SolveConfig& cfg = {}) {
  cfg.validate();
  if (b.size() != A.dim()) throw std::invalid_argument("solve: right-hand side dimension mismatch");
  if (x.empty()) x.assign(A.dim(), 0.0);
  if (x.size() != A.dim()) throw std::invalid_argument("solve: initial guess dimension mismatch");

  if (detail::norm2(b) == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    return {0, 0.0};
  }
  SolveStats stats = cfg.kind == SolverKind::direct ? detail::direct(A, b, x, 0.01 * cfg.rel_tol) : detail::gmres(A, b, x, cfg);
  if (cfg.kind == SolverKind::direct && !(stats.relative_residual <= cfg.rel_tol)) {
    // accept a factorization solve whose normwise backward error is at roundoff level
    std::vector<double> r(A.dim());
    detail::residual_norm(A, x, b, r);
    double a_inf = 0.0, x_inf = 0.0, r_inf = 0.0;
    for (std::size_t i = 0; i < A.dim(); ++i) {
      double row = 0.0;
      for (std::size_t k = A.row_ptr()[i]; k < A.row_ptr()[i + 1]; ++k) row += std::abs(A.values()[k]);
      a_inf = std::max(a_inf, row);
      x_inf = std::max(x_inf, std::abs(x[i]));
      r_inf = std::max(r_inf, std::abs(r[i]));
    }
    if (r_inf <= kDirectBackwardError * a_inf * x_inf) return stats;
  }
  if (!(stats.relative_residual <= cfg.rel_tol)) {
    throw NonConvergence(cfg.kind == SolverKind::direct ? "direct solve missed tolerance" : "GMRES did not converge",
                         stats.relative_residual, stats.iterations);
  }
  return stats;
}

inline std::vector<double> solve(const SparseOperator& A, std::span<const double> b, const SolveConfig& cfg = {}) {
  std::vector<double> x;
  solve(A, b, x, cfg);
  return x;
}

}  // namespace acflow
