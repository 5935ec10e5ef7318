/**
 * @file sparse.hpp
 * @brief Row-compressed square sparse operator.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace acflow {

class SparseOperator {
 public:
  SparseOperator() = default;

  [[nodiscard]] std::size_t dim() const { return row_ptr_.empty() ? 0 : row_ptr_.size() - 1; }
  [[nodiscard]] std::size_t nonzeros() const { return values_.size(); }
  [[nodiscard]] bool symmetric() const { return symmetric_; }

  [[nodiscard]] const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
  [[nodiscard]] const std::vector<std::size_t>& cols() const { return cols_; }
  [[nodiscard]] const std::vector<double>& values() const { return values_; }

  void apply(std::span<const double> x, std::span<double> y) const {
    const std::size_t n = dim();
    if (x.size() != n || y.size() != n) {
      throw std::invalid_argument("SparseOperator::apply: dimension mismatch");
    }
    for (std::size_t r = 0; r < n; ++r) {
      double s = 0.0;
      for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) s += values_[k] * x[cols_[k]];
      y[r] = s;
    }
  }

  [[nodiscard]] std::vector<double> apply(std::span<const double> x) const {
    std::vector<double> y(dim());
    apply(x, y);
    return y;
  }

  /// Stored entry (r, c), or zero when not in the pattern.
  [[nodiscard]] double coeff(std::size_t r, std::size_t c) const {
    const auto first = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r]);
    const auto last = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r + 1]);
    const auto it = std::lower_bound(first, last, c);
    if (it == last || *it != c) return 0.0;
    return values_[static_cast<std::size_t>(it - cols_.begin())];
  }

  [[nodiscard]] std::vector<double> diagonal() const {
    std::vector<double> d(dim());
    for (std::size_t r = 0; r < dim(); ++r) d[r] = coeff(r, r);
    return d;
  }

  /// Exact structural and numerical symmetry check.
  [[nodiscard]] bool is_symmetric(double rel_tol = 0.0) const {
    double scale = 0.0;
    for (double v : values_) scale = std::max(scale, std::abs(v));
    for (std::size_t r = 0; r < dim(); ++r)
      for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
        if (std::abs(values_[k] - coeff(cols_[k], r)) > rel_tol * scale) return false;
    return true;
  }

  class Builder;

 private:
  std::vector<std::size_t> row_ptr_;
  std::vector<std::size_t> cols_;
  std::vector<double> values_;
  bool symmetric_ = false;
};

/// Accumulates (row, col, value) contributions; duplicates are summed.
class SparseOperator::Builder {
 public:
  explicit Builder(std::size_t n) : rows_(n) {}

  void add(std::size_t r, std::size_t c, double v) {
    if (r >= rows_.size() || c >= rows_.size()) {
      throw std::out_of_range("SparseOperator::Builder: index out of range");
    }
    rows_[r].push_back({c, v});
  }

  [[nodiscard]] SparseOperator build(bool symmetric_hint = false) && {
    SparseOperator op;
    op.row_ptr_.assign(rows_.size() + 1, 0);
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      auto& row = rows_[r];
      std::sort(row.begin(), row.end(), [](const Entry& a, const Entry& b) { return a.col < b.col; });
      for (std::size_t k = 0; k < row.size(); ++k) {
        if (!op.cols_.empty() && op.cols_.size() > op.row_ptr_[r] && op.cols_.back() == row[k].col) {
          op.values_.back() += row[k].value;
        } else {
          op.cols_.push_back(row[k].col);
          op.values_.push_back(row[k].value);
        }
      }
      op.row_ptr_[r + 1] = op.cols_.size();
    }
    op.symmetric_ = symmetric_hint;
    return op;
  }

 private:
  struct Entry {
    std::size_t col;
    double value;
  };
  std::vector<std::vector<Entry>> rows_;
};

}  // namespace acflow
