#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "bgnflow/errors.hpp"

namespace bgnflow {

// Square matrix whose row i holds entries at columns (i + o) mod n for
// offsets |o| <= halfband. Rows of a periodic mesh map here directly:
// assembly writes by (row, offset), so wraparound columns need no special
// casing. If 2*halfband+1 > n two offsets may alias the same column; apply()
// and to_dense() accumulate, so the operator stays well defined.
class CyclicBandedMatrix {
 public:
  CyclicBandedMatrix(int n, int halfband)
      : n_(n), hb_(halfband), data_(static_cast<std::size_t>(n) * (2 * halfband + 1), 0.0) {
    if (n < 1 || halfband < 0) {
      throw InvalidArgumentError("CyclicBandedMatrix: bad dimensions");
    }
  }

  int size() const { return n_; }
  int halfband() const { return hb_; }

  double& at(int row, int offset) { return data_[slot(row, offset)]; }
  double at(int row, int offset) const { return data_[slot(row, offset)]; }

  int column(int row, int offset) const {
    int c = (row + offset) % n_;
    return c < 0 ? c + n_ : c;
  }

  std::vector<double> apply(const std::vector<double>& x) const {
    std::vector<double> y(n_, 0.0);
    for (int i = 0; i < n_; ++i) {
      double s = 0.0;
      for (int o = -hb_; o <= hb_; ++o) {
        s += data_[slot(i, o)] * x[column(i, o)];
      }
      y[i] = s;
    }
    return y;
  }

  // Row-major dense copy; aliased offsets accumulate.
  std::vector<double> to_dense() const {
    std::vector<double> dense(static_cast<std::size_t>(n_) * n_, 0.0);
    for (int i = 0; i < n_; ++i) {
      for (int o = -hb_; o <= hb_; ++o) {
        dense[static_cast<std::size_t>(i) * n_ + column(i, o)] +=
            data_[slot(i, o)];
      }
    }
    return dense;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  std::size_t slot(int row, int offset) const {
    return static_cast<std::size_t>(row) * (2 * hb_ + 1) + (offset + hb_);
  }

  int n_;
  int hb_;
  std::vector<double> data_;
};

}  // namespace bgnflow
