#include "milkit/sparse.hpp"

#include <algorithm>
#include <cassert>
#include <numeric>

#include "milkit/errors.hpp"

namespace milkit {

SparseMatrix SparseMatrix::from_coo(std::int64_t n,
                                    const std::vector<std::int64_t>& rows,
                                    const std::vector<std::int64_t>& cols,
                                    const std::vector<double>& vals) {
  if (rows.size() != cols.size() || rows.size() != vals.size())
    throw Error("adjacency COO arrays have inconsistent lengths");
  const std::size_t e = rows.size();
  std::vector<std::size_t> order(e);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (rows[a] != rows[b]) return rows[a] < rows[b];
    return cols[a] < cols[b];
  });

  SparseMatrix m(n);
  m.col_.reserve(e);
  m.val_.reserve(e);
  std::int64_t last_row = -1;
  std::int64_t last_col = -1;
  std::vector<std::int64_t> entry_rows;
  entry_rows.reserve(e);
  for (std::size_t idx : order) {
    const std::int64_t r = rows[idx];
    const std::int64_t c = cols[idx];
    if (r < 0 || r >= n || c < 0 || c >= n)
      throw Error("adjacency index out of range");
    if (r == last_row && c == last_col) {
      m.val_.back() += vals[idx];  // fold duplicate entries
    } else {
      entry_rows.push_back(r);
      m.col_.push_back(c);
      m.val_.push_back(vals[idx]);
      last_row = r;
      last_col = c;
    }
  }
  for (std::size_t k = 0; k < entry_rows.size(); ++k)
    ++m.row_ptr_[static_cast<std::size_t>(entry_rows[k]) + 1];
  for (std::int64_t i = 0; i < n; ++i)
    m.row_ptr_[static_cast<std::size_t>(i) + 1] += m.row_ptr_[static_cast<std::size_t>(i)];
  return m;
}

bool SparseMatrix::is_symmetric() const {
  // compare sorted entries against their transposes
  for (std::int64_t i = 0; i < n_; ++i) {
    for (std::int64_t k = row_ptr_[static_cast<std::size_t>(i)];
         k < row_ptr_[static_cast<std::size_t>(i) + 1]; ++k) {
      const std::int64_t j = col_[static_cast<std::size_t>(k)];
      const double w = val_[static_cast<std::size_t>(k)];
      // binary search for (j, i)
      const std::int64_t lo = row_ptr_[static_cast<std::size_t>(j)];
      const std::int64_t hi = row_ptr_[static_cast<std::size_t>(j) + 1];
      auto it = std::lower_bound(col_.begin() + lo, col_.begin() + hi, i);
      if (it == col_.begin() + hi || *it != i) return false;
      const double wt = val_[static_cast<std::size_t>(it - col_.begin())];
      if (wt != w) return false;
    }
  }
  return true;
}

bool SparseMatrix::has_zero_diagonal() const {
  for (std::int64_t i = 0; i < n_; ++i) {
    for (std::int64_t k = row_ptr_[static_cast<std::size_t>(i)];
         k < row_ptr_[static_cast<std::size_t>(i) + 1]; ++k) {
      if (col_[static_cast<std::size_t>(k)] == i && val_[static_cast<std::size_t>(k)] != 0.0)
        return false;
    }
  }
  return true;
}

double SparseMatrix::min_value() const {
  double m = 0.0;
  for (double v : val_) m = std::min(m, v);
  return m;
}

std::vector<double> SparseMatrix::degrees() const {
  std::vector<double> d(static_cast<std::size_t>(n_), 0.0);
  for (std::int64_t i = 0; i < n_; ++i) {
    double acc = 0.0;
    for (std::int64_t k = row_ptr_[static_cast<std::size_t>(i)];
         k < row_ptr_[static_cast<std::size_t>(i) + 1]; ++k) {
      acc += val_[static_cast<std::size_t>(k)];
    }
    d[static_cast<std::size_t>(i)] = acc;
  }
  return d;
}

void SparseMatrix::spmm(const MatD& x, MatD& y) const {
  assert(x.rows() == n_ && y.rows() == n_ && y.cols() == x.cols());
  const std::int64_t c = x.cols();
  y.fill(0.0);
  for (std::int64_t i = 0; i < n_; ++i) {
    double* yr = y.row(i);
    for (std::int64_t k = row_ptr_[static_cast<std::size_t>(i)];
         k < row_ptr_[static_cast<std::size_t>(i) + 1]; ++k) {
      const double w = val_[static_cast<std::size_t>(k)];
      const double* xr = x.row(col_[static_cast<std::size_t>(k)]);
      for (std::int64_t j = 0; j < c; ++j) yr[j] += w * xr[j];
    }
  }
}

void SparseMatrix::spmm_t(const MatD& x, MatD& y) const {
  assert(x.rows() == n_ && y.rows() == n_ && y.cols() == x.cols());
  const std::int64_t c = x.cols();
  y.fill(0.0);
  for (std::int64_t i = 0; i < n_; ++i) {
    const double* xr = x.row(i);
    for (std::int64_t k = row_ptr_[static_cast<std::size_t>(i)];
         k < row_ptr_[static_cast<std::size_t>(i) + 1]; ++k) {
      const double w = val_[static_cast<std::size_t>(k)];
      double* yr = y.row(col_[static_cast<std::size_t>(k)]);
      for (std::int64_t j = 0; j < c; ++j) yr[j] += w * xr[j];
    }
  }
}

SparseMatrix SparseMatrix::permuted(const std::vector<std::int64_t>& perm) const {
  // perm maps old index -> new index
  assert(static_cast<std::int64_t>(perm.size()) == n_);
  std::vector<std::int64_t> rows, cols;
  std::vector<double> vals;
  rows.reserve(col_.size());
  cols.reserve(col_.size());
  vals.reserve(col_.size());
  for (std::int64_t i = 0; i < n_; ++i) {
    for (std::int64_t k = row_ptr_[static_cast<std::size_t>(i)];
         k < row_ptr_[static_cast<std::size_t>(i) + 1]; ++k) {
      rows.push_back(perm[static_cast<std::size_t>(i)]);
      cols.push_back(perm[static_cast<std::size_t>(col_[static_cast<std::size_t>(k)])]);
      vals.push_back(val_[static_cast<std::size_t>(k)]);
    }
  }
  return from_coo(n_, rows, cols, vals);
}

}  // namespace milkit
