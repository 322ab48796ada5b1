#pragma once

#include <cstdint>
#include <vector>

#include "milkit/array.hpp"

namespace milkit {

/// Sparse N x N instance graph in CSR form. Entries are kept sorted by
/// (row, col); bagdata-level adjacencies are symmetric with a zero diagonal,
/// normalized variants (row-stochastic, symmetric self-loop) relax that.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  explicit SparseMatrix(std::int64_t n) : n_(n), row_ptr_(static_cast<std::size_t>(n) + 1, 0) {}

  /// Build from COO triplets; duplicates are summed, entries sorted.
  static SparseMatrix from_coo(std::int64_t n,
                               const std::vector<std::int64_t>& rows,
                               const std::vector<std::int64_t>& cols,
                               const std::vector<double>& vals);

  std::int64_t size() const { return n_; }
  std::int64_t nnz() const { return static_cast<std::int64_t>(col_.size()); }

  const std::vector<std::int64_t>& row_ptr() const { return row_ptr_; }
  const std::vector<std::int64_t>& col_idx() const { return col_; }
  const std::vector<double>& values() const { return val_; }
  std::vector<double>& values() { return val_; }

  bool is_symmetric() const;
  bool has_zero_diagonal() const;
  double min_value() const;

  /// Out-degree (weighted row sums).
  std::vector<double> degrees() const;

  /// y = this * x, x and y dense (n x c) row-major. Accumulation order is
  /// CSR order, deterministic.
  void spmm(const MatD& x, MatD& y) const;
  /// y = this^T * x.
  void spmm_t(const MatD& x, MatD& y) const;

  SparseMatrix permuted(const std::vector<std::int64_t>& perm) const;

  bool operator==(const SparseMatrix& o) const {
    return n_ == o.n_ && row_ptr_ == o.row_ptr_ && col_ == o.col_ && val_ == o.val_;
  }

 private:
  std::int64_t n_ = 0;
  std::vector<std::int64_t> row_ptr_;
  std::vector<std::int64_t> col_;
  std::vector<double> val_;
};

}  // namespace milkit
