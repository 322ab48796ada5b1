#pragma once

#include <cassert>

#include "milkit/array.hpp"
#include "milkit/kernels/kernels.hpp"

namespace milkit {

// Thin Array<double> wrappers over the dispatched kernels.

inline MatD matmul(const MatD& a, const MatD& b) {
  assert(a.cols() == b.rows());
  MatD c({a.rows(), b.cols()});
  kernels::active().matmul_nn(a.rows(), a.cols(), b.cols(), a.data(), b.data(),
                              c.data(), false);
  return c;
}

/// a^T * b where a is (k x m), b is (k x n).
inline MatD matmul_tn(const MatD& a, const MatD& b) {
  assert(a.rows() == b.rows());
  MatD c({a.cols(), b.cols()});
  kernels::active().matmul_tn(a.cols(), a.rows(), b.cols(), a.data(), b.data(),
                              c.data(), false);
  return c;
}

/// a * b^T where a is (m x k), b is (n x k).
inline MatD matmul_nt(const MatD& a, const MatD& b) {
  assert(a.cols() == b.cols());
  MatD c({a.rows(), b.rows()});
  kernels::active().matmul_nt(a.rows(), a.cols(), b.rows(), a.data(), b.data(),
                              c.data(), false);
  return c;
}

inline void matmul_nn_acc(const MatD& a, const MatD& b, MatD& c) {
  assert(a.cols() == b.rows() && c.rows() == a.rows() && c.cols() == b.cols());
  kernels::active().matmul_nn(a.rows(), a.cols(), b.cols(), a.data(), b.data(),
                              c.data(), true);
}

inline void matmul_tn_acc(const MatD& a, const MatD& b, MatD& c) {
  assert(a.rows() == b.rows() && c.rows() == a.cols() && c.cols() == b.cols());
  kernels::active().matmul_tn(a.cols(), a.rows(), b.cols(), a.data(), b.data(),
                              c.data(), true);
}

inline void matmul_nt_acc(const MatD& a, const MatD& b, MatD& c) {
  assert(a.cols() == b.cols() && c.rows() == a.rows() && c.cols() == b.rows());
  kernels::active().matmul_nt(a.rows(), a.cols(), b.rows(), a.data(), b.data(),
                              c.data(), true);
}

inline double dot(std::int64_t n, const double* x, const double* y) {
  return kernels::active().dot(n, x, y);
}

inline void axpy(std::int64_t n, double a, const double* x, double* y) {
  kernels::active().axpy(n, a, x, y);
}

}  // namespace milkit
