#pragma once

#include <cstdint>

#include "milkit/array.hpp"
#include "milkit/sparse.hpp"

namespace milkit::nn {

/// Sm smoothing operator settings: alpha-damped fixed-point iteration
///   g_0 = f,  g_{t+1} = (1 - alpha) f + alpha Abar g_t,  returns g_T
/// with Abar the row-normalized adjacency. Each step is a convex
/// combination, so outputs stay within the per-column range of f whenever
/// no node is isolated.
struct SmParams {
  double alpha = 0.5;
  std::int64_t steps = 10;
};

/// `abar` must be the row-normalized adjacency (degree-zero rows all zero).
MatD sm_apply(const MatD& f, const SparseMatrix& abar, const SmParams& params);

/// Pullback of sm_apply (the operator is linear in f).
MatD sm_backward(const MatD& dg, const SparseMatrix& abar, const SmParams& params);

}  // namespace milkit::nn
