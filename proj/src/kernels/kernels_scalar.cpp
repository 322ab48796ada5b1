#include <cmath>
#include <cstring>

#include "milkit/kernels/kernels.hpp"

// Reference kernels. Plain loops, one accumulator, fixed iteration order.
// These define the semantics the SIMD variants are tested against.

namespace milkit::kernels::scalar {

void axpy(std::int64_t n, double a, const double* x, double* y) {
  for (std::int64_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scal(std::int64_t n, double a, double* x) {
  for (std::int64_t i = 0; i < n; ++i) x[i] *= a;
}

double dot(std::int64_t n, const double* x, const double* y) {
  double acc = 0.0;
  for (std::int64_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double sum(std::int64_t n, const double* x) {
  double acc = 0.0;
  for (std::int64_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

// Row-major saxpy-style product: walks B row-wise so the inner loop is
// contiguous in both B and C.
void matmul_nn(std::int64_t m, std::int64_t k, std::int64_t n, const double* A,
               const double* B, double* C, bool accumulate) {
  if (!accumulate) std::memset(C, 0, sizeof(double) * static_cast<std::size_t>(m * n));
  for (std::int64_t i = 0; i < m; ++i) {
    double* c = C + i * n;
    const double* a = A + i * k;
    for (std::int64_t p = 0; p < k; ++p) {
      const double ap = a[p];
      const double* b = B + p * n;
      for (std::int64_t j = 0; j < n; ++j) c[j] += ap * b[j];
    }
  }
}

void matmul_tn(std::int64_t m, std::int64_t k, std::int64_t n, const double* A,
               const double* B, double* C, bool accumulate) {
  if (!accumulate) std::memset(C, 0, sizeof(double) * static_cast<std::size_t>(m * n));
  for (std::int64_t p = 0; p < k; ++p) {
    const double* a = A + p * m;
    const double* b = B + p * n;
    for (std::int64_t i = 0; i < m; ++i) {
      const double ai = a[i];
      double* c = C + i * n;
      for (std::int64_t j = 0; j < n; ++j) c[j] += ai * b[j];
    }
  }
}

void matmul_nt(std::int64_t m, std::int64_t k, std::int64_t n, const double* A,
               const double* B, double* C, bool accumulate) {
  for (std::int64_t i = 0; i < m; ++i) {
    const double* a = A + i * k;
    double* c = C + i * n;
    for (std::int64_t j = 0; j < n; ++j) {
      double acc = 0.0;
      const double* b = B + j * k;
      for (std::int64_t p = 0; p < k; ++p) acc += a[p] * b[p];
      c[j] = accumulate ? c[j] + acc : acc;
    }
  }
}

void relu(std::int64_t n, const double* x, double* y) {
  for (std::int64_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_grad(std::int64_t n, const double* x, const double* dy, double* dx) {
  for (std::int64_t i = 0; i < n; ++i) {
    if (x[i] > 0.0) dx[i] += dy[i];
  }
}

void adam_step(std::int64_t n, double* p, const double* g, double* m,
               double* v, double lr, double beta1, double beta2, double eps,
               double c1, double c2) {
  for (std::int64_t i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    const double mhat = m[i] / c1;
    const double vhat = v[i] / c2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

extern const KernelTable kTable;
const KernelTable kTable = {
    axpy, scal, dot, sum, matmul_nn, matmul_tn, matmul_nt, relu, relu_grad,
    adam_step,
};

}  // namespace milkit::kernels::scalar
