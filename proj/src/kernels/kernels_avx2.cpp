// AVX2+FMA variants of the reference kernels. Only compiled on x86_64; the
// dispatcher selects them at runtime after a cpuid check. Accumulation uses
// 4-lane partial sums, so reductions may differ from the scalar reference by
// reassociation rounding only.

#include "milkit/kernels/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>
#include <cstring>

namespace milkit::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

}  // namespace

void axpy(std::int64_t n, double a, const double* x, double* y) {
  const __m256d va = _mm256_set1_pd(a);
  std::int64_t i = 0;
  for (; i + 3 < n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    __m256d vx = _mm256_loadu_pd(x + i);
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, vx, vy));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void scal(std::int64_t n, double a, double* x) {
  const __m256d va = _mm256_set1_pd(a);
  std::int64_t i = 0;
  for (; i + 3 < n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) x[i] *= a;
}

double dot(std::int64_t n, const double* x, const double* y) {
  __m256d acc = _mm256_setzero_pd();
  std::int64_t i = 0;
  for (; i + 3 < n; i += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

double sum(std::int64_t n, const double* x) {
  __m256d acc = _mm256_setzero_pd();
  std::int64_t i = 0;
  for (; i + 3 < n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

namespace {

// c[0..n) += ap * b[0..n), the shared inner step of nn/tn products
inline void fma_row(std::int64_t n, double ap, const double* b, double* c) {
  const __m256d va = _mm256_set1_pd(ap);
  std::int64_t j = 0;
  for (; j + 3 < n; j += 4) {
    __m256d vc = _mm256_loadu_pd(c + j);
    _mm256_storeu_pd(c + j, _mm256_fmadd_pd(va, _mm256_loadu_pd(b + j), vc));
  }
  for (; j < n; ++j) c[j] += ap * b[j];
}

}  // namespace

void matmul_nn(std::int64_t m, std::int64_t k, std::int64_t n, const double* A,
               const double* B, double* C, bool accumulate) {
  if (!accumulate) std::memset(C, 0, sizeof(double) * static_cast<std::size_t>(m * n));
  for (std::int64_t i = 0; i < m; ++i) {
    const double* a = A + i * k;
    double* c = C + i * n;
    for (std::int64_t p = 0; p < k; ++p) fma_row(n, a[p], B + p * n, c);
  }
}

void matmul_tn(std::int64_t m, std::int64_t k, std::int64_t n, const double* A,
               const double* B, double* C, bool accumulate) {
  if (!accumulate) std::memset(C, 0, sizeof(double) * static_cast<std::size_t>(m * n));
  for (std::int64_t p = 0; p < k; ++p) {
    const double* a = A + p * m;
    const double* b = B + p * n;
    for (std::int64_t i = 0; i < m; ++i) fma_row(n, a[i], b, C + i * n);
  }
}

void matmul_nt(std::int64_t m, std::int64_t k, std::int64_t n, const double* A,
               const double* B, double* C, bool accumulate) {
  for (std::int64_t i = 0; i < m; ++i) {
    const double* a = A + i * k;
    double* c = C + i * n;
    for (std::int64_t j = 0; j < n; ++j) {
      const double d = dot(k, a, B + j * k);
      c[j] = accumulate ? c[j] + d : d;
    }
  }
}

void relu(std::int64_t n, const double* x, double* y) {
  const __m256d zero = _mm256_setzero_pd();
  std::int64_t i = 0;
  for (; i + 3 < n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_max_pd(zero, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_grad(std::int64_t n, const double* x, const double* dy, double* dx) {
  const __m256d zero = _mm256_setzero_pd();
  std::int64_t i = 0;
  for (; i + 3 < n; i += 4) {
    const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
    const __m256d contrib = _mm256_and_pd(mask, _mm256_loadu_pd(dy + i));
    _mm256_storeu_pd(dx + i, _mm256_add_pd(_mm256_loadu_pd(dx + i), contrib));
  }
  for (; i < n; ++i) {
    if (x[i] > 0.0) dx[i] += dy[i];
  }
}

void adam_step(std::int64_t n, double* p, const double* g, double* m,
               double* v, double lr, double beta1, double beta2, double eps,
               double c1, double c2) {
  const __m256d vb1 = _mm256_set1_pd(beta1);
  const __m256d vb2 = _mm256_set1_pd(beta2);
  const __m256d v1mb1 = _mm256_set1_pd(1.0 - beta1);
  const __m256d v1mb2 = _mm256_set1_pd(1.0 - beta2);
  const __m256d vlr = _mm256_set1_pd(lr);
  const __m256d veps = _mm256_set1_pd(eps);
  const __m256d vc1 = _mm256_set1_pd(c1);
  const __m256d vc2 = _mm256_set1_pd(c2);
  std::int64_t i = 0;
  for (; i + 3 < n; i += 4) {
    const __m256d vg = _mm256_loadu_pd(g + i);
    __m256d vm = _mm256_loadu_pd(m + i);
    __m256d vv = _mm256_loadu_pd(v + i);
    vm = _mm256_add_pd(_mm256_mul_pd(vb1, vm), _mm256_mul_pd(v1mb1, vg));
    vv = _mm256_add_pd(_mm256_mul_pd(vb2, vv),
                       _mm256_mul_pd(v1mb2, _mm256_mul_pd(vg, vg)));
    _mm256_storeu_pd(m + i, vm);
    _mm256_storeu_pd(v + i, vv);
    const __m256d mhat = _mm256_div_pd(vm, vc1);
    const __m256d vhat = _mm256_div_pd(vv, vc2);
    const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), veps);
    const __m256d step = _mm256_div_pd(_mm256_mul_pd(vlr, mhat), denom);
    _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), step));
  }
  for (; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
  }
}

extern const KernelTable kTable;
const KernelTable kTable = {
    axpy, scal, dot, sum, matmul_nn, matmul_tn, matmul_nt, relu, relu_grad,
    adam_step,
};

}  // namespace milkit::kernels::avx2

#endif  // x86_64
