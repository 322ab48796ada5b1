#pragma once

#include <cstdint>
#include <string>

namespace milkit::kernels {

enum class Backend { scalar, avx2 };

/// Backend selected at startup: AVX2 when the CPU supports AVX2+FMA, unless
/// overridden by MILKIT_KERNELS=scalar|avx2.
Backend active_backend();
const char* backend_name(Backend b);

/// Force a backend (tests use this to compare variants). Throws if the
/// requested backend is not available on this machine.
void set_backend(Backend b);
bool avx2_supported();

/// Table of data-parallel primitives. Scalar variants are the reference
/// semantics; the AVX2 variants must agree within accumulation-order
/// rounding (equivalence-tested).
struct KernelTable {
  // y[i] += a * x[i]
  void (*axpy)(std::int64_t n, double a, const double* x, double* y);
  // x[i] *= a
  void (*scal)(std::int64_t n, double a, double* x);
  double (*dot)(std::int64_t n, const double* x, const double* y);
  double (*sum)(std::int64_t n, const double* x);
  // C(m,n) = A(m,k) * B(k,n), optionally accumulating into C
  void (*matmul_nn)(std::int64_t m, std::int64_t k, std::int64_t n,
                    const double* A, const double* B, double* C,
                    bool accumulate);
  // C(m,n) = A(k,m)^T * B(k,n)
  void (*matmul_tn)(std::int64_t m, std::int64_t k, std::int64_t n,
                    const double* A, const double* B, double* C,
                    bool accumulate);
  // C(m,n) = A(m,k) * B(n,k)^T
  void (*matmul_nt)(std::int64_t m, std::int64_t k, std::int64_t n,
                    const double* A, const double* B, double* C,
                    bool accumulate);
  void (*relu)(std::int64_t n, const double* x, double* y);
  // dx[i] += dy[i] * (x[i] > 0)
  void (*relu_grad)(std::int64_t n, const double* x, const double* dy,
                    double* dx);
  // Adam step with bias-corrected moments; c1 = 1 - beta1^t, c2 = 1 - beta2^t
  void (*adam_step)(std::int64_t n, double* p, const double* g, double* m,
                    double* v, double lr, double beta1, double beta2,
                    double eps, double c1, double c2);
};

const KernelTable& active();
const KernelTable& table_for(Backend b);

}  // namespace milkit::kernels
