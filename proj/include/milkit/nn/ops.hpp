#pragma once

#include <cmath>

namespace milkit::nn {

inline double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

/// log(1 + e^x) without overflow.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

/// Binary cross-entropy with logits for one example.
inline double bce_with_logits(double logit, double label) {
  return softplus(logit) - label * logit;
}

inline double gelu(double x) {
  return 0.5 * x * (1.0 + std::erf(x * 0.70710678118654752440));
}

inline double gelu_grad(double x) {
  constexpr double inv_sqrt_2pi = 0.39894228040143267794;
  const double cdf = 0.5 * (1.0 + std::erf(x * 0.70710678118654752440));
  return cdf + x * inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

}  // namespace milkit::nn
