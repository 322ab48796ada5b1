#include "milkit/nn/masked_softmax.hpp"

#include <cassert>
#include <cmath>
#include <limits>

#include "milkit/errors.hpp"

namespace milkit::nn {

MatD masked_softmax(const MatD& logits, const Array<std::uint8_t>& mask) {
  assert(logits.ndim() == 2 && mask.ndim() == 2);
  assert(logits.rows() == mask.dim(0) && logits.cols() == mask.dim(1));
  const std::int64_t rows = logits.rows();
  const std::int64_t n = logits.cols();
  MatD out({rows, n});
  for (std::int64_t i = 0; i < rows; ++i) {
    const double* lr = logits.row(i);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::int64_t j = 0; j < n; ++j) {
      if (mask(i, j) && lr[j] > mx) mx = lr[j];
    }
    if (mx == -std::numeric_limits<double>::infinity())
      throw Error("empty bag in softmax");
    double denom = 0.0;
    double* orow = out.row(i);
    for (std::int64_t j = 0; j < n; ++j) {
      if (mask(i, j)) {
        orow[j] = std::exp(lr[j] - mx);
        denom += orow[j];
      } else {
        orow[j] = 0.0;
      }
    }
    for (std::int64_t j = 0; j < n; ++j) {
      if (mask(i, j)) orow[j] /= denom;
    }
  }
  return out;
}

MatD masked_softmax_backward(const MatD& y, const MatD& dy,
                             const Array<std::uint8_t>& mask) {
  const std::int64_t rows = y.rows();
  const std::int64_t n = y.cols();
  MatD dx({rows, n});
  for (std::int64_t i = 0; i < rows; ++i) {
    const double* yr = y.row(i);
    const double* dyr = dy.row(i);
    double inner = 0.0;
    for (std::int64_t j = 0; j < n; ++j) {
      if (mask(i, j)) inner += yr[j] * dyr[j];
    }
    double* dxr = dx.row(i);
    for (std::int64_t j = 0; j < n; ++j) {
      dxr[j] = mask(i, j) ? yr[j] * (dyr[j] - inner) : 0.0;
    }
  }
  return dx;
}

}  // namespace milkit::nn
