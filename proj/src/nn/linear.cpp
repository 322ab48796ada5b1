#include "milkit/nn/linear.hpp"

#include <cassert>

#include "milkit/linalg.hpp"

namespace milkit::nn {

Linear::Linear(const std::string& name, std::int64_t in, std::int64_t out, Rng& rng)
    : w_(name + ".weight", {in, out}), b_(name + ".bias", {out}) {
  init_uniform(w_, in, rng);
  init_uniform(b_, in, rng);
}

MatD Linear::forward(const MatD& x) const {
  assert(x.cols() == w_.value.rows());
  MatD y = matmul(x, w_.value);
  const std::int64_t rows = y.rows();
  const std::int64_t out = y.cols();
  for (std::int64_t i = 0; i < rows; ++i) {
    axpy(out, 1.0, b_.value.data(), y.row(i));
  }
  return y;
}

MatD Linear::backward(const MatD& x, const MatD& dy) {
  matmul_tn_acc(x, dy, w_.grad);
  const std::int64_t rows = dy.rows();
  for (std::int64_t i = 0; i < rows; ++i)
    axpy(dy.cols(), 1.0, dy.row(i), b_.grad.data());
  return matmul_nt(dy, w_.value);
}

void Linear::collect(std::vector<Parameter*>& out) {
  out.push_back(&w_);
  out.push_back(&b_);
}

}  // namespace milkit::nn
