#pragma once

#include <string>
#include <vector>

#include "milkit/nn/parameter.hpp"

namespace milkit::nn {

/// y = x W + b with W of shape (in, out).
class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, std::int64_t in, std::int64_t out, Rng& rng);

  MatD forward(const MatD& x) const;
  /// Accumulates dW/db; returns dx.
  MatD backward(const MatD& x, const MatD& dy);

  void collect(std::vector<Parameter*>& out);
  std::int64_t in_dim() const { return w_.value.rows(); }
  std::int64_t out_dim() const { return w_.value.cols(); }
  const Parameter& weight() const { return w_; }
  const Parameter& bias() const { return b_; }

 private:
  Parameter w_, b_;
};

}  // namespace milkit::nn
