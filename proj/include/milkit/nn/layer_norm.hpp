#pragma once

#include <string>
#include <vector>

#include "milkit/nn/parameter.hpp"

namespace milkit::nn {

/// Per-row layer normalization with learned gain/bias.
class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(const std::string& name, std::int64_t dim);

  struct Ctx {
    MatD xn;                   // normalized rows before gain/bias
    std::vector<double> rstd;  // 1 / sqrt(var + eps) per row
  };

  MatD forward(const MatD& x, Ctx& ctx) const;
  MatD backward(const Ctx& ctx, const MatD& dy);

  void collect(std::vector<Parameter*>& out);

  static constexpr double kEps = 1e-5;

 private:
  Parameter gamma_, beta_;
};

}  // namespace milkit::nn
