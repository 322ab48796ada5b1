#pragma once

#include <string>
#include <vector>

#include "milkit/nn/parameter.hpp"
#include "milkit/sparse.hpp"

namespace milkit::nn {

/// Graph convolution H' = ReLU(Ahat H W), where Ahat is the caller-supplied
/// normalized adjacency (symmetric with self loops for the usual variant).
class GraphConv {
 public:
  GraphConv() = default;
  GraphConv(const std::string& name, std::int64_t in_dim, std::int64_t out_dim,
            Rng& rng);

  struct Ctx {
    MatD ah;   // Ahat * H
    MatD pre;  // Ahat * H * W, pre-activation
  };

  MatD forward(const MatD& h, const SparseMatrix& ahat, Ctx& ctx) const;
  /// Accumulates dW; returns dh. `ahat` must be symmetric.
  MatD backward(const MatD& h, const SparseMatrix& ahat, const Ctx& ctx,
                const MatD& dy);

  void collect(std::vector<Parameter*>& out);
  std::int64_t in_dim() const { return w_.value.rows(); }
  std::int64_t out_dim() const { return w_.value.cols(); }

 private:
  Parameter w_;
};

}  // namespace milkit::nn
