#pragma once

#include <string>
#include <vector>

#include "milkit/nn/layer_norm.hpp"
#include "milkit/nn/linear.hpp"

namespace milkit::nn {

/// Pre-norm transformer encoder layer for padded bag batches:
///   x = x + MHSA(LN1(x))   with additive -1e9 bias on padded keys
///   x = x + MLP(LN2(x))    two layers, GELU
/// No positional encoding; bags are unordered sets, so the layer is
/// permutation equivariant. Hidden states are flattened (B * Nmax) x D with
/// bag b occupying rows [b * Nmax, (b + 1) * Nmax). Padded output rows are
/// zeroed.
class EncoderLayer {
 public:
  EncoderLayer() = default;
  EncoderLayer(const std::string& name, std::int64_t width, std::int64_t n_heads,
               std::int64_t mlp_width, Rng& rng);

  struct Ctx {
    LayerNorm::Ctx ln1c, ln2c;
    MatD xn, q, k, v;
    std::vector<MatD> attn;  // per (bag, head), Nmax x Nmax
    MatD co;                 // concatenated head outputs
    MatD x2, x2n, h1pre, h1;
  };

  MatD forward(const MatD& x, std::int64_t n_bags, std::int64_t n_max,
               const Array<std::uint8_t>& mask, Ctx& ctx) const;

  MatD backward(const MatD& x, std::int64_t n_bags, std::int64_t n_max,
                const Array<std::uint8_t>& mask, const Ctx& ctx, const MatD& dy);

  void collect(std::vector<Parameter*>& out);

  std::int64_t width() const { return wq_.in_dim(); }
  std::int64_t n_heads() const { return n_heads_; }

  static constexpr double kMaskBias = -1e9;

 private:
  LayerNorm ln1_, ln2_;
  Linear wq_, wk_, wv_, wo_, mlp1_, mlp2_;
  std::int64_t n_heads_ = 1;
};

}  // namespace milkit::nn
