#pragma once

#include <string>
#include <vector>

#include "milkit/nn/parameter.hpp"

namespace milkit::nn {

/// Attention pooling over one bag: e_i = w . tanh(V h_i), gated variant
/// e_i = w . (tanh(V h_i) * sigmoid(U h_i)); a = masked softmax of e;
/// z = sum_i a_i h_i.
///
/// The logit and pooling stages are exposed separately so a smoothing
/// operator can be inserted between them.
class AttentionPool {
 public:
  AttentionPool() = default;
  AttentionPool(const std::string& name, std::int64_t in_dim,
                std::int64_t attention_width, bool gated, Rng& rng);

  struct Ctx {
    MatD t;                    // tanh(H V^T), N x L
    MatD u;                    // sigmoid(H U^T), N x L (gated only)
    std::vector<double> attn;  // a, zero at masked rows
  };

  /// Raw attention logits e, one per row of h (padded rows yield values that
  /// the pooling stage ignores through the mask).
  std::vector<double> forward_logits(const MatD& h, Ctx& ctx) const;

  /// Softmax of e over unmasked rows, then z = sum a_i h_i.
  std::vector<double> forward_pool(const MatD& h, const std::vector<double>& e,
                                   const std::vector<std::uint8_t>& mask,
                                   Ctx& ctx) const;

  /// Backward of the pooling stage: returns de and accumulates dh (a-weighted
  /// part). `dattn` may be empty when no loss flows through the weights.
  std::vector<double> backward_pool(const MatD& h, const std::vector<double>& dz,
                                    const std::vector<std::uint8_t>& mask,
                                    const Ctx& ctx, MatD& dh) const;

  /// Backward of the logit stage: accumulates dV/dw/dU and dh.
  void backward_logits(const MatD& h, const std::vector<double>& de,
                       const Ctx& ctx, MatD& dh);

  void collect(std::vector<Parameter*>& out);
  bool gated() const { return gated_; }
  std::int64_t in_dim() const { return v_.value.cols(); }

 private:
  Parameter v_;  // L x D
  Parameter w_;  // L
  Parameter u_;  // L x D, gated only
  bool gated_ = false;
};

}  // namespace milkit::nn
