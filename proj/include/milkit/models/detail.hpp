#pragma once

#include "milkit/models/model.hpp"
#include "milkit/nn/attention_pool.hpp"
#include "milkit/nn/encoder_layer.hpp"
#include "milkit/nn/graph_conv.hpp"
#include "milkit/nn/linear.hpp"

namespace milkit::models {

/// MeanPoolMIL / MaxPoolMIL: linear instance embedding, per-instance linear
/// classifier logits s_i, bag logit = mean(s) or max(s). Instance scores are
/// the s_i; the reported attention is the truthful pooling attribution
/// (uniform for mean, one-hot at the argmax for max).
class PoolMIL final : public MILModel {
 public:
  PoolMIL(ModelConfig config, bool is_max, Rng& rng);

 protected:
  RunOutput run(const Batch& batch, std::unique_ptr<GradContext>* ctx) override;
  void backprop(const Batch& batch, GradContext& ctx,
                const std::vector<double>& dlogits) override;
  void collect(std::vector<nn::Parameter*>& out) override;

 private:
  struct Ctx;
  nn::Linear embed_, cls_;
  bool is_max_;
};

/// ABMIL: linear embedding + ReLU, attention pooling, linear classifier.
/// With config.sm set (SmABMIL) the Sm operator smooths either the attention
/// logits (default) or the embedded features over the bag graph.
class ABMIL final : public MILModel {
 public:
  ABMIL(ModelConfig config, Rng& rng);

 protected:
  RunOutput run(const Batch& batch, std::unique_ptr<GradContext>* ctx) override;
  void backprop(const Batch& batch, GradContext& ctx,
                const std::vector<double>& dlogits) override;
  void collect(std::vector<nn::Parameter*>& out) override;

 private:
  struct Ctx;
  nn::Linear embed_;
  nn::AttentionPool pool_;
  nn::Linear cls_;
};

/// TransformerABMIL: linear embedding, masked pre-norm encoder stack,
/// attention pooling, linear classifier. SmTransformerABMIL adds the Sm
/// operator at the same attachment points as SmABMIL.
class TransformerABMIL final : public MILModel {
 public:
  TransformerABMIL(ModelConfig config, Rng& rng);

 protected:
  RunOutput run(const Batch& batch, std::unique_ptr<GradContext>* ctx) override;
  void backprop(const Batch& batch, GradContext& ctx,
                const std::vector<double>& dlogits) override;
  void collect(std::vector<nn::Parameter*>& out) override;

 private:
  struct Ctx;
  nn::Linear embed_;
  std::vector<nn::EncoderLayer> layers_;
  nn::AttentionPool pool_;
  nn::Linear cls_;
};

/// GraphABMIL: stacked graph convolutions over the bag graph, attention
/// pooling, linear classifier.
class GraphABMIL final : public MILModel {
 public:
  GraphABMIL(ModelConfig config, Rng& rng);

 protected:
  RunOutput run(const Batch& batch, std::unique_ptr<GradContext>* ctx) override;
  void backprop(const Batch& batch, GradContext& ctx,
                const std::vector<double>& dlogits) override;
  void collect(std::vector<nn::Parameter*>& out) override;

 private:
  struct Ctx;
  std::vector<nn::GraphConv> convs_;
  nn::AttentionPool pool_;
  nn::Linear cls_;
};

/// Row-normalized bag adjacency for the Sm operator; throws when the batch
/// carries no adjacency.
SparseMatrix sm_abar(const Batch& batch, std::int64_t b, const std::string& model);

}  // namespace milkit::models
