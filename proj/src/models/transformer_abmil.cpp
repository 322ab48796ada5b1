#include "milkit/errors.hpp"
#include "milkit/models/detail.hpp"

namespace milkit::models {

struct TransformerABMIL::Ctx : MILModel::GradContext {
  MatD x0;                                  // (B * Nmax) x D upcast input
  MatD e0;                                  // embedded
  std::vector<MatD> layer_in;               // input to each encoder layer
  std::vector<nn::EncoderLayer::Ctx> layer_ctx;
  MatD encoded;                             // final encoder output
  struct PerBag {
    MatD h;         // real rows of encoded
    MatD smoothed;  // feature-attachment Sm output
    std::vector<double> e_raw;
    nn::AttentionPool::Ctx pool;
    MatD z;
    SparseMatrix abar;
  };
  std::vector<PerBag> bags;
};

TransformerABMIL::TransformerABMIL(ModelConfig config, Rng& rng)
    : MILModel(std::move(config)),
      embed_("embed", config_.in_dim, *config_.embed_dim, rng) {
  const std::int64_t width = *config_.embed_dim;
  const std::int64_t mlp_width = 2 * width;
  for (std::int64_t i = 0; i < *config_.n_encoder_layers; ++i) {
    layers_.emplace_back("encoder" + std::to_string(i), width, *config_.n_heads,
                         mlp_width, rng);
  }
  pool_ = nn::AttentionPool("attention", width, *config_.attention_width,
                            *config_.gated, rng);
  cls_ = nn::Linear("classifier", width, 1, rng);
}

MILModel::RunOutput TransformerABMIL::run(const Batch& batch,
                                          std::unique_ptr<GradContext>* ctx_out) {
  check_batch(batch);
  const std::int64_t b_count = batch.batch_size();
  const std::int64_t n_max = batch.max_instances();
  const std::int64_t d = batch.feature_dim();
  const bool use_sm = config_.sm.has_value();

  auto ctx = std::make_unique<Ctx>();
  ctx->x0 = MatD({b_count * n_max, d});
  for (std::int64_t b = 0; b < b_count; ++b) {
    for (std::int64_t i = 0; i < batch.sizes[static_cast<std::size_t>(b)]; ++i) {
      double* row = ctx->x0.row(b * n_max + i);
      for (std::int64_t j = 0; j < d; ++j)
        row[j] = static_cast<double>(batch.features(b, i, j));
    }
  }
  ctx->e0 = embed_.forward(ctx->x0);
  ctx->layer_ctx.resize(layers_.size());
  MatD h = ctx->e0;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    ctx->layer_in.push_back(h);
    h = layers_[l].forward(h, b_count, n_max, batch.mask, ctx->layer_ctx[l]);
  }
  ctx->encoded = std::move(h);

  RunOutput out;
  out.logits.resize(static_cast<std::size_t>(b_count));
  out.attention = MatD({b_count, n_max});
  out.instance_scores = MatD({b_count, n_max});
  ctx->bags.resize(static_cast<std::size_t>(b_count));
  const std::int64_t width = *config_.embed_dim;

  for (std::int64_t b = 0; b < b_count; ++b) {
    Ctx::PerBag& pb = ctx->bags[static_cast<std::size_t>(b)];
    const std::int64_t n = batch.sizes[static_cast<std::size_t>(b)];
    pb.h = MatD({n, width});
    for (std::int64_t i = 0; i < n; ++i) {
      const double* src = ctx->encoded.row(b * n_max + i);
      double* dst = pb.h.row(i);
      for (std::int64_t j = 0; j < width; ++j) dst[j] = src[j];
    }

    const MatD* hp = &pb.h;
    if (use_sm) {
      pb.abar = sm_abar(batch, b, config_.model_name);
      if (config_.sm->attachment == SmAttachment::features) {
        pb.smoothed =
            nn::sm_apply(pb.h, pb.abar, {config_.sm->alpha, config_.sm->steps});
        hp = &pb.smoothed;
      }
    }

    pb.e_raw = pool_.forward_logits(*hp, pb.pool);
    std::vector<double> e = pb.e_raw;
    if (use_sm && config_.sm->attachment == SmAttachment::attention_logits) {
      MatD f({n, 1}, std::vector<double>(e));
      const MatD g = nn::sm_apply(f, pb.abar, {config_.sm->alpha, config_.sm->steps});
      e.assign(g.vec().begin(), g.vec().end());
    }
    const std::vector<std::uint8_t> live(static_cast<std::size_t>(n), 1);
    const std::vector<double> z = pool_.forward_pool(*hp, e, live, pb.pool);
    pb.z = MatD({1, width}, std::vector<double>(z));
    out.logits[static_cast<std::size_t>(b)] = cls_.forward(pb.z)(0, 0);
    for (std::int64_t i = 0; i < n; ++i) {
      out.attention(b, i) = pb.pool.attn[static_cast<std::size_t>(i)];
      out.instance_scores(b, i) = pb.pool.attn[static_cast<std::size_t>(i)];
    }
  }
  if (ctx_out) *ctx_out = std::move(ctx);
  return out;
}

void TransformerABMIL::backprop(const Batch& batch, GradContext& ctx_in,
                                const std::vector<double>& dlogits) {
  auto& ctx = static_cast<Ctx&>(ctx_in);
  const std::int64_t b_count = batch.batch_size();
  const std::int64_t n_max = batch.max_instances();
  const std::int64_t width = *config_.embed_dim;
  const bool use_sm = config_.sm.has_value();

  MatD dencoded({b_count * n_max, width});
  for (std::int64_t b = 0; b < b_count; ++b) {
    Ctx::PerBag& pb = ctx.bags[static_cast<std::size_t>(b)];
    const std::int64_t n = pb.h.rows();
    MatD dlogit({1, 1});
    dlogit(0, 0) = dlogits[static_cast<std::size_t>(b)];
    const MatD dz = cls_.backward(pb.z, dlogit);

    const bool smooth_features =
        use_sm && config_.sm->attachment == SmAttachment::features;
    const MatD& h = smooth_features ? pb.smoothed : pb.h;
    MatD dh({n, width});
    const std::vector<std::uint8_t> live(static_cast<std::size_t>(n), 1);
    std::vector<double> de =
        pool_.backward_pool(h, std::vector<double>(dz.vec()), live, pb.pool, dh);
    if (use_sm && config_.sm->attachment == SmAttachment::attention_logits) {
      MatD dg({n, 1}, std::vector<double>(de));
      const MatD df =
          nn::sm_backward(dg, pb.abar, {config_.sm->alpha, config_.sm->steps});
      de.assign(df.vec().begin(), df.vec().end());
    }
    pool_.backward_logits(h, de, pb.pool, dh);
    if (smooth_features) {
      dh = nn::sm_backward(dh, pb.abar, {config_.sm->alpha, config_.sm->steps});
    }
    for (std::int64_t i = 0; i < n; ++i) {
      double* dst = dencoded.row(b * n_max + i);
      const double* src = dh.row(i);
      for (std::int64_t j = 0; j < width; ++j) dst[j] += src[j];
    }
  }

  MatD grad = std::move(dencoded);
  for (std::size_t l = layers_.size(); l-- > 0;) {
    grad = layers_[l].backward(ctx.layer_in[l], b_count, n_max, batch.mask,
                               ctx.layer_ctx[l], grad);
  }
  embed_.backward(ctx.x0, grad);
}

void TransformerABMIL::collect(std::vector<nn::Parameter*>& out) {
  embed_.collect(out);
  for (auto& layer : layers_) layer.collect(out);
  pool_.collect(out);
  cls_.collect(out);
}

}  // namespace milkit::models
