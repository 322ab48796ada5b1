#include "milkit/errors.hpp"
#include "milkit/kernels/kernels.hpp"
#include "milkit/models/detail.hpp"

namespace milkit::models {

struct ABMIL::Ctx : MILModel::GradContext {
  struct PerBag {
    MatD x;        // N x D
    MatD pre;      // N x E, pre-ReLU
    MatD emb;      // N x E (after ReLU, before optional feature smoothing)
    MatD smoothed; // N x E when sm attaches to features
    std::vector<double> e_raw;  // attention logits before smoothing
    nn::AttentionPool::Ctx pool;
    MatD z;  // 1 x E
    SparseMatrix abar;
    bool has_abar = false;
  };
  std::vector<PerBag> bags;
};

ABMIL::ABMIL(ModelConfig config, Rng& rng)
    : MILModel(std::move(config)),
      embed_("embed", config_.in_dim, *config_.embed_dim, rng),
      pool_("attention", *config_.embed_dim, *config_.attention_width,
            *config_.gated, rng),
      cls_("classifier", *config_.embed_dim, 1, rng) {}

MILModel::RunOutput ABMIL::run(const Batch& batch,
                               std::unique_ptr<GradContext>* ctx_out) {
  check_batch(batch);
  const std::int64_t b_count = batch.batch_size();
  const std::int64_t n_max = batch.max_instances();
  const bool use_sm = config_.sm.has_value();
  RunOutput out;
  out.logits.resize(static_cast<std::size_t>(b_count));
  out.attention = MatD({b_count, n_max});
  out.instance_scores = MatD({b_count, n_max});
  auto ctx = std::make_unique<Ctx>();
  ctx->bags.resize(static_cast<std::size_t>(b_count));

  for (std::int64_t b = 0; b < b_count; ++b) {
    Ctx::PerBag& pb = ctx->bags[static_cast<std::size_t>(b)];
    const std::int64_t n = batch.sizes[static_cast<std::size_t>(b)];
    pb.x = bag_features(batch, b);
    pb.pre = embed_.forward(pb.x);
    pb.emb = pb.pre;
    kernels::active().relu(pb.pre.numel(), pb.pre.data(), pb.emb.data());

    const MatD* h = &pb.emb;
    if (use_sm) {
      pb.abar = sm_abar(batch, b, config_.model_name);
      pb.has_abar = true;
      if (config_.sm->attachment == SmAttachment::features) {
        pb.smoothed = nn::sm_apply(pb.emb, pb.abar,
                                   {config_.sm->alpha, config_.sm->steps});
        h = &pb.smoothed;
      }
    }

    pb.e_raw = pool_.forward_logits(*h, pb.pool);
    std::vector<double> e = pb.e_raw;
    if (use_sm && config_.sm->attachment == SmAttachment::attention_logits) {
      MatD f({n, 1}, std::vector<double>(e));
      const MatD g = nn::sm_apply(f, pb.abar, {config_.sm->alpha, config_.sm->steps});
      e.assign(g.vec().begin(), g.vec().end());
    }
    const std::vector<std::uint8_t> live(static_cast<std::size_t>(n), 1);
    const std::vector<double> z = pool_.forward_pool(*h, e, live, pb.pool);
    pb.z = MatD({1, static_cast<std::int64_t>(z.size())}, std::vector<double>(z));
    out.logits[static_cast<std::size_t>(b)] = cls_.forward(pb.z)(0, 0);
    for (std::int64_t i = 0; i < n; ++i) {
      out.attention(b, i) = pb.pool.attn[static_cast<std::size_t>(i)];
      out.instance_scores(b, i) = pb.pool.attn[static_cast<std::size_t>(i)];
    }
  }
  if (ctx_out) *ctx_out = std::move(ctx);
  return out;
}

void ABMIL::backprop(const Batch& batch, GradContext& ctx_in,
                     const std::vector<double>& dlogits) {
  auto& ctx = static_cast<Ctx&>(ctx_in);
  const bool use_sm = config_.sm.has_value();
  for (std::int64_t b = 0; b < batch.batch_size(); ++b) {
    Ctx::PerBag& pb = ctx.bags[static_cast<std::size_t>(b)];
    const std::int64_t n = pb.x.rows();
    MatD dlogit({1, 1});
    dlogit(0, 0) = dlogits[static_cast<std::size_t>(b)];
    const MatD dz = cls_.backward(pb.z, dlogit);

    const bool smooth_features =
        use_sm && config_.sm->attachment == SmAttachment::features;
    const MatD& h = smooth_features ? pb.smoothed : pb.emb;
    MatD dh({h.rows(), h.cols()});
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
    MatD dpre({n, dh.cols()});
    kernels::active().relu_grad(dh.numel(), pb.pre.data(), dh.data(), dpre.data());
    embed_.backward(pb.x, dpre);
  }
}

void ABMIL::collect(std::vector<nn::Parameter*>& out) {
  embed_.collect(out);
  pool_.collect(out);
  cls_.collect(out);
}

}  // namespace milkit::models
