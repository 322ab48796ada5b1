#include "milkit/errors.hpp"
#include "milkit/models/detail.hpp"

namespace milkit::models {

SparseMatrix sm_abar(const Batch& batch, std::int64_t b, const std::string& model) {
  if (!batch.adjacency)
    throw Error("model '" + model + "' requires bag adjacency");
  return normalize_adjacency((*batch.adjacency)[static_cast<std::size_t>(b)],
                             NormalizeMode::row);
}

struct PoolMIL::Ctx : MILModel::GradContext {
  std::vector<MatD> x;    // per bag, real rows upcast
  std::vector<MatD> emb;  // per bag, N x E
  std::vector<std::int64_t> argmax;
};

PoolMIL::PoolMIL(ModelConfig config, bool is_max, Rng& rng)
    : MILModel(std::move(config)),
      embed_("embed", config_.in_dim, *config_.embed_dim, rng),
      cls_("classifier", *config_.embed_dim, 1, rng),
      is_max_(is_max) {}

MILModel::RunOutput PoolMIL::run(const Batch& batch,
                                 std::unique_ptr<GradContext>* ctx_out) {
  check_batch(batch);
  const std::int64_t b_count = batch.batch_size();
  const std::int64_t n_max = batch.max_instances();
  RunOutput out;
  out.logits.resize(static_cast<std::size_t>(b_count));
  out.attention = MatD({b_count, n_max});
  out.instance_scores = MatD({b_count, n_max});
  auto ctx = std::make_unique<Ctx>();

  for (std::int64_t b = 0; b < b_count; ++b) {
    const std::int64_t n = batch.sizes[static_cast<std::size_t>(b)];
    MatD x = bag_features(batch, b);
    MatD emb = embed_.forward(x);
    const MatD s = cls_.forward(emb);  // per-instance logits, N x 1
    double logit;
    std::int64_t arg = 0;
    if (is_max_) {
      logit = s(0, 0);
      for (std::int64_t i = 1; i < n; ++i) {
        if (s(i, 0) > logit) {
          logit = s(i, 0);
          arg = i;
        }
      }
      out.attention(b, arg) = 1.0;
    } else {
      double acc = 0.0;
      for (std::int64_t i = 0; i < n; ++i) acc += s(i, 0);
      logit = acc / static_cast<double>(n);
      for (std::int64_t i = 0; i < n; ++i)
        out.attention(b, i) = 1.0 / static_cast<double>(n);
    }
    for (std::int64_t i = 0; i < n; ++i) out.instance_scores(b, i) = s(i, 0);
    out.logits[static_cast<std::size_t>(b)] = logit;
    if (ctx_out) {
      ctx->x.push_back(std::move(x));
      ctx->emb.push_back(std::move(emb));
      ctx->argmax.push_back(arg);
    }
  }
  if (ctx_out) *ctx_out = std::move(ctx);
  return out;
}

void PoolMIL::backprop(const Batch& batch, GradContext& ctx_in,
                       const std::vector<double>& dlogits) {
  auto& ctx = static_cast<Ctx&>(ctx_in);
  const std::int64_t b_count = batch.batch_size();
  for (std::int64_t b = 0; b < b_count; ++b) {
    const std::int64_t n = batch.sizes[static_cast<std::size_t>(b)];
    const double dl = dlogits[static_cast<std::size_t>(b)];
    MatD ds({n, 1});
    if (is_max_) {
      ds(ctx.argmax[static_cast<std::size_t>(b)], 0) = dl;
    } else {
      for (std::int64_t i = 0; i < n; ++i) ds(i, 0) = dl / static_cast<double>(n);
    }
    const MatD demb = cls_.backward(ctx.emb[static_cast<std::size_t>(b)], ds);
    embed_.backward(ctx.x[static_cast<std::size_t>(b)], demb);
  }
}

void PoolMIL::collect(std::vector<nn::Parameter*>& out) {
  embed_.collect(out);
  cls_.collect(out);
}

}  // namespace milkit::models
