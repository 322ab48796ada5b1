#include "milkit/errors.hpp"
#include "milkit/models/detail.hpp"

namespace milkit::models {

struct GraphABMIL::Ctx : MILModel::GradContext {
  struct PerBag {
    MatD x;
    SparseMatrix ahat;
    std::vector<nn::GraphConv::Ctx> convs;
    std::vector<MatD> conv_in;
    MatD h;  // final node embeddings
    nn::AttentionPool::Ctx pool;
    MatD z;
  };
  std::vector<PerBag> bags;
};

GraphABMIL::GraphABMIL(ModelConfig config, Rng& rng) : MILModel(std::move(config)) {
  const std::int64_t e = *config_.embed_dim;
  for (std::int64_t i = 0; i < *config_.n_graph_layers; ++i) {
    convs_.emplace_back("gconv" + std::to_string(i), i == 0 ? config_.in_dim : e,
                        e, rng);
  }
  pool_ = nn::AttentionPool("attention", e, *config_.attention_width,
                            *config_.gated, rng);
  cls_ = nn::Linear("classifier", e, 1, rng);
}

MILModel::RunOutput GraphABMIL::run(const Batch& batch,
                                    std::unique_ptr<GradContext>* ctx_out) {
  check_batch(batch);
  if (!batch.adjacency)
    throw Error("model '" + config_.model_name + "' requires bag adjacency");
  const std::int64_t b_count = batch.batch_size();
  const std::int64_t n_max = batch.max_instances();
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
    pb.ahat = normalize_adjacency((*batch.adjacency)[static_cast<std::size_t>(b)],
                                  NormalizeMode::symmetric_with_self_loops);
    pb.convs.resize(convs_.size());
    MatD h = pb.x;
    for (std::size_t l = 0; l < convs_.size(); ++l) {
      pb.conv_in.push_back(h);
      h = convs_[l].forward(h, pb.ahat, pb.convs[l]);
    }
    pb.h = std::move(h);

    pb.pool.attn.clear();
    const std::vector<double> e = pool_.forward_logits(pb.h, pb.pool);
    const std::vector<std::uint8_t> live(static_cast<std::size_t>(n), 1);
    const std::vector<double> z = pool_.forward_pool(pb.h, e, live, pb.pool);
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

void GraphABMIL::backprop(const Batch& batch, GradContext& ctx_in,
                          const std::vector<double>& dlogits) {
  auto& ctx = static_cast<Ctx&>(ctx_in);
  for (std::int64_t b = 0; b < batch.batch_size(); ++b) {
    Ctx::PerBag& pb = ctx.bags[static_cast<std::size_t>(b)];
    const std::int64_t n = pb.h.rows();
    MatD dlogit({1, 1});
    dlogit(0, 0) = dlogits[static_cast<std::size_t>(b)];
    const MatD dz = cls_.backward(pb.z, dlogit);

    MatD dh({n, pb.h.cols()});
    const std::vector<std::uint8_t> live(static_cast<std::size_t>(n), 1);
    const std::vector<double> de =
        pool_.backward_pool(pb.h, std::vector<double>(dz.vec()), live, pb.pool, dh);
    pool_.backward_logits(pb.h, de, pb.pool, dh);

    for (std::size_t l = convs_.size(); l-- > 0;) {
      dh = convs_[l].backward(pb.conv_in[l], pb.ahat, pb.convs[l], dh);
    }
  }
}

void GraphABMIL::collect(std::vector<nn::Parameter*>& out) {
  for (auto& conv : convs_) conv.collect(out);
  pool_.collect(out);
  cls_.collect(out);
}

}  // namespace milkit::models
