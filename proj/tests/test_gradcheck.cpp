// Central finite differences (step 1e-4) against the analytic backward
// passes, relative error < 1e-3, on small random inputs (N <= 6, D <= 4).

#include <cmath>
#include <functional>

#include "doctest.h"
#include "milkit/models/model.hpp"
#include "milkit/nn/attention_pool.hpp"
#include "milkit/nn/encoder_layer.hpp"
#include "milkit/nn/graph_conv.hpp"
#include "milkit/nn/sm.hpp"
#include "testutil.hpp"

using namespace milkit;

namespace {

constexpr double kStep = 1e-4;
constexpr double kTol = 1e-3;

bool grad_close(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-2});
  return std::abs(analytic - numeric) / scale < kTol;
}

/// Checks d(loss)/d(x[i]) for every element of `x` against `analytic`.
void check_against_fd(double* x, const double* analytic, std::int64_t n,
                      const std::function<double()>& loss) {
  for (std::int64_t i = 0; i < n; ++i) {
    const double saved = x[i];
    x[i] = saved + kStep;
    const double up = loss();
    x[i] = saved - kStep;
    const double down = loss();
    x[i] = saved;
    const double numeric = (up - down) / (2.0 * kStep);
    INFO("element ", i, ": analytic ", analytic[i], " numeric ", numeric);
    CHECK(grad_close(analytic[i], numeric));
  }
}

MatD random_mat(Rng& rng, std::int64_t r, std::int64_t c) {
  MatD m({r, c});
  for (double& v : m.vec()) v = rng.normal();
  return m;
}

}  // namespace

TEST_CASE("attention_pool gradients (plain and gated)") {
  for (bool gated : {false, true}) {
    Rng rng(gated ? 21 : 20);
    const std::int64_t n = 5, d = 3, l = 4;
    nn::AttentionPool pool("p", d, l, gated, rng);
    MatD h = random_mat(rng, n, d);
    const MatD cz = random_mat(rng, 1, d);
    const std::vector<std::uint8_t> live(static_cast<std::size_t>(n), 1);

    const auto loss = [&]() {
      nn::AttentionPool::Ctx ctx;
      const auto e = pool.forward_logits(h, ctx);
      const auto z = pool.forward_pool(h, e, live, ctx);
      double acc = 0.0;
      for (std::int64_t c = 0; c < d; ++c) acc += cz(0, c) * z[static_cast<std::size_t>(c)];
      return acc;
    };

    // analytic gradients
    std::vector<nn::Parameter*> params;
    pool.collect(params);
    for (auto* p : params) p->zero_grad();
    MatD dh({n, d});
    {
      nn::AttentionPool::Ctx ctx;
      const auto e = pool.forward_logits(h, ctx);
      pool.forward_pool(h, e, live, ctx);
      std::vector<double> dz(static_cast<std::size_t>(d));
      for (std::int64_t c = 0; c < d; ++c) dz[static_cast<std::size_t>(c)] = cz(0, c);
      const auto de = pool.backward_pool(h, dz, live, ctx, dh);
      pool.backward_logits(h, de, ctx, dh);
    }
    for (auto* p : params) {
      check_against_fd(p->value.data(), p->grad.data(), p->value.numel(), loss);
    }
    check_against_fd(h.data(), dh.data(), h.numel(), loss);
  }
}

TEST_CASE("encoder_layer gradients") {
  Rng rng(22);
  const std::int64_t n = 4, d = 4;
  nn::EncoderLayer layer("enc", d, 2, 6, rng);
  MatD x = random_mat(rng, n, d);
  const MatD c = random_mat(rng, n, d);
  Array<std::uint8_t> mask({1, n});
  mask.fill(1);

  const auto loss = [&]() {
    nn::EncoderLayer::Ctx ctx;
    const MatD out = layer.forward(x, 1, n, mask, ctx);
    double acc = 0.0;
    for (std::size_t i = 0; i < out.vec().size(); ++i) acc += c.vec()[i] * out.vec()[i];
    return acc;
  };

  std::vector<nn::Parameter*> params;
  layer.collect(params);
  for (auto* p : params) p->zero_grad();
  MatD dx;
  {
    nn::EncoderLayer::Ctx ctx;
    layer.forward(x, 1, n, mask, ctx);
    dx = layer.backward(x, 1, n, mask, ctx, c);
  }
  for (auto* p : params) {
    check_against_fd(p->value.data(), p->grad.data(), p->value.numel(), loss);
  }
  check_against_fd(x.data(), dx.data(), x.numel(), loss);
}

TEST_CASE("graph_conv gradients") {
  Rng rng(23);
  const std::int64_t n = 6, din = 3, dout = 4;
  nn::GraphConv conv("g", din, dout, rng);
  const SparseMatrix ahat = normalize_adjacency(
      testutil::random_connected_adjacency(rng, n),
      NormalizeMode::symmetric_with_self_loops);
  MatD h = random_mat(rng, n, din);
  const MatD c = random_mat(rng, n, dout);

  const auto loss = [&]() {
    nn::GraphConv::Ctx ctx;
    const MatD out = conv.forward(h, ahat, ctx);
    double acc = 0.0;
    for (std::size_t i = 0; i < out.vec().size(); ++i) acc += c.vec()[i] * out.vec()[i];
    return acc;
  };

  std::vector<nn::Parameter*> params;
  conv.collect(params);
  for (auto* p : params) p->zero_grad();
  MatD dh;
  {
    nn::GraphConv::Ctx ctx;
    conv.forward(h, ahat, ctx);
    dh = conv.backward(h, ahat, ctx, c);
  }
  for (auto* p : params) {
    check_against_fd(p->value.data(), p->grad.data(), p->value.numel(), loss);
  }
  check_against_fd(h.data(), dh.data(), h.numel(), loss);
}

TEST_CASE("sm_operator input gradients") {
  Rng rng(24);
  const std::int64_t n = 6;
  const SparseMatrix abar = normalize_adjacency(
      testutil::random_connected_adjacency(rng, n), NormalizeMode::row);
  MatD f = random_mat(rng, n, 2);
  const MatD c = random_mat(rng, n, 2);
  const nn::SmParams params{0.6, 3};

  const auto loss = [&]() {
    const MatD g = nn::sm_apply(f, abar, params);
    double acc = 0.0;
    for (std::size_t i = 0; i < g.vec().size(); ++i) acc += c.vec()[i] * g.vec()[i];
    return acc;
  };

  const MatD df = nn::sm_backward(c, abar, params);
  check_against_fd(f.data(), df.data(), f.numel(), loss);
}

TEST_CASE("full ABMIL loss gradients") {
  Rng rng(25);
  ModelConfig config;
  config.model_name = "ABMIL";
  config.in_dim = 4;
  config.embed_dim = 6;
  config.attention_width = 4;
  MILModelPtr model = build_model(config, 42);

  std::vector<Bag> bags;
  for (int i = 0; i < 3; ++i)
    bags.push_back(testutil::random_bag(rng, 2 + i, 4, "g" + std::to_string(i)));
  const Batch batch = collate(bags);

  const auto loss = [&]() { return model->compute_loss(batch, false).loss; };

  model->zero_grad();
  model->compute_loss(batch, true);
  for (nn::Parameter* p : model->parameters()) {
    INFO("parameter ", p->name);
    check_against_fd(p->value.data(), p->grad.data(), p->value.numel(), loss);
  }
}

TEST_CASE("full SmTransformerABMIL loss gradients") {
  Rng rng(26);
  ModelConfig config;
  config.model_name = "SmTransformerABMIL";
  config.in_dim = 3;
  config.embed_dim = 4;
  config.attention_width = 3;
  config.n_encoder_layers = 1;
  config.n_heads = 2;
  config.sm = SmSettings{0.5, 2, SmAttachment::attention_logits};
  MILModelPtr model = build_model(config, 7);

  std::vector<Bag> bags;
  for (int i = 0; i < 2; ++i)
    bags.push_back(testutil::random_bag(rng, 3 + i, 3, "g" + std::to_string(i)));
  const Batch batch = collate(bags);

  const auto loss = [&]() { return model->compute_loss(batch, false).loss; };
  model->zero_grad();
  model->compute_loss(batch, true);
  for (nn::Parameter* p : model->parameters()) {
    INFO("parameter ", p->name);
    check_against_fd(p->value.data(), p->grad.data(), p->value.numel(), loss);
  }
}

TEST_CASE("full GraphABMIL loss gradients") {
  Rng rng(27);
  ModelConfig config;
  config.model_name = "GraphABMIL";
  config.in_dim = 3;
  config.embed_dim = 4;
  config.attention_width = 3;
  config.n_graph_layers = 2;
  MILModelPtr model = build_model(config, 9);

  std::vector<Bag> bags;
  for (int i = 0; i < 2; ++i)
    bags.push_back(testutil::random_bag(rng, 4, 3, "g" + std::to_string(i)));
  const Batch batch = collate(bags);

  const auto loss = [&]() { return model->compute_loss(batch, false).loss; };
  model->zero_grad();
  model->compute_loss(batch, true);
  for (nn::Parameter* p : model->parameters()) {
    INFO("parameter ", p->name);
    check_against_fd(p->value.data(), p->grad.data(), p->value.numel(), loss);
  }
}
