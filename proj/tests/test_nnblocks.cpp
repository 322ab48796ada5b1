#include <cmath>

#include "doctest.h"
#include "milkit/errors.hpp"
#include "milkit/nn/attention_pool.hpp"
#include "milkit/nn/encoder_layer.hpp"
#include "milkit/nn/graph_conv.hpp"
#include "milkit/nn/masked_softmax.hpp"
#include "milkit/nn/sm.hpp"
#include "testutil.hpp"

using namespace milkit;
using nn::masked_softmax;

namespace {

MatD random_mat(Rng& rng, std::int64_t r, std::int64_t c) {
  MatD m({r, c});
  for (double& v : m.vec()) v = rng.normal();
  return m;
}

Array<std::uint8_t> full_mask(std::int64_t r, std::int64_t c) {
  Array<std::uint8_t> m({r, c});
  m.fill(1);
  return m;
}

}  // namespace

TEST_CASE("masked_softmax: uniform logits give uniform weights") {
  const MatD out = masked_softmax(MatD({1, 3}, {0, 0, 0}), full_mask(1, 3));
  for (std::int64_t j = 0; j < 3; ++j)
    CHECK(out(0, j) == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("masked_softmax: single live entry gets weight one") {
  Array<std::uint8_t> mask({1, 2}, {1, 0});
  const MatD out = masked_softmax(MatD({1, 2}, {5.0, -3.0}), mask);
  CHECK(out(0, 0) == 1.0);
  CHECK(out(0, 1) == 0.0);
}

TEST_CASE("masked_softmax matches a high-precision oracle") {
  const MatD out = masked_softmax(MatD({1, 3}, {1, 2, 3}), full_mask(1, 3));
  // independent long-double exp/sum computation
  long double denom = 0.0L;
  long double e[3];
  for (int j = 0; j < 3; ++j) {
    e[j] = std::exp(static_cast<long double>(j + 1));
    denom += e[j];
  }
  for (int j = 0; j < 3; ++j)
    CHECK(std::abs(out(0, j) - static_cast<double>(e[j] / denom)) < 1e-6);
  // rows sum to one
  CHECK(out(0, 0) + out(0, 1) + out(0, 2) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("masked_softmax never reads masked entries") {
  Rng rng(5);
  MatD logits = random_mat(rng, 4, 6);
  Array<std::uint8_t> mask({4, 6});
  for (std::int64_t i = 0; i < 4; ++i) {
    for (std::int64_t j = 0; j < 6; ++j) mask(i, j) = j <= i + 1 ? 1 : 0;
  }
  const MatD base = masked_softmax(logits, mask);
  for (std::int64_t i = 0; i < 4; ++i) {
    for (std::int64_t j = 0; j < 6; ++j) {
      if (!mask(i, j)) logits(i, j) = rng.normal() * 1e6;
    }
  }
  const MatD perturbed = masked_softmax(logits, mask);
  CHECK(base == perturbed);
}

TEST_CASE("masked_softmax rejects empty rows") {
  Array<std::uint8_t> mask({1, 2});
  CHECK_THROWS_WITH_AS(masked_softmax(MatD({1, 2}, {1, 2}), mask),
                       "empty bag in softmax", Error);
}

TEST_CASE("attention_pool: single instance gets weight one and z = h1") {
  Rng rng(7);
  nn::AttentionPool pool("p", 4, 3, false, rng);
  const MatD h = random_mat(rng, 1, 4);
  nn::AttentionPool::Ctx ctx;
  const auto e = pool.forward_logits(h, ctx);
  const auto z = pool.forward_pool(h, e, {1}, ctx);
  CHECK(ctx.attn[0] == 1.0);
  for (std::int64_t c = 0; c < 4; ++c) CHECK(z[static_cast<std::size_t>(c)] == h(0, c));
}

TEST_CASE("attention_pool: identical instances share weight equally") {
  Rng rng(8);
  for (bool gated : {false, true}) {
    nn::AttentionPool pool("p", 3, 5, gated, rng);
    MatD h({2, 3});
    for (std::int64_t c = 0; c < 3; ++c) h(0, c) = h(1, c) = 0.3 * static_cast<double>(c) - 1.0;
    nn::AttentionPool::Ctx ctx;
    const auto e = pool.forward_logits(h, ctx);
    const auto z = pool.forward_pool(h, e, {1, 1}, ctx);
    CHECK(ctx.attn[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(ctx.attn[1] == doctest::Approx(0.5).epsilon(1e-12));
    for (std::int64_t c = 0; c < 3; ++c)
      CHECK(z[static_cast<std::size_t>(c)] == doctest::Approx(h(0, c)).epsilon(1e-12));
  }
}

TEST_CASE("attention_pool matches a scalar-arithmetic oracle") {
  // D=2, L=2, small fixed params
  Rng rng(9);
  nn::AttentionPool pool("p", 2, 2, false, rng);
  auto params = std::vector<nn::Parameter*>();
  pool.collect(params);
  // params[0] = V (2x2), params[1] = w (2)
  params[0]->value = MatD({2, 2}, {0.3, -0.2, 0.4, 0.1});
  params[1]->value = MatD({2}, {1.0, -0.5});
  const MatD h({3, 2}, {0.5, 1.0, -1.5, 0.25, 2.0, -0.75});

  nn::AttentionPool::Ctx ctx;
  const auto e = pool.forward_logits(h, ctx);
  const auto z = pool.forward_pool(h, e, {1, 1, 1}, ctx);

  // oracle: plain scalar loops, long double accumulation
  long double eo[3];
  for (int i = 0; i < 3; ++i) {
    long double t0 = std::tanh(0.3L * h(i, 0) - 0.2L * h(i, 1));
    long double t1 = std::tanh(0.4L * h(i, 0) + 0.1L * h(i, 1));
    eo[i] = 1.0L * t0 - 0.5L * t1;
    CHECK(std::abs(e[static_cast<std::size_t>(i)] - static_cast<double>(eo[i])) < 1e-12);
  }
  long double mx = std::max({eo[0], eo[1], eo[2]});
  long double denom = 0.0L;
  long double a[3];
  for (int i = 0; i < 3; ++i) {
    a[i] = std::exp(eo[i] - mx);
    denom += a[i];
  }
  long double z0 = 0.0L, z1 = 0.0L;
  for (int i = 0; i < 3; ++i) {
    a[i] /= denom;
    z0 += a[i] * h(i, 0);
    z1 += a[i] * h(i, 1);
  }
  CHECK(std::abs(z[0] - static_cast<double>(z0)) < 1e-6);
  CHECK(std::abs(z[1] - static_cast<double>(z1)) < 1e-6);
}

TEST_CASE("encoder_layer: batched padded forward equals per-bag forward") {
  Rng rng(10);
  nn::EncoderLayer layer("enc", 8, 2, 16, rng);
  const std::int64_t sizes[2] = {3, 5};
  const std::int64_t n_max = 5;
  MatD x({2 * n_max, 8});
  Array<std::uint8_t> mask({2, n_max});
  std::vector<MatD> solo;
  for (std::int64_t b = 0; b < 2; ++b) {
    MatD xb({sizes[b], 8});
    for (std::int64_t i = 0; i < sizes[b]; ++i) {
      mask(b, i) = 1;
      for (std::int64_t c = 0; c < 8; ++c) {
        const double v = rng.normal();
        x(b * n_max + i, c) = v;
        xb(i, c) = v;
      }
    }
    solo.push_back(std::move(xb));
  }
  nn::EncoderLayer::Ctx ctx;
  const MatD batched = layer.forward(x, 2, n_max, mask, ctx);
  for (std::int64_t b = 0; b < 2; ++b) {
    nn::EncoderLayer::Ctx solo_ctx;
    const MatD alone = layer.forward(solo[static_cast<std::size_t>(b)], 1, sizes[b],
                                     full_mask(1, sizes[b]), solo_ctx);
    for (std::int64_t i = 0; i < sizes[b]; ++i) {
      for (std::int64_t c = 0; c < 8; ++c) {
        CHECK(std::abs(batched(b * n_max + i, c) - alone(i, c)) < 1e-12);
      }
    }
  }
}

TEST_CASE("encoder_layer: padded inputs cannot influence real outputs") {
  Rng rng(11);
  nn::EncoderLayer layer("enc", 8, 4, 16, rng);
  const std::int64_t n_max = 6;
  MatD x({n_max, 8});
  Array<std::uint8_t> mask({1, n_max});
  for (std::int64_t i = 0; i < 4; ++i) {
    mask(0, i) = 1;
    for (std::int64_t c = 0; c < 8; ++c) x(i, c) = rng.normal();
  }
  nn::EncoderLayer::Ctx ctx;
  const MatD base = layer.forward(x, 1, n_max, mask, ctx);
  for (std::int64_t i = 4; i < n_max; ++i) {
    for (std::int64_t c = 0; c < 8; ++c) x(i, c) = rng.normal() * 1e4;
  }
  nn::EncoderLayer::Ctx ctx2;
  const MatD poked = layer.forward(x, 1, n_max, mask, ctx2);
  for (std::int64_t i = 0; i < 4; ++i) {
    for (std::int64_t c = 0; c < 8; ++c)
      CHECK(std::abs(base(i, c) - poked(i, c)) < 1e-5);
  }
  // padded outputs are zeroed
  for (std::int64_t i = 4; i < n_max; ++i) {
    for (std::int64_t c = 0; c < 8; ++c) CHECK(poked(i, c) == 0.0);
  }
}

TEST_CASE("encoder_layer: single token acts as residual + MLP of that token") {
  Rng rng(12);
  nn::EncoderLayer layer("enc", 4, 2, 8, rng);
  const MatD x = random_mat(rng, 1, 4);
  nn::EncoderLayer::Ctx ctx;
  const MatD out = layer.forward(x, 1, 1, full_mask(1, 1), ctx);
  // with one key, attention weights are exactly 1 regardless of parameters
  CHECK(ctx.attn[0](0, 0) == 1.0);
  CHECK(ctx.attn[1](0, 0) == 1.0);
  for (std::int64_t c = 0; c < 4; ++c) CHECK(std::isfinite(out(0, c)));
}

TEST_CASE("encoder_layer permutation equivariance") {
  Rng rng(13);
  nn::EncoderLayer layer("enc", 8, 2, 12, rng);
  const std::int64_t n = 5;
  const MatD x = random_mat(rng, n, 8);
  nn::EncoderLayer::Ctx ctx;
  const MatD base = layer.forward(x, 1, n, full_mask(1, n), ctx);

  const std::vector<std::int64_t> perm = {2, 4, 0, 3, 1};  // old -> new
  MatD xp({n, 8});
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t c = 0; c < 8; ++c) xp(perm[static_cast<std::size_t>(i)], c) = x(i, c);
  }
  nn::EncoderLayer::Ctx ctx2;
  const MatD permuted = layer.forward(xp, 1, n, full_mask(1, n), ctx2);
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t c = 0; c < 8; ++c) {
      CHECK(std::abs(permuted(perm[static_cast<std::size_t>(i)], c) - base(i, c)) < 1e-9);
    }
  }
}

TEST_CASE("sm_operator: alpha = 0 is the identity for any step count") {
  Rng rng(14);
  const SparseMatrix adj = testutil::random_connected_adjacency(rng, 6);
  const SparseMatrix abar = normalize_adjacency(adj, NormalizeMode::row);
  const MatD f = random_mat(rng, 6, 3);
  const MatD g = nn::sm_apply(f, abar, {0.0, 7});
  CHECK(g == f);
}

TEST_CASE("sm_operator: constant signal is a fixed point without isolated nodes") {
  Rng rng(15);
  const SparseMatrix adj = testutil::random_connected_adjacency(rng, 8);
  const SparseMatrix abar = normalize_adjacency(adj, NormalizeMode::row);
  MatD f({8, 2});
  for (std::int64_t i = 0; i < 8; ++i) {
    f(i, 0) = 3.25;
    f(i, 1) = -1.5;
  }
  const MatD g = nn::sm_apply(f, abar, {0.7, 5});
  for (std::int64_t i = 0; i < 8; ++i) {
    CHECK(g(i, 0) == doctest::Approx(3.25).epsilon(1e-12));
    CHECK(g(i, 1) == doctest::Approx(-1.5).epsilon(1e-12));
  }
}

TEST_CASE("sm_operator: two-node worked example") {
  // one edge, f = [1, 0]^T, alpha = 0.5, T = 1 -> [0.5, 0.5]^T exactly
  const SparseMatrix adj = SparseMatrix::from_coo(2, {0, 1}, {1, 0}, {1.0, 1.0});
  const SparseMatrix abar = normalize_adjacency(adj, NormalizeMode::row);
  const MatD f({2, 1}, {1.0, 0.0});
  const MatD g = nn::sm_apply(f, abar, {0.5, 1});
  CHECK(std::abs(g(0, 0) - 0.5) < 1e-12);
  CHECK(std::abs(g(1, 0) - 0.5) < 1e-12);
}

TEST_CASE("sm_operator outputs stay within per-column input range") {
  Rng rng(16);
  for (int trial = 0; trial < 25; ++trial) {
    const std::int64_t n = rng.uniform_int(2, 12);
    const SparseMatrix adj = testutil::random_connected_adjacency(rng, n);
    const SparseMatrix abar = normalize_adjacency(adj, NormalizeMode::row);
    const MatD f = random_mat(rng, n, 3);
    const double alpha = rng.uniform(0.0, 1.0);
    const MatD g = nn::sm_apply(f, abar, {alpha, rng.uniform_int(1, 8)});
    for (std::int64_t c = 0; c < 3; ++c) {
      double lo = f(0, c), hi = f(0, c);
      for (std::int64_t i = 1; i < n; ++i) {
        lo = std::min(lo, f(i, c));
        hi = std::max(hi, f(i, c));
      }
      for (std::int64_t i = 0; i < n; ++i) {
        CHECK(g(i, c) >= lo - 1e-9);
        CHECK(g(i, c) <= hi + 1e-9);
      }
    }
  }
}

TEST_CASE("sm_operator shape mismatch is rejected") {
  const SparseMatrix adj = SparseMatrix::from_coo(2, {0, 1}, {1, 0}, {1.0, 1.0});
  CHECK_THROWS_AS(nn::sm_apply(MatD({3, 1}), adj, {0.5, 1}), Error);
}

TEST_CASE("graph_conv with no edges reduces to ReLU(H W)") {
  Rng rng(17);
  nn::GraphConv conv("g", 3, 4, rng);
  const MatD h = random_mat(rng, 5, 3);
  const SparseMatrix ahat =
      normalize_adjacency(SparseMatrix(5), NormalizeMode::symmetric_with_self_loops);
  nn::GraphConv::Ctx ctx;
  const MatD y = conv.forward(h, ahat, ctx);

  std::vector<nn::Parameter*> params;
  conv.collect(params);
  const MatD& w = params[0]->value;
  for (std::int64_t i = 0; i < 5; ++i) {
    for (std::int64_t o = 0; o < 4; ++o) {
      double acc = 0.0;
      for (std::int64_t c = 0; c < 3; ++c) acc += h(i, c) * w(c, o);
      CHECK(y(i, o) == doctest::Approx(std::max(0.0, acc)).epsilon(1e-12));
    }
  }
}

TEST_CASE("graph_conv 3-node path with identity weights matches hand oracle") {
  Rng rng(18);
  nn::GraphConv conv("g", 3, 3, rng);
  std::vector<nn::Parameter*> params;
  conv.collect(params);
  params[0]->value.fill(0.0);
  for (std::int64_t i = 0; i < 3; ++i) params[0]->value(i, i) = 1.0;

  const SparseMatrix adj =
      SparseMatrix::from_coo(3, {0, 1, 1, 2}, {1, 0, 2, 1}, {1, 1, 1, 1});
  const SparseMatrix ahat =
      normalize_adjacency(adj, NormalizeMode::symmetric_with_self_loops);
  MatD h({3, 3});
  h(0, 0) = 1.0;
  h(1, 1) = 2.0;
  h(2, 2) = 4.0;
  nn::GraphConv::Ctx ctx;
  const MatD y = conv.forward(h, ahat, ctx);

  // hand-computed Ahat: degrees with self loops are (2, 3, 2)
  double ahat_dense[3][3] = {
      {1.0 / 2.0, 1.0 / std::sqrt(6.0), 0.0},
      {1.0 / std::sqrt(6.0), 1.0 / 3.0, 1.0 / std::sqrt(6.0)},
      {0.0, 1.0 / std::sqrt(6.0), 1.0 / 2.0}};
  for (std::int64_t i = 0; i < 3; ++i) {
    for (std::int64_t c = 0; c < 3; ++c) {
      double acc = 0.0;
      for (std::int64_t j = 0; j < 3; ++j) acc += ahat_dense[i][j] * h(j, c);
      CHECK(std::abs(y(i, c) - std::max(0.0, acc)) < 1e-6);
    }
  }
}

TEST_CASE("graph_conv permutation equivariance on a random graph") {
  Rng rng(19);
  nn::GraphConv conv("g", 4, 4, rng);
  const std::int64_t n = 5;
  const SparseMatrix adj = testutil::random_connected_adjacency(rng, n);
  const MatD h = random_mat(rng, n, 4);
  nn::GraphConv::Ctx ctx;
  const MatD base = conv.forward(
      h, normalize_adjacency(adj, NormalizeMode::symmetric_with_self_loops), ctx);

  const std::vector<std::int64_t> perm = {3, 0, 4, 1, 2};
  MatD hp({n, 4});
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t c = 0; c < 4; ++c) hp(perm[static_cast<std::size_t>(i)], c) = h(i, c);
  }
  nn::GraphConv::Ctx ctx2;
  const MatD permuted = conv.forward(
      hp,
      normalize_adjacency(adj.permuted(perm), NormalizeMode::symmetric_with_self_loops),
      ctx2);
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t c = 0; c < 4; ++c)
      CHECK(std::abs(permuted(perm[static_cast<std::size_t>(i)], c) - base(i, c)) < 1e-9);
  }
}
