#include "milkit/nn/encoder_layer.hpp"

#include <cassert>
#include <cmath>

#include "milkit/errors.hpp"
#include "milkit/linalg.hpp"
#include "milkit/nn/ops.hpp"

namespace milkit::nn {

EncoderLayer::EncoderLayer(const std::string& name, std::int64_t width,
                           std::int64_t n_heads, std::int64_t mlp_width, Rng& rng)
    : ln1_(name + ".ln1", width),
      ln2_(name + ".ln2", width),
      wq_(name + ".wq", width, width, rng),
      wk_(name + ".wk", width, width, rng),
      wv_(name + ".wv", width, width, rng),
      wo_(name + ".wo", width, width, rng),
      mlp1_(name + ".mlp1", width, mlp_width, rng),
      mlp2_(name + ".mlp2", mlp_width, width, rng),
      n_heads_(n_heads) {
  if (width % n_heads != 0) throw ConfigError("model width not divisible by n_heads");
}

MatD EncoderLayer::forward(const MatD& x, std::int64_t n_bags, std::int64_t n_max,
                           const Array<std::uint8_t>& mask, Ctx& ctx) const {
  const std::int64_t d = width();
  if (x.cols() != d) throw Error("encoder width mismatch");
  assert(x.rows() == n_bags * n_max);
  const std::int64_t dh = d / n_heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  ctx.xn = ln1_.forward(x, ctx.ln1c);
  ctx.q = wq_.forward(ctx.xn);
  ctx.k = wk_.forward(ctx.xn);
  ctx.v = wv_.forward(ctx.xn);

  ctx.co = MatD({x.rows(), d});
  ctx.attn.assign(static_cast<std::size_t>(n_bags * n_heads_), MatD());
  for (std::int64_t b = 0; b < n_bags; ++b) {
    const std::int64_t r0 = b * n_max;
    for (std::int64_t h = 0; h < n_heads_; ++h) {
      const std::int64_t off = h * dh;
      MatD a({n_max, n_max});
      for (std::int64_t i = 0; i < n_max; ++i) {
        double* arow = a.row(i);
        double mx = -std::numeric_limits<double>::infinity();
        for (std::int64_t j = 0; j < n_max; ++j) {
          double s = scale * dot(dh, ctx.q.row(r0 + i) + off, ctx.k.row(r0 + j) + off);
          if (!mask(b, j)) s += kMaskBias;
          arow[j] = s;
          if (s > mx) mx = s;
        }
        double denom = 0.0;
        for (std::int64_t j = 0; j < n_max; ++j) {
          arow[j] = std::exp(arow[j] - mx);
          denom += arow[j];
        }
        for (std::int64_t j = 0; j < n_max; ++j) arow[j] /= denom;
        double* crow = ctx.co.row(r0 + i) + off;
        for (std::int64_t j = 0; j < n_max; ++j) {
          if (arow[j] != 0.0) axpy(dh, arow[j], ctx.v.row(r0 + j) + off, crow);
        }
      }
      ctx.attn[static_cast<std::size_t>(b * n_heads_ + h)] = std::move(a);
    }
  }

  const MatD o = wo_.forward(ctx.co);
  ctx.x2 = x;
  for (std::size_t i = 0; i < ctx.x2.vec().size(); ++i) ctx.x2.vec()[i] += o.vec()[i];

  ctx.x2n = ln2_.forward(ctx.x2, ctx.ln2c);
  ctx.h1pre = mlp1_.forward(ctx.x2n);
  ctx.h1 = ctx.h1pre;
  for (double& v : ctx.h1.vec()) v = gelu(v);
  const MatD h2 = mlp2_.forward(ctx.h1);

  MatD out = ctx.x2;
  for (std::size_t i = 0; i < out.vec().size(); ++i) out.vec()[i] += h2.vec()[i];
  // padded rows carry no information; keep them at zero
  for (std::int64_t b = 0; b < n_bags; ++b) {
    for (std::int64_t i = 0; i < n_max; ++i) {
      if (!mask(b, i)) {
        double* row = out.row(b * n_max + i);
        for (std::int64_t c = 0; c < d; ++c) row[c] = 0.0;
      }
    }
  }
  return out;
}

MatD EncoderLayer::backward(const MatD& x, std::int64_t n_bags, std::int64_t n_max,
                            const Array<std::uint8_t>& mask, const Ctx& ctx,
                            const MatD& dy) {
  const std::int64_t d = width();
  const std::int64_t dh = d / n_heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  // zeroed padded outputs receive no gradient
  MatD dx2 = dy;
  for (std::int64_t b = 0; b < n_bags; ++b) {
    for (std::int64_t i = 0; i < n_max; ++i) {
      if (!mask(b, i)) {
        double* row = dx2.row(b * n_max + i);
        for (std::int64_t c = 0; c < d; ++c) row[c] = 0.0;
      }
    }
  }

  // MLP branch
  MatD dh1 = mlp2_.backward(ctx.h1, dx2);
  for (std::size_t i = 0; i < dh1.vec().size(); ++i)
    dh1.vec()[i] *= gelu_grad(ctx.h1pre.vec()[i]);
  const MatD dx2n = mlp1_.backward(ctx.x2n, dh1);
  {
    const MatD d_ln2 = ln2_.backward(ctx.ln2c, dx2n);
    for (std::size_t i = 0; i < dx2.vec().size(); ++i) dx2.vec()[i] += d_ln2.vec()[i];
  }

  // attention branch: do = dx2
  const MatD dco = wo_.backward(ctx.co, dx2);
  MatD dq({x.rows(), d});
  MatD dk({x.rows(), d});
  MatD dv({x.rows(), d});
  std::vector<double> da(static_cast<std::size_t>(n_max));
  for (std::int64_t b = 0; b < n_bags; ++b) {
    const std::int64_t r0 = b * n_max;
    for (std::int64_t h = 0; h < n_heads_; ++h) {
      const std::int64_t off = h * dh;
      const MatD& a = ctx.attn[static_cast<std::size_t>(b * n_heads_ + h)];
      for (std::int64_t i = 0; i < n_max; ++i) {
        const double* arow = a.row(i);
        const double* dcrow = dco.row(r0 + i) + off;
        double inner = 0.0;
        for (std::int64_t j = 0; j < n_max; ++j) {
          da[static_cast<std::size_t>(j)] =
              dot(dh, dcrow, ctx.v.row(r0 + j) + off);
          if (arow[j] != 0.0) axpy(dh, arow[j], dcrow, dv.row(r0 + j) + off);
          inner += arow[j] * da[static_cast<std::size_t>(j)];
        }
        for (std::int64_t j = 0; j < n_max; ++j) {
          const double ds = arow[j] * (da[static_cast<std::size_t>(j)] - inner);
          if (ds != 0.0) {
            axpy(dh, ds * scale, ctx.k.row(r0 + j) + off, dq.row(r0 + i) + off);
            axpy(dh, ds * scale, ctx.q.row(r0 + i) + off, dk.row(r0 + j) + off);
          }
        }
      }
    }
  }

  MatD dxn = wq_.backward(ctx.xn, dq);
  {
    const MatD t = wk_.backward(ctx.xn, dk);
    for (std::size_t i = 0; i < dxn.vec().size(); ++i) dxn.vec()[i] += t.vec()[i];
  }
  {
    const MatD t = wv_.backward(ctx.xn, dv);
    for (std::size_t i = 0; i < dxn.vec().size(); ++i) dxn.vec()[i] += t.vec()[i];
  }

  MatD dx = dx2;
  {
    const MatD d_ln1 = ln1_.backward(ctx.ln1c, dxn);
    for (std::size_t i = 0; i < dx.vec().size(); ++i) dx.vec()[i] += d_ln1.vec()[i];
  }
  return dx;
}

void EncoderLayer::collect(std::vector<Parameter*>& out) {
  ln1_.collect(out);
  wq_.collect(out);
  wk_.collect(out);
  wv_.collect(out);
  wo_.collect(out);
  ln2_.collect(out);
  mlp1_.collect(out);
  mlp2_.collect(out);
}

}  // namespace milkit::nn
