#include "milkit/nn/attention_pool.hpp"

#include <cassert>
#include <cmath>

#include "milkit/linalg.hpp"
#include "milkit/nn/masked_softmax.hpp"
#include "milkit/nn/ops.hpp"

namespace milkit::nn {

AttentionPool::AttentionPool(const std::string& name, std::int64_t in_dim,
                             std::int64_t attention_width, bool gated, Rng& rng)
    : v_(name + ".V", {attention_width, in_dim}),
      w_(name + ".w", {attention_width}),
      gated_(gated) {
  init_uniform(v_, in_dim, rng);
  init_uniform(w_, attention_width, rng);
  if (gated_) {
    u_ = Parameter(name + ".U", {attention_width, in_dim});
    init_uniform(u_, in_dim, rng);
  }
}

std::vector<double> AttentionPool::forward_logits(const MatD& h, Ctx& ctx) const {
  const std::int64_t n = h.rows();
  const std::int64_t l = v_.value.rows();
  ctx.t = matmul_nt(h, v_.value);  // N x L
  for (double& v : ctx.t.vec()) v = std::tanh(v);
  if (gated_) {
    ctx.u = matmul_nt(h, u_.value);
    for (double& v : ctx.u.vec()) v = sigmoid(v);
  }
  std::vector<double> e(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    if (gated_) {
      double acc = 0.0;
      const double* t = ctx.t.row(i);
      const double* u = ctx.u.row(i);
      for (std::int64_t j = 0; j < l; ++j) acc += w_.value.at(j) * t[j] * u[j];
      e[static_cast<std::size_t>(i)] = acc;
    } else {
      e[static_cast<std::size_t>(i)] = dot(l, w_.value.data(), ctx.t.row(i));
    }
  }
  return e;
}

std::vector<double> AttentionPool::forward_pool(
    const MatD& h, const std::vector<double>& e,
    const std::vector<std::uint8_t>& mask, Ctx& ctx) const {
  const std::int64_t n = h.rows();
  const std::int64_t d = h.cols();
  assert(static_cast<std::int64_t>(e.size()) == n &&
         static_cast<std::int64_t>(mask.size()) == n);
  MatD logits({1, n}, std::vector<double>(e));
  Array<std::uint8_t> m({1, n}, std::vector<std::uint8_t>(mask));
  const MatD a = masked_softmax(logits, m);
  ctx.attn.assign(a.vec().begin(), a.vec().end());
  std::vector<double> z(static_cast<std::size_t>(d), 0.0);
  for (std::int64_t i = 0; i < n; ++i) {
    const double ai = ctx.attn[static_cast<std::size_t>(i)];
    if (ai != 0.0) axpy(d, ai, h.row(i), z.data());
  }
  return z;
}

std::vector<double> AttentionPool::backward_pool(
    const MatD& h, const std::vector<double>& dz,
    const std::vector<std::uint8_t>& mask, const Ctx& ctx, MatD& dh) const {
  const std::int64_t n = h.rows();
  const std::int64_t d = h.cols();
  // z = sum a_i h_i: dh_i += a_i dz ; da_i = h_i . dz
  MatD da({1, n});
  for (std::int64_t i = 0; i < n; ++i) {
    const double ai = ctx.attn[static_cast<std::size_t>(i)];
    if (ai != 0.0) axpy(d, ai, dz.data(), dh.row(i));
    da(0, i) = mask[static_cast<std::size_t>(i)] ? dot(d, h.row(i), dz.data()) : 0.0;
  }
  MatD a({1, n}, std::vector<double>(ctx.attn));
  Array<std::uint8_t> m({1, n}, std::vector<std::uint8_t>(mask));
  const MatD de = masked_softmax_backward(a, da, m);
  return std::vector<double>(de.vec());
}

void AttentionPool::backward_logits(const MatD& h, const std::vector<double>& de,
                                    const Ctx& ctx, MatD& dh) {
  const std::int64_t n = h.rows();
  const std::int64_t l = v_.value.rows();
  // e_i = w . (t_i * u_i), t = tanh(V h^T), u = sigmoid(U h^T)
  MatD dth({n, l});  // gradient wrt pre-tanh rows
  MatD duh;          // gradient wrt pre-sigmoid rows
  if (gated_) duh = MatD({n, l});
  for (std::int64_t i = 0; i < n; ++i) {
    const double dei = de[static_cast<std::size_t>(i)];
    const double* t = ctx.t.row(i);
    double* dth_r = dth.row(i);
    if (dei == 0.0) continue;
    if (gated_) {
      const double* u = ctx.u.row(i);
      double* duh_r = duh.row(i);
      for (std::int64_t j = 0; j < l; ++j) {
        w_.grad.at(j) += dei * t[j] * u[j];
        dth_r[j] = dei * w_.value.at(j) * u[j] * (1.0 - t[j] * t[j]);
        duh_r[j] = dei * w_.value.at(j) * t[j] * u[j] * (1.0 - u[j]);
      }
    } else {
      for (std::int64_t j = 0; j < l; ++j) {
        w_.grad.at(j) += dei * t[j];
        dth_r[j] = dei * w_.value.at(j) * (1.0 - t[j] * t[j]);
      }
    }
  }
  // th = h V^T: dV += dth^T h ; dh += dth V
  matmul_tn_acc(dth, h, v_.grad);
  matmul_nn_acc(dth, v_.value, dh);
  if (gated_) {
    matmul_tn_acc(duh, h, u_.grad);
    matmul_nn_acc(duh, u_.value, dh);
  }
}

void AttentionPool::collect(std::vector<Parameter*>& out) {
  out.push_back(&v_);
  out.push_back(&w_);
  if (gated_) out.push_back(&u_);
}

}  // namespace milkit::nn
