#include "milkit/nn/graph_conv.hpp"

#include "milkit/errors.hpp"
#include "milkit/kernels/kernels.hpp"
#include "milkit/linalg.hpp"

namespace milkit::nn {

GraphConv::GraphConv(const std::string& name, std::int64_t in_dim,
                     std::int64_t out_dim, Rng& rng)
    : w_(name + ".weight", {in_dim, out_dim}) {
  init_uniform(w_, in_dim, rng);
}

MatD GraphConv::forward(const MatD& h, const SparseMatrix& ahat, Ctx& ctx) const {
  if (h.cols() != in_dim()) throw Error("graph_conv input width mismatch");
  if (ahat.size() != h.rows()) throw Error("graph_conv adjacency size mismatch");
  ctx.ah = MatD({h.rows(), h.cols()});
  ahat.spmm(h, ctx.ah);
  ctx.pre = matmul(ctx.ah, w_.value);
  MatD y = ctx.pre;
  kernels::active().relu(y.numel(), ctx.pre.data(), y.data());
  return y;
}

MatD GraphConv::backward(const MatD& h, const SparseMatrix& ahat, const Ctx& ctx,
                         const MatD& dy) {
  MatD dpre({dy.rows(), dy.cols()});
  kernels::active().relu_grad(dy.numel(), ctx.pre.data(), dy.data(), dpre.data());
  matmul_tn_acc(ctx.ah, dpre, w_.grad);
  const MatD dah = matmul_nt(dpre, w_.value);
  MatD dh({h.rows(), h.cols()});
  // Ahat is symmetric, so d(Ahat H) pulls back through Ahat itself
  ahat.spmm(dah, dh);
  return dh;
}

void GraphConv::collect(std::vector<Parameter*>& out) { out.push_back(&w_); }

}  // namespace milkit::nn
