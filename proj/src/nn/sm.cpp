#include "milkit/nn/sm.hpp"

#include "milkit/errors.hpp"

namespace milkit::nn {

MatD sm_apply(const MatD& f, const SparseMatrix& abar, const SmParams& params) {
  if (abar.size() != f.rows()) throw Error("sm_operator shape mismatch");
  if (!(params.alpha >= 0.0 && params.alpha <= 1.0))
    throw Error("sm_operator alpha must lie in [0,1]");
  if (params.steps < 1) throw Error("sm_operator needs at least one step");
  const double a = params.alpha;
  if (a == 0.0) return f;
  MatD g = f;
  MatD tmp({f.rows(), f.cols()});
  for (std::int64_t t = 0; t < params.steps; ++t) {
    abar.spmm(g, tmp);
    for (std::size_t i = 0; i < g.vec().size(); ++i)
      g.vec()[i] = (1.0 - a) * f.vec()[i] + a * tmp.vec()[i];
  }
  return g;
}

MatD sm_backward(const MatD& dg, const SparseMatrix& abar, const SmParams& params) {
  const double a = params.alpha;
  if (a == 0.0) return dg;
  // g_T = (1-a) sum_{t<T} (a Abar)^t f + (a Abar)^T f
  // df  = (1-a) sum_{t<T} (a Abar^T)^t dg + (a Abar^T)^T dg
  MatD acc = dg;
  MatD df({dg.rows(), dg.cols()});
  MatD tmp({dg.rows(), dg.cols()});
  for (std::int64_t t = 0; t < params.steps; ++t) {
    for (std::size_t i = 0; i < df.vec().size(); ++i)
      df.vec()[i] += (1.0 - a) * acc.vec()[i];
    abar.spmm_t(acc, tmp);
    for (std::size_t i = 0; i < acc.vec().size(); ++i) acc.vec()[i] = a * tmp.vec()[i];
  }
  for (std::size_t i = 0; i < df.vec().size(); ++i) df.vec()[i] += acc.vec()[i];
  return df;
}

}  // namespace milkit::nn
