#include "milkit/nn/layer_norm.hpp"

#include <cassert>
#include <cmath>

namespace milkit::nn {

LayerNorm::LayerNorm(const std::string& name, std::int64_t dim)
    : gamma_(name + ".gamma", {dim}), beta_(name + ".beta", {dim}) {
  gamma_.value.fill(1.0);
}

MatD LayerNorm::forward(const MatD& x, Ctx& ctx) const {
  const std::int64_t rows = x.rows();
  const std::int64_t d = x.cols();
  assert(d == gamma_.value.numel());
  ctx.xn = MatD({rows, d});
  ctx.rstd.resize(static_cast<std::size_t>(rows));
  MatD y({rows, d});
  for (std::int64_t i = 0; i < rows; ++i) {
    const double* xr = x.row(i);
    double mean = 0.0;
    for (std::int64_t j = 0; j < d; ++j) mean += xr[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::int64_t j = 0; j < d; ++j) {
      const double c = xr[j] - mean;
      var += c * c;
    }
    var /= static_cast<double>(d);
    const double rstd = 1.0 / std::sqrt(var + kEps);
    ctx.rstd[static_cast<std::size_t>(i)] = rstd;
    double* xn = ctx.xn.row(i);
    double* yr = y.row(i);
    for (std::int64_t j = 0; j < d; ++j) {
      xn[j] = (xr[j] - mean) * rstd;
      yr[j] = gamma_.value.at(j) * xn[j] + beta_.value.at(j);
    }
  }
  return y;
}

MatD LayerNorm::backward(const Ctx& ctx, const MatD& dy) {
  const std::int64_t rows = dy.rows();
  const std::int64_t d = dy.cols();
  MatD dx({rows, d});
  for (std::int64_t i = 0; i < rows; ++i) {
    const double* dyr = dy.row(i);
    const double* xn = ctx.xn.row(i);
    const double rstd = ctx.rstd[static_cast<std::size_t>(i)];
    double mean_dxn = 0.0;
    double mean_dxn_xn = 0.0;
    for (std::int64_t j = 0; j < d; ++j) {
      const double dxn = dyr[j] * gamma_.value.at(j);
      mean_dxn += dxn;
      mean_dxn_xn += dxn * xn[j];
      gamma_.grad.at(j) += dyr[j] * xn[j];
      beta_.grad.at(j) += dyr[j];
    }
    mean_dxn /= static_cast<double>(d);
    mean_dxn_xn /= static_cast<double>(d);
    double* dxr = dx.row(i);
    for (std::int64_t j = 0; j < d; ++j) {
      const double dxn = dyr[j] * gamma_.value.at(j);
      dxr[j] = rstd * (dxn - mean_dxn - xn[j] * mean_dxn_xn);
    }
  }
  return dx;
}

void LayerNorm::collect(std::vector<Parameter*>& out) {
  out.push_back(&gamma_);
  out.push_back(&beta_);
}

}  // namespace milkit::nn
