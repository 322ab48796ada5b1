#include "milkit/train/adam.hpp"

#include <cmath>

#include "milkit/kernels/kernels.hpp"

namespace milkit::train {

Adam::Adam(std::vector<nn::Parameter*> params, double lr)
    : params_(std::move(params)), lr_(lr) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const nn::Parameter* p : params_) {
    m_.emplace_back(p->value.shape());
    v_.emplace_back(p->value.shape());
  }
}

void Adam::step() {
  ++t_;
  const double beta1 = 0.9;
  const double beta2 = 0.999;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
  const auto& k = kernels::active();
  for (std::size_t i = 0; i < params_.size(); ++i) {
    nn::Parameter* p = params_[i];
    k.adam_step(p->value.numel(), p->value.data(), p->grad.data(), m_[i].data(),
                v_[i].data(), lr_, beta1, beta2, 1e-8, c1, c2);
  }
}

}  // namespace milkit::train
