#pragma once

#include <vector>

#include "milkit/nn/parameter.hpp"

namespace milkit::train {

/// Adam with bias-corrected moments (beta1 0.9, beta2 0.999, eps 1e-8).
class Adam {
 public:
  Adam(std::vector<nn::Parameter*> params, double lr);

  void step();
  double learning_rate() const { return lr_; }

 private:
  std::vector<nn::Parameter*> params_;
  std::vector<MatD> m_, v_;
  double lr_;
  std::int64_t t_ = 0;
};

}  // namespace milkit::train
