#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "milkit/array.hpp"
#include "milkit/rng.hpp"

namespace milkit::nn {

/// Named trainable tensor with a gradient accumulator of the same shape.
struct Parameter {
  std::string name;
  MatD value;
  MatD grad;

  Parameter() = default;
  Parameter(std::string n, std::vector<std::int64_t> shape)
      : name(std::move(n)), value(shape), grad(std::move(shape)) {}

  void zero_grad() { grad.fill(0.0); }
};

/// Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
inline void init_uniform(Parameter& p, std::int64_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& v : p.value.vec()) v = rng.uniform(-bound, bound);
}

}  // namespace milkit::nn
