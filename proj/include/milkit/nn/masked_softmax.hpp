#pragma once

#include "milkit/array.hpp"

namespace milkit::nn {

/// Row-wise softmax over unmasked entries; masked outputs are exactly 0.
/// Numerically stabilized by subtracting the unmasked row max. Masked input
/// entries are never read. Throws "empty bag in softmax" on an all-false row.
MatD masked_softmax(const MatD& logits, const Array<std::uint8_t>& mask);

/// Gradient wrt logits given the softmax output y and upstream dy.
MatD masked_softmax_backward(const MatD& y, const MatD& dy,
                             const Array<std::uint8_t>& mask);

}  // namespace milkit::nn
