#pragma once

#include <span>

#include "fedssg/nn/matrix.hpp"

namespace fedssg::nn {

struct LossResult {
  double loss = 0.0;
  Matrix grad;  // d loss / d input, same shape as the loss input
};

/// Mean over the batch of -log softmax(logits)[label].
LossResult cross_entropy(const Matrix& logits, std::span<const int> labels);

/// Row-wise softmax.
Matrix softmax(const Matrix& logits);

/// mean((pred - target)^2) + mean(|pred - target|), both over all elements.
/// The subgradient of |.| at zero is taken as 0.
LossResult mse_plus_l1(const Matrix& pred, const Matrix& target);

}  // namespace fedssg::nn
