#include "fedssg/nn/loss.hpp"

#include <algorithm>
#include <cmath>

#include "fedssg/core/error.hpp"

namespace fedssg::nn {

Matrix softmax(const Matrix& logits) {
  Matrix p(logits.rows, logits.cols);
  for (std::size_t r = 0; r < logits.rows; ++r) {
    auto row = logits.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (std::size_t c = 0; c < logits.cols; ++c) {
      p(r, c) = std::exp(row[c] - mx);
      z += p(r, c);
    }
    for (std::size_t c = 0; c < logits.cols; ++c) p(r, c) /= z;
  }
  return p;
}

LossResult cross_entropy(const Matrix& logits, std::span<const int> labels) {
  require(labels.size() == logits.rows && logits.rows > 0, "cross_entropy: one label per row required");
  LossResult out{0.0, Matrix(logits.rows, logits.cols)};
  const double inv_b = 1.0 / static_cast<double>(logits.rows);
  for (std::size_t r = 0; r < logits.rows; ++r) {
    const int y = labels[r];
    require(y >= 0 && static_cast<std::size_t>(y) < logits.cols, "cross_entropy: label out of range");
    auto row = logits.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - mx);
    const double log_z = mx + std::log(z);
    out.loss += (log_z - row[static_cast<std::size_t>(y)]) * inv_b;
    for (std::size_t c = 0; c < logits.cols; ++c) {
      const double p = std::exp(row[c] - log_z);
      out.grad(r, c) = (p - (static_cast<int>(c) == y ? 1.0 : 0.0)) * inv_b;
    }
  }
  return out;
}

LossResult mse_plus_l1(const Matrix& pred, const Matrix& target) {
  require(pred.rows == target.rows && pred.cols == target.cols && !pred.data.empty(),
          "mse_plus_l1: shape mismatch");
  LossResult out{0.0, Matrix(pred.rows, pred.cols)};
  const double inv_n = 1.0 / static_cast<double>(pred.data.size());
  double sq = 0.0;
  double ab = 0.0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const double d = pred.data[i] - target.data[i];
    sq += d * d;
    ab += std::abs(d);
    const double sign = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
    out.grad.data[i] = (2.0 * d + sign) * inv_n;
  }
  out.loss = (sq + ab) * inv_n;
  return out;
}

}  // namespace fedssg::nn
