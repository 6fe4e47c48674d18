#pragma once

// OpenMP data-parallel kernels used on the training and aggregation paths.
//
// Every kernel parallelizes only over independent output elements and keeps
// the summation order of each element fixed, so results are bit-identical to
// the serial versions in reference.hpp regardless of thread count. The
// blocked reductions (dot, squared_norm) use a fixed block partition and are
// therefore deterministic too, but may differ from the naive serial sum in
// the last bits when the input spans more than one block.

#include <cstddef>
#include <span>

#include "fedssg/nn/matrix.hpp"

namespace fedssg::kernels {

using nn::Matrix;

/// Work (multiply-adds) below which kernels stay on the calling thread.
inline constexpr std::size_t kParallelThreshold = std::size_t{1} << 16;
/// Block length of the deterministic reductions.
inline constexpr std::size_t kReductionBlock = 4096;

/// y = x * W^T + b, with W stored row-major as (out x in).
void affine_forward(const Matrix& x, std::span<const double> weight, std::span<const double> bias, Matrix& y);

/// dW += dy^T * x and db += column sums of dy.
void affine_backward_params(const Matrix& x, const Matrix& dy, std::span<double> dweight, std::span<double> dbias);

/// dx = dy * W.
void affine_backward_input(const Matrix& dy, std::span<const double> weight, Matrix& dx);

/// Weighted mean of equally sized vectors, accumulated as a running mean in
/// input order: out <- out + (w_i / W_i) (x_i - out). A single input or
/// identical inputs are returned exactly.
void weighted_mean(std::span<const std::span<const double>> inputs, std::span<const double> weights,
                   std::span<double> out);

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);

/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

}  // namespace fedssg::kernels
