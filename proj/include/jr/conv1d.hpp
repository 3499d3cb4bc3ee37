#pragma once

#include <cstddef>

#include "jr/matrix.hpp"

namespace jr {

/// Depthwise 1D convolution: one kernel per feature row, output row n depends
/// on input row n only. Odd kernel size, stride 1, symmetric zero padding of
/// (size-1)/2 columns keeps the temporal length unchanged.
struct ConvParams {
  DenseMatrix kernels;  // N x kernel_size
  DenseMatrix biases;   // N x 1

  std::size_t n_features() const { return kernels.rows; }
  std::size_t kernel_size() const { return kernels.cols; }
};

/// N x (T + 2*pad) with zero boundary columns and the input copied inside.
DenseMatrix pad_journey(const DenseMatrix& x, std::size_t pad = 1);

struct ConvCache {
  DenseMatrix padded;   // N x (T + 2*pad)
  DenseMatrix pre_act;  // N x T, values before ReLU
};

/// z[n][t] = ReLU(sum_k padded[n][t+k] * kernel[n][k] + bias[n])
DenseMatrix conv_forward(const DenseMatrix& x, const ConvParams& p,
                         ConvCache* cache = nullptr);

struct ConvGrads {
  DenseMatrix kernels;  // N x kernel_size
  DenseMatrix biases;   // N x 1
};

/// Reverse-mode gradients of conv_forward under relu'(0)=0. grad_x excludes
/// the padding columns. Gradients are accumulated into `grads`.
void conv_backward(const DenseMatrix& grad_z, const ConvCache& cache,
                   const ConvParams& p, DenseMatrix* grad_x, ConvGrads* grads);

}  // namespace jr
