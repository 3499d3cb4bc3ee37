#include "jr/conv1d.hpp"

#include <stdexcept>

#include "jr/activations.hpp"

namespace jr {

DenseMatrix pad_journey(const DenseMatrix& x, std::size_t pad) {
  if (x.cols == 0 || x.rows == 0) {
    throw std::invalid_argument("pad_journey: empty journey");
  }
  DenseMatrix out(x.rows, x.cols + 2 * pad);
  for (std::size_t n = 0; n < x.rows; ++n) {
    const double* src = x.row_ptr(n);
    double* dst = out.row_ptr(n) + pad;
    for (std::size_t t = 0; t < x.cols; ++t) dst[t] = src[t];
  }
  return out;
}

DenseMatrix conv_forward(const DenseMatrix& x, const ConvParams& p,
                         ConvCache* cache) {
  const std::size_t n = p.n_features();
  const std::size_t k = p.kernel_size();
  if (x.rows != n) {
    throw std::invalid_argument("conv_forward: input has " + std::to_string(x.rows) +
                                " features, params expect " + std::to_string(n));
  }
  if (k % 2 == 0) throw std::invalid_argument("conv_forward: kernel size must be odd");
  const std::size_t pad = (k - 1) / 2;
  const std::size_t t_len = x.cols;

  DenseMatrix padded = pad_journey(x, pad);
  DenseMatrix pre(n, t_len);
  DenseMatrix z(n, t_len);
  for (std::size_t f = 0; f < n; ++f) {
    const double* row = padded.row_ptr(f);
    const double* w = p.kernels.row_ptr(f);
    const double b = p.biases(f, 0);
    double* pre_row = pre.row_ptr(f);
    double* z_row = z.row_ptr(f);
    for (std::size_t t = 0; t < t_len; ++t) {
      double acc = b;
      for (std::size_t i = 0; i < k; ++i) acc += row[t + i] * w[i];
      pre_row[t] = acc;
      z_row[t] = relu(acc);
    }
  }
  if (cache) {
    cache->padded = std::move(padded);
    cache->pre_act = std::move(pre);
  }
  return z;
}

void conv_backward(const DenseMatrix& grad_z, const ConvCache& cache,
                   const ConvParams& p, DenseMatrix* grad_x, ConvGrads* grads) {
  const std::size_t n = p.n_features();
  const std::size_t k = p.kernel_size();
  const std::size_t pad = (k - 1) / 2;
  if (!grad_z.same_shape(cache.pre_act)) {
    throw std::invalid_argument("conv_backward: grad shape " + shape_string(grad_z) +
                                " does not match cache " + shape_string(cache.pre_act));
  }
  const std::size_t t_len = grad_z.cols;

  DenseMatrix grad_padded;
  if (grad_x) grad_padded = DenseMatrix(n, t_len + 2 * pad);

  for (std::size_t f = 0; f < n; ++f) {
    const double* gz = grad_z.row_ptr(f);
    const double* pre = cache.pre_act.row_ptr(f);
    const double* in = cache.padded.row_ptr(f);
    const double* w = p.kernels.row_ptr(f);
    double* gw = grads ? grads->kernels.row_ptr(f) : nullptr;
    double* gp = grad_x ? grad_padded.row_ptr(f) : nullptr;
    double gb = 0.0;
    for (std::size_t t = 0; t < t_len; ++t) {
      const double g = gz[t] * relu_grad(pre[t]);
      if (g == 0.0) continue;
      gb += g;
      for (std::size_t i = 0; i < k; ++i) {
        if (gw) gw[i] += g * in[t + i];
        if (gp) gp[t + i] += g * w[i];
      }
    }
    if (grads) grads->biases(f, 0) += gb;
  }
  if (grad_x) {
    *grad_x = DenseMatrix(n, t_len);
    for (std::size_t f = 0; f < n; ++f) {
      const double* src = grad_padded.row_ptr(f) + pad;
      double* dst = grad_x->row_ptr(f);
      for (std::size_t t = 0; t < t_len; ++t) dst[t] = src[t];
    }
  }
}

}  // namespace jr
