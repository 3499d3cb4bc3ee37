#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "jr/activations.hpp"
#include "jr/conv1d.hpp"
#include "jr/gradcheck.hpp"
#include "jr/rng.hpp"

using namespace jr;

namespace {

ConvParams random_conv(std::size_t n, std::size_t k, Rng& rng) {
  ConvParams p;
  p.kernels = DenseMatrix(n, k);
  p.biases = DenseMatrix(n, 1);
  for (double& v : p.kernels.data) v = rng.uniform(-1.0, 1.0);
  for (double& v : p.biases.data) v = rng.uniform(-0.5, 0.5);
  return p;
}

DenseMatrix random_input(std::size_t n, std::size_t t, Rng& rng) {
  DenseMatrix x(n, t);
  for (double& v : x.data) v = rng.uniform(-2.0, 2.0);
  return x;
}

// Independent oracle: direct sliding window over the zero-padded row.
DenseMatrix conv_oracle(const DenseMatrix& x, const ConvParams& p) {
  const std::size_t k = p.kernel_size();
  const std::size_t pad = (k - 1) / 2;
  DenseMatrix z(x.rows, x.cols);
  for (std::size_t n = 0; n < x.rows; ++n) {
    for (std::size_t t = 0; t < x.cols; ++t) {
      double acc = p.biases(n, 0);
      for (std::size_t i = 0; i < k; ++i) {
        const long long src = static_cast<long long>(t + i) - static_cast<long long>(pad);
        const double v = (src < 0 || src >= static_cast<long long>(x.cols))
                             ? 0.0
                             : x(n, static_cast<std::size_t>(src));
        acc += v * p.kernels(n, i);
      }
      z(n, t) = relu(acc);
    }
  }
  return z;
}

}  // namespace

TEST_CASE("pad_journey shape and boundary zeros") {
  DenseMatrix x(2, 1);
  x(0, 0) = 5.0;
  x(1, 0) = 7.0;
  const DenseMatrix p = pad_journey(x, 1);
  CHECK(p.rows == 2);
  CHECK(p.cols == 3);
  CHECK(p(0, 0) == 0.0);
  CHECK(p(0, 1) == 5.0);
  CHECK(p(0, 2) == 0.0);
  CHECK(p(1, 1) == 7.0);
}

TEST_CASE("pad then strip recovers the original") {
  Rng rng(1);
  const DenseMatrix x = random_input(3, 7, rng);
  const DenseMatrix p = pad_journey(x, 1);
  CHECK(p.cols == x.cols + 2);
  for (std::size_t n = 0; n < x.rows; ++n) {
    for (std::size_t t = 0; t < x.cols; ++t) CHECK(p(n, t + 1) == x(n, t));
  }
}

TEST_CASE("pad_journey rejects empty journeys") {
  DenseMatrix empty(2, 0);
  CHECK_THROWS_AS(pad_journey(empty, 1), std::invalid_argument);
}

TEST_CASE("worked example: window [58,0,55] with kernel [2,1,-1] gives 61") {
  ConvParams p;
  p.kernels = DenseMatrix(1, 3);
  p.kernels(0, 0) = 2.0;
  p.kernels(0, 1) = 1.0;
  p.kernels(0, 2) = -1.0;
  p.biases = DenseMatrix(1, 1);

  // Center step of [58, 0, 55]: the full window is visible, no padding used.
  DenseMatrix x(1, 3);
  x(0, 0) = 58.0;
  x(0, 1) = 0.0;
  x(0, 2) = 55.0;
  const DenseMatrix z = conv_forward(x, p);
  CHECK(z(0, 1) == 61.0);  // 58*2 + 0*1 + 55*(-1)
}

TEST_CASE("all-zero input gives ReLU(bias) everywhere") {
  ConvParams p;
  p.kernels = DenseMatrix(2, 3);
  p.kernels.fill(0.7);
  p.biases = DenseMatrix(2, 1);
  p.biases(0, 0) = 1.5;
  p.biases(1, 0) = -0.5;
  DenseMatrix x(2, 4);
  const DenseMatrix z = conv_forward(x, p);
  for (std::size_t t = 0; t < 4; ++t) {
    CHECK(z(0, t) == 1.5);
    CHECK(z(1, t) == 0.0);
  }
}

TEST_CASE("conv_forward equals sliding-window oracle on random instances") {
  Rng rng(99);
  for (int rep = 0; rep < 20; ++rep) {
    const ConvParams p = random_conv(4, 3, rng);
    const DenseMatrix x = random_input(4, 9, rng);
    const DenseMatrix got = conv_forward(x, p);
    const DenseMatrix want = conv_oracle(x, p);
    CHECK(got.cols == x.cols);
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(std::fabs(got.data[i] - want.data[i]) <= 1e-12);
    }
  }
}

TEST_CASE("kernel size 5 keeps temporal length") {
  Rng rng(3);
  const ConvParams p = random_conv(2, 5, rng);
  const DenseMatrix x = random_input(2, 6, rng);
  const DenseMatrix z = conv_forward(x, p);
  CHECK(z.cols == 6);
  CHECK(z.rows == 2);
}

TEST_CASE("outputs are non-negative and depthwise-independent") {
  Rng rng(7);
  const ConvParams p = random_conv(4, 3, rng);
  DenseMatrix x = random_input(4, 8, rng);
  const DenseMatrix z0 = conv_forward(x, p);
  for (double v : z0.data) CHECK(v >= 0.0);

  x(2, 3) += 0.5;  // perturb feature row 2 only
  const DenseMatrix z1 = conv_forward(x, p);
  for (std::size_t n = 0; n < 4; ++n) {
    for (std::size_t t = 0; t < 8; ++t) {
      if (n != 2) CHECK(z0(n, t) == z1(n, t));
    }
  }
}

TEST_CASE("locality: cell (n,t) depends only on inputs t-1..t+1") {
  Rng rng(8);
  const ConvParams p = random_conv(2, 3, rng);
  DenseMatrix x = random_input(2, 9, rng);
  const DenseMatrix z0 = conv_forward(x, p);
  x(0, 5) += 1.0;
  const DenseMatrix z1 = conv_forward(x, p);
  for (std::size_t t = 0; t < 9; ++t) {
    if (t + 1 < 5 || t > 6) CHECK(z0(0, t) == z1(0, t));
  }
}

TEST_CASE("conv_backward zero upstream gives zero gradients") {
  Rng rng(12);
  const ConvParams p = random_conv(3, 3, rng);
  const DenseMatrix x = random_input(3, 5, rng);
  ConvCache cache;
  conv_forward(x, p, &cache);
  DenseMatrix grad_z(3, 5);
  ConvGrads grads;
  grads.kernels = DenseMatrix(3, 3);
  grads.biases = DenseMatrix(3, 1);
  DenseMatrix grad_x;
  conv_backward(grad_z, cache, p, &grad_x, &grads);
  for (double v : grads.kernels.data) CHECK(v == 0.0);
  for (double v : grads.biases.data) CHECK(v == 0.0);
  for (double v : grad_x.data) CHECK(v == 0.0);
}

TEST_CASE("conv_backward rejects mismatched shapes") {
  Rng rng(13);
  const ConvParams p = random_conv(2, 3, rng);
  const DenseMatrix x = random_input(2, 5, rng);
  ConvCache cache;
  conv_forward(x, p, &cache);
  DenseMatrix bad(2, 4);
  CHECK_THROWS_AS(conv_backward(bad, cache, p, nullptr, nullptr),
                  std::invalid_argument);
}

TEST_CASE("conv_backward matches finite differences") {
  Rng rng(21);
  const std::size_t n = 3, t_len = 6;
  const ConvParams p0 = random_conv(n, 3, rng);
  const DenseMatrix x0 = random_input(n, t_len, rng);
  // Scalarized loss: weighted sum of outputs, fixed random weights.
  DenseMatrix w = random_input(n, t_len, rng);

  const auto loss_for = [&w](const DenseMatrix& x, const ConvParams& p) {
    const DenseMatrix z = conv_forward(x, p);
    double acc = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) acc += w.data[i] * z.data[i];
    return acc;
  };

  // Analytic gradients.
  ConvCache cache;
  conv_forward(x0, p0, &cache);
  ConvGrads grads;
  grads.kernels = DenseMatrix(n, 3);
  grads.biases = DenseMatrix(n, 1);
  DenseMatrix grad_x;
  conv_backward(w, cache, p0, &grad_x, &grads);

  SUBCASE("parameter gradients") {
    std::vector<double> theta = p0.kernels.data;
    theta.insert(theta.end(), p0.biases.data.begin(), p0.biases.data.end());
    auto f = [&](const std::vector<double>& th) {
      ConvParams p = p0;
      std::copy(th.begin(), th.begin() + p.kernels.size(), p.kernels.data.begin());
      std::copy(th.begin() + p.kernels.size(), th.end(), p.biases.data.begin());
      return loss_for(x0, p);
    };
    const auto fd = finite_diff_grad(f, theta, 1e-5);
    std::vector<double> analytic = grads.kernels.data;
    analytic.insert(analytic.end(), grads.biases.data.begin(), grads.biases.data.end());
    CHECK(max_relative_error(analytic, fd) < 1e-4);
  }

  SUBCASE("input gradients") {
    auto f = [&](const std::vector<double>& th) {
      DenseMatrix x = x0;
      x.data = th;
      return loss_for(x, p0);
    };
    const auto fd = finite_diff_grad(f, x0.data, 1e-5);
    CHECK(max_relative_error(grad_x.data, fd) < 1e-4);
  }
}
