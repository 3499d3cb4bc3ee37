#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "jr/activations.hpp"
#include "jr/gradcheck.hpp"
#include "jr/gru.hpp"
#include "jr/rng.hpp"

using namespace jr;

namespace {

GruParams make_params(std::size_t input, std::size_t hidden) {
  GruParams p;
  p.input = input;
  p.hidden = hidden;
  const std::size_t width = input + hidden;
  p.w_reset = DenseMatrix(hidden, width);
  p.w_update = DenseMatrix(hidden, width);
  p.w_cand = DenseMatrix(hidden, width);
  p.b_reset = DenseMatrix(hidden, 1);
  p.b_update = DenseMatrix(hidden, 1);
  p.b_cand = DenseMatrix(hidden, 1);
  return p;
}

GruParams random_params(std::size_t input, std::size_t hidden, Rng& rng) {
  GruParams p = make_params(input, hidden);
  for (DenseMatrix* m : {&p.w_reset, &p.w_update, &p.w_cand}) {
    for (double& v : m->data) v = rng.uniform(-0.8, 0.8);
  }
  for (DenseMatrix* m : {&p.b_reset, &p.b_update, &p.b_cand}) {
    for (double& v : m->data) v = rng.uniform(-0.3, 0.3);
  }
  return p;
}

DenseMatrix random_input(std::size_t n, std::size_t t, Rng& rng) {
  DenseMatrix x(n, t);
  for (double& v : x.data) v = rng.uniform(-1.5, 1.5);
  return x;
}

std::vector<double> pack_gru(const GruParams& p) {
  std::vector<double> theta;
  for (const DenseMatrix* m : {&p.w_reset, &p.w_update, &p.w_cand, &p.b_reset,
                               &p.b_update, &p.b_cand}) {
    theta.insert(theta.end(), m->data.begin(), m->data.end());
  }
  return theta;
}

void unpack_gru(GruParams& p, const std::vector<double>& theta) {
  std::size_t off = 0;
  for (DenseMatrix* m : {&p.w_reset, &p.w_update, &p.w_cand, &p.b_reset,
                         &p.b_update, &p.b_cand}) {
    std::copy(theta.begin() + off, theta.begin() + off + m->size(), m->data.begin());
    off += m->size();
  }
}

}  // namespace

TEST_CASE("zero params, zero state is a fixed point") {
  const GruParams p = make_params(3, 2);
  std::vector<double> h_prev(2, 0.0), h(2), r(2), u(2), c(2);
  const double x[3] = {1.0, -2.0, 0.5};
  gru_cell_forward(x, h_prev.data(), p, h.data(), r.data(), u.data(), c.data());
  for (double v : h) CHECK(v == 0.0);
  for (double v : r) CHECK(v == 0.5);
  for (double v : u) CHECK(v == 0.5);
  for (double v : c) CHECK(v == 0.0);
}

TEST_CASE("saturated update gate keeps the previous state") {
  Rng rng(5);
  GruParams p = random_params(2, 3, rng);
  p.b_update.fill(40.0);
  std::vector<double> h_prev = {0.3, -0.7, 0.1};
  std::vector<double> h(3), r(3), u(3), c(3);
  const double x[2] = {1.0, -1.0};
  gru_cell_forward(x, h_prev.data(), p, h.data(), r.data(), u.data(), c.data());
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(std::fabs(h[i] - h_prev[i]) < 1e-12);
  }
}

TEST_CASE("g=1, N=1 cell matches a hand-evaluated trace") {
  GruParams p = make_params(1, 1);
  // concat order [h_prev, x]
  p.w_reset(0, 0) = 0.5;
  p.w_reset(0, 1) = -0.3;
  p.b_reset(0, 0) = 0.1;
  p.w_update(0, 0) = -0.2;
  p.w_update(0, 1) = 0.4;
  p.b_update(0, 0) = -0.1;
  p.w_cand(0, 0) = 0.7;
  p.w_cand(0, 1) = 0.6;
  p.b_cand(0, 0) = 0.2;

  const double h_prev = 0.5;
  const double x = -1.2;
  const double r = sigmoid(0.5 * h_prev + (-0.3) * x + 0.1);
  const double u = sigmoid((-0.2) * h_prev + 0.4 * x + (-0.1));
  const double c = std::tanh(0.7 * (r * h_prev) + 0.6 * x + 0.2);
  const double h_want = u * h_prev + (1.0 - u) * c;

  double h_got, r_got, u_got, c_got;
  gru_cell_forward(&x, &h_prev, p, &h_got, &r_got, &u_got, &c_got);
  CHECK(std::fabs(r_got - r) < 1e-10);
  CHECK(std::fabs(u_got - u) < 1e-10);
  CHECK(std::fabs(c_got - c) < 1e-10);
  CHECK(std::fabs(h_got - h_want) < 1e-10);
}

TEST_CASE("T=1 sequence reduces to one cell step") {
  Rng rng(6);
  const GruParams p = random_params(2, 3, rng);
  DenseMatrix z = random_input(2, 1, rng);
  const std::vector<double> h = gru_sequence_forward(z, p);

  std::vector<double> h_prev(3, 0.0), h1(3), r(3), u(3), c(3);
  const double x[2] = {z(0, 0), z(1, 0)};
  gru_cell_forward(x, h_prev.data(), p, h1.data(), r.data(), u.data(), c.data());
  for (std::size_t i = 0; i < 3; ++i) CHECK(h[i] == h1[i]);
}

TEST_CASE("truncating the input reproduces the trace prefix exactly") {
  Rng rng(7);
  const GruParams p = random_params(3, 4, rng);
  const DenseMatrix z = random_input(3, 8, rng);
  GruTrace full;
  gru_sequence_forward(z, p, &full);

  DenseMatrix z7(3, 7);
  for (std::size_t f = 0; f < 3; ++f) {
    for (std::size_t t = 0; t < 7; ++t) z7(f, t) = z(f, t);
  }
  GruTrace prefix;
  const std::vector<double> h7 = gru_sequence_forward(z7, p, &prefix);
  for (std::size_t t = 0; t < 7; ++t) {
    for (std::size_t i = 0; i < 4; ++i) CHECK(prefix.h(t, i) == full.h(t, i));
  }
  for (std::size_t i = 0; i < 4; ++i) CHECK(h7[i] == full.h(6, i));
}

TEST_CASE("zero params give zero final state for any input") {
  Rng rng(8);
  const GruParams p = make_params(2, 3);
  const DenseMatrix z = random_input(2, 5, rng);
  for (double v : gru_sequence_forward(z, p)) CHECK(v == 0.0);
}

TEST_CASE("gate ranges, convex combination, and bounded state") {
  Rng rng(9);
  const GruParams p = random_params(3, 4, rng);
  const DenseMatrix z = random_input(3, 10, rng);
  GruTrace tr;
  gru_sequence_forward(z, p, &tr);
  for (std::size_t t = 0; t < tr.steps; ++t) {
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(tr.reset(t, i) > 0.0);
      CHECK(tr.reset(t, i) < 1.0);
      CHECK(tr.update(t, i) > 0.0);
      CHECK(tr.update(t, i) < 1.0);
      CHECK(tr.cand(t, i) > -1.0);
      CHECK(tr.cand(t, i) < 1.0);
      const double h_prev = t == 0 ? 0.0 : tr.h(t - 1, i);
      const double lo = std::min(h_prev, tr.cand(t, i));
      const double hi = std::max(h_prev, tr.cand(t, i));
      CHECK(tr.h(t, i) >= lo - 1e-15);
      CHECK(tr.h(t, i) <= hi + 1e-15);
      CHECK(std::fabs(tr.h(t, i)) <= 1.0);
    }
  }
}

TEST_CASE("determinism: identical inputs give bitwise-identical states") {
  Rng rng(10);
  const GruParams p = random_params(2, 5, rng);
  const DenseMatrix z = random_input(2, 6, rng);
  const auto a = gru_sequence_forward(z, p);
  const auto b = gru_sequence_forward(z, p);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("gru_backward zero upstream gives zero gradients") {
  Rng rng(11);
  const GruParams p = random_params(2, 3, rng);
  const DenseMatrix z = random_input(2, 4, rng);
  GruTrace tr;
  gru_sequence_forward(z, p, &tr);
  GruGrads grads = make_gru_grads(p);
  DenseMatrix grad_z;
  gru_backward(std::vector<double>(3, 0.0), tr, z, p, &grad_z, &grads);
  for (const DenseMatrix* m : {&grads.w_reset, &grads.w_update, &grads.w_cand,
                               &grads.b_reset, &grads.b_update, &grads.b_cand}) {
    for (double v : m->data) CHECK(v == 0.0);
  }
  for (double v : grad_z.data) CHECK(v == 0.0);
}

TEST_CASE("gru_backward rejects mismatched traces") {
  Rng rng(12);
  const GruParams p = random_params(2, 3, rng);
  const DenseMatrix z = random_input(2, 4, rng);
  GruTrace tr;
  gru_sequence_forward(z, p, &tr);
  const DenseMatrix other = random_input(2, 5, rng);
  CHECK_THROWS_AS(gru_backward(std::vector<double>(3, 0.0), tr, other, p, nullptr,
                               nullptr),
                  std::invalid_argument);
}

TEST_CASE("gru_backward matches finite differences (N=3, T=6, g=4)") {
  Rng rng(13);
  const GruParams p0 = random_params(3, 4, rng);
  const DenseMatrix z0 = random_input(3, 6, rng);
  std::vector<double> w(4);
  for (double& v : w) v = rng.uniform(-1.0, 1.0);

  const auto loss_for = [&w](const DenseMatrix& z, const GruParams& p) {
    const auto h = gru_sequence_forward(z, p);
    double acc = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) acc += w[i] * h[i];
    return acc;
  };

  GruTrace tr;
  gru_sequence_forward(z0, p0, &tr);
  GruGrads grads = make_gru_grads(p0);
  DenseMatrix grad_z;
  gru_backward(w, tr, z0, p0, &grad_z, &grads);

  SUBCASE("parameter gradients") {
    auto f = [&](const std::vector<double>& th) {
      GruParams p = p0;
      unpack_gru(p, th);
      return loss_for(z0, p);
    };
    const auto fd = finite_diff_grad(f, pack_gru(p0), 1e-5);
    std::vector<double> analytic;
    for (const DenseMatrix* m : {&grads.w_reset, &grads.w_update, &grads.w_cand,
                                 &grads.b_reset, &grads.b_update, &grads.b_cand}) {
      analytic.insert(analytic.end(), m->data.begin(), m->data.end());
    }
    CHECK(max_relative_error(analytic, fd) < 1e-4);
  }

  SUBCASE("input gradients") {
    auto f = [&](const std::vector<double>& th) {
      DenseMatrix z = z0;
      z.data = th;
      return loss_for(z, p0);
    };
    const auto fd = finite_diff_grad(f, z0.data, 1e-5);
    CHECK(max_relative_error(grad_z.data, fd) < 1e-4);
  }
}
