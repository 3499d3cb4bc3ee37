#include "jr/gru.hpp"

#include <stdexcept>

#include "jr/activations.hpp"

namespace jr {

namespace {

void check_params(const GruParams& p) {
  const std::size_t g = p.hidden;
  const std::size_t width = p.hidden + p.input;
  if (p.w_reset.rows != g || p.w_reset.cols != width ||
      p.w_update.rows != g || p.w_update.cols != width ||
      p.w_cand.rows != g || p.w_cand.cols != width ||
      p.b_reset.rows != g || p.b_update.rows != g || p.b_cand.rows != g) {
    throw std::invalid_argument("gru: inconsistent parameter shapes");
  }
}

}  // namespace

void gru_cell_forward(const double* x, const double* h_prev, const GruParams& p,
                      double* h_out, double* r_out, double* u_out, double* c_out) {
  const std::size_t g = p.hidden;
  const std::size_t n = p.input;

  std::vector<double> concat(g + n);
  for (std::size_t i = 0; i < g; ++i) concat[i] = h_prev[i];
  for (std::size_t i = 0; i < n; ++i) concat[g + i] = x[i];

  std::vector<double> act(g);
  matvec(p.w_reset, concat.data(), act.data());
  for (std::size_t i = 0; i < g; ++i) r_out[i] = sigmoid(act[i] + p.b_reset(i, 0));
  matvec(p.w_update, concat.data(), act.data());
  for (std::size_t i = 0; i < g; ++i) u_out[i] = sigmoid(act[i] + p.b_update(i, 0));

  for (std::size_t i = 0; i < g; ++i) concat[i] = r_out[i] * h_prev[i];
  matvec(p.w_cand, concat.data(), act.data());
  for (std::size_t i = 0; i < g; ++i) c_out[i] = tanh_act(act[i] + p.b_cand(i, 0));

  for (std::size_t i = 0; i < g; ++i) {
    h_out[i] = u_out[i] * h_prev[i] + (1.0 - u_out[i]) * c_out[i];
  }
}

std::vector<double> gru_sequence_forward(const DenseMatrix& z, const GruParams& p,
                                         GruTrace* trace) {
  check_params(p);
  if (z.rows != p.input) {
    throw std::invalid_argument("gru_sequence_forward: input width " +
                                std::to_string(z.rows) + ", params expect " +
                                std::to_string(p.input));
  }
  if (z.cols == 0) throw std::invalid_argument("gru_sequence_forward: empty sequence");

  const std::size_t g = p.hidden;
  const std::size_t t_len = z.cols;
  GruTrace local;
  GruTrace& tr = trace ? *trace : local;
  tr.steps = t_len;
  tr.h = DenseMatrix(t_len, g);
  tr.reset = DenseMatrix(t_len, g);
  tr.update = DenseMatrix(t_len, g);
  tr.cand = DenseMatrix(t_len, g);

  std::vector<double> h(g, 0.0);  // h_0 = 0
  std::vector<double> x(z.rows);
  for (std::size_t t = 0; t < t_len; ++t) {
    for (std::size_t f = 0; f < z.rows; ++f) x[f] = z(f, t);
    gru_cell_forward(x.data(), h.data(), p, tr.h.row_ptr(t), tr.reset.row_ptr(t),
                     tr.update.row_ptr(t), tr.cand.row_ptr(t));
    for (std::size_t i = 0; i < g; ++i) h[i] = tr.h(t, i);
  }
  return h;
}

GruGrads make_gru_grads(const GruParams& p) {
  GruGrads grads;
  const std::size_t width = p.hidden + p.input;
  grads.w_reset = DenseMatrix(p.hidden, width);
  grads.w_update = DenseMatrix(p.hidden, width);
  grads.w_cand = DenseMatrix(p.hidden, width);
  grads.b_reset = DenseMatrix(p.hidden, 1);
  grads.b_update = DenseMatrix(p.hidden, 1);
  grads.b_cand = DenseMatrix(p.hidden, 1);
  return grads;
}

void gru_backward(const std::vector<double>& grad_ht, const GruTrace& trace,
                  const DenseMatrix& z, const GruParams& p, DenseMatrix* grad_z,
                  GruGrads* grads) {
  check_params(p);
  const std::size_t g = p.hidden;
  const std::size_t n = p.input;
  const std::size_t t_len = trace.steps;
  if (grad_ht.size() != g) {
    throw std::invalid_argument("gru_backward: grad_ht length mismatch");
  }
  if (z.rows != n || z.cols != t_len || trace.h.rows != t_len) {
    throw std::invalid_argument("gru_backward: trace does not match input");
  }
  if (grad_z) *grad_z = DenseMatrix(n, t_len);

  const std::vector<double> zeros(g, 0.0);
  std::vector<double> dh(grad_ht);
  std::vector<double> concat(g + n), concat_cand(g + n);
  std::vector<double> da_r(g), da_u(g), da_c(g), dconcat(g + n);
  std::vector<double> x(n);

  for (std::size_t t = t_len; t-- > 0;) {
    const double* h_prev = (t == 0) ? zeros.data() : trace.h.row_ptr(t - 1);
    const double* r = trace.reset.row_ptr(t);
    const double* u = trace.update.row_ptr(t);
    const double* c = trace.cand.row_ptr(t);
    for (std::size_t f = 0; f < n; ++f) x[f] = z(f, t);

    for (std::size_t i = 0; i < g; ++i) concat[i] = h_prev[i];
    for (std::size_t f = 0; f < n; ++f) concat[g + f] = x[f];
    for (std::size_t i = 0; i < g; ++i) concat_cand[i] = r[i] * h_prev[i];
    for (std::size_t f = 0; f < n; ++f) concat_cand[g + f] = x[f];

    std::vector<double> dh_prev(g, 0.0);
    for (std::size_t i = 0; i < g; ++i) {
      const double du = dh[i] * (h_prev[i] - c[i]);
      const double dc = dh[i] * (1.0 - u[i]);
      dh_prev[i] = dh[i] * u[i];
      da_u[i] = du * u[i] * (1.0 - u[i]);
      da_c[i] = dc * (1.0 - c[i] * c[i]);
    }

    if (grads) {
      outer_add(grads->w_cand, da_c.data(), concat_cand.data());
      for (std::size_t i = 0; i < g; ++i) grads->b_cand(i, 0) += da_c[i];
    }
    std::fill(dconcat.begin(), dconcat.end(), 0.0);
    matvec_transpose_add(p.w_cand, da_c.data(), dconcat.data());
    for (std::size_t i = 0; i < g; ++i) {
      const double d_rh = dconcat[i];
      da_r[i] = d_rh * h_prev[i] * r[i] * (1.0 - r[i]);
      dh_prev[i] += d_rh * r[i];
    }
    std::vector<double> dx(n);
    for (std::size_t f = 0; f < n; ++f) dx[f] = dconcat[g + f];

    if (grads) {
      outer_add(grads->w_reset, da_r.data(), concat.data());
      outer_add(grads->w_update, da_u.data(), concat.data());
      for (std::size_t i = 0; i < g; ++i) {
        grads->b_reset(i, 0) += da_r[i];
        grads->b_update(i, 0) += da_u[i];
      }
    }
    std::fill(dconcat.begin(), dconcat.end(), 0.0);
    matvec_transpose_add(p.w_reset, da_r.data(), dconcat.data());
    matvec_transpose_add(p.w_update, da_u.data(), dconcat.data());
    for (std::size_t i = 0; i < g; ++i) dh_prev[i] += dconcat[i];
    for (std::size_t f = 0; f < n; ++f) dx[f] += dconcat[g + f];

    if (grad_z) {
      for (std::size_t f = 0; f < n; ++f) (*grad_z)(f, t) = dx[f];
    }
    dh = std::move(dh_prev);
  }
}

}  // namespace jr
