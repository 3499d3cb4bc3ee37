#pragma once

#include <cstddef>
#include <vector>

#include "jr/matrix.hpp"

namespace jr {

/// Gated recurrent unit. Gate matrices act on the concatenation [h_prev, x_t]
/// in that order, so columns 0..hidden-1 multiply h_prev and the remaining
/// columns multiply the input.
struct GruParams {
  std::size_t input = 0;
  std::size_t hidden = 0;
  DenseMatrix w_reset, w_update, w_cand;  // hidden x (hidden + input)
  DenseMatrix b_reset, b_update, b_cand;  // hidden x 1
};

/// Per-step activations retained for backpropagation through time.
/// h[t] is the state after step t; h_0 is the zero vector.
struct GruTrace {
  std::size_t steps = 0;
  DenseMatrix h;        // T x hidden
  DenseMatrix reset;    // T x hidden
  DenseMatrix update;   // T x hidden
  DenseMatrix cand;     // T x hidden
};

/// One step:
///   r = sigmoid(W_R [h_prev, x] + b_R)
///   u = sigmoid(W_U [h_prev, x] + b_U)
///   c = tanh(W_H [r * h_prev, x] + b_H)
///   h = u * h_prev + (1 - u) * c
void gru_cell_forward(const double* x, const double* h_prev, const GruParams& p,
                      double* h_out, double* r_out, double* u_out, double* c_out);

/// Runs the cell over the columns of z (input x T) from h_0 = 0 and returns
/// the final state. The trace, when requested, holds every intermediate.
std::vector<double> gru_sequence_forward(const DenseMatrix& z, const GruParams& p,
                                         GruTrace* trace = nullptr);

struct GruGrads {
  DenseMatrix w_reset, w_update, w_cand;
  DenseMatrix b_reset, b_update, b_cand;
};

GruGrads make_gru_grads(const GruParams& p);

/// BPTT from a gradient on the final state. Parameter gradients are
/// accumulated into `grads`; grad_z, when non-null, receives the input
/// gradient (input x T).
void gru_backward(const std::vector<double>& grad_ht, const GruTrace& trace,
                  const DenseMatrix& z, const GruParams& p, DenseMatrix* grad_z,
                  GruGrads* grads);

}  // namespace jr
