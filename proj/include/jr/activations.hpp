#pragma once

#include <cmath>

namespace jr {

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

/// Subgradient with relu'(0) = 0.
inline double relu_grad(double x) { return x > 0.0 ? 1.0 : 0.0; }

/// Numerically safe logistic; saturates cleanly for |x| > 40.
inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double tanh_act(double x) { return std::tanh(x); }

}  // namespace jr
