#include "jr/gradcheck.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace jr {

std::vector<double> finite_diff_grad(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> theta, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("finite_diff_grad: eps must be > 0");
  std::vector<double> grad(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double orig = theta[i];
    theta[i] = orig + eps;
    const double fp = f(theta);
    theta[i] = orig - eps;
    const double fm = f(theta);
    theta[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw std::runtime_error("finite_diff_grad: non-finite f at coordinate " +
                               std::to_string(i));
    }
    grad[i] = (fp - fm) / (2.0 * eps);
  }
  return grad;
}

double max_relative_error(const std::vector<double>& a, const std::vector<double>& b,
                          double scale_floor) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("max_relative_error: length mismatch");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::fabs(a[i]), std::fabs(b[i]), scale_floor});
    worst = std::max(worst, std::fabs(a[i] - b[i]) / scale);
  }
  return worst;
}

}  // namespace jr
