#pragma once

#include <functional>
#include <vector>

namespace jr {

/// Central-difference gradient of f at theta: (f(t+e_i*eps) - f(t-e_i*eps)) / (2 eps).
/// Throws if f returns a non-finite value, naming the offending coordinate.
std::vector<double> finite_diff_grad(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> theta, double eps = 1e-5);

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, scale_floor)
double max_relative_error(const std::vector<double>& a, const std::vector<double>& b,
                          double scale_floor = 1e-3);

}  // namespace jr
