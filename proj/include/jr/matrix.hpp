#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace jr {

/// Row-major dense matrix of doubles. The single numeric container for all
/// tensors in the project; vectors are stored as n x 1 matrices.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  double* row_ptr(std::size_t i) { return data.data() + i * cols; }
  const double* row_ptr(std::size_t i) const { return data.data() + i * cols; }

  std::size_t size() const { return data.size(); }
  bool same_shape(const DenseMatrix& o) const { return rows == o.rows && cols == o.cols; }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }
  bool all_finite() const;
};

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);

/// out = W x, where x has length W.cols and out has length W.rows.
void matvec(const DenseMatrix& w, const double* x, double* out);

/// out += W^T y, where y has length W.rows and out has length W.cols.
void matvec_transpose_add(const DenseMatrix& w, const double* y, double* out);

/// W += a * (y outer x), y length W.rows, x length W.cols.
void outer_add(DenseMatrix& w, const double* y, const double* x, double a = 1.0);

std::string shape_string(const DenseMatrix& m);

}  // namespace jr
