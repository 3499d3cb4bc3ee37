#include "jr/matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace jr {

bool DenseMatrix::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string shape_string(const DenseMatrix& m) {
  return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols != b.rows) {
    throw std::invalid_argument("matmul: dimension mismatch " + shape_string(a) +
                                " * " + shape_string(b));
  }
  DenseMatrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = a.row_ptr(i);
    double* orow = out.row_ptr(i);
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = b.row_ptr(k);
      for (std::size_t j = 0; j < b.cols; ++j) {
        orow[j] += aik * brow[j];
      }
    }
  }
  return out;
}

void matvec(const DenseMatrix& w, const double* x, double* out) {
  for (std::size_t i = 0; i < w.rows; ++i) {
    const double* row = w.row_ptr(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < w.cols; ++j) acc += row[j] * x[j];
    out[i] = acc;
  }
}

void matvec_transpose_add(const DenseMatrix& w, const double* y, double* out) {
  for (std::size_t i = 0; i < w.rows; ++i) {
    const double yi = y[i];
    if (yi == 0.0) continue;
    const double* row = w.row_ptr(i);
    for (std::size_t j = 0; j < w.cols; ++j) out[j] += yi * row[j];
  }
}

void outer_add(DenseMatrix& w, const double* y, const double* x, double a) {
  for (std::size_t i = 0; i < w.rows; ++i) {
    const double s = a * y[i];
    if (s == 0.0) continue;
    double* row = w.row_ptr(i);
    for (std::size_t j = 0; j < w.cols; ++j) row[j] += s * x[j];
  }
}

}  // namespace jr
