#pragma once

// Row-major dense matrices sized for GNN workloads: tall-skinny operands
// (N x hidden) against small square factors.  Loops are ordered so the inner
// stride-1 axis is the one the compiler vectorises.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace ugnn {

struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {
    if (r < 0 || c < 0) throw std::invalid_argument("Matrix: negative dimension");
  }

  double* row(int i) { return data.data() + static_cast<std::size_t>(i) * cols; }
  const double* row(int i) const {
    return data.data() + static_cast<std::size_t>(i) * cols;
  }
  double& at(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
  double at(int i, int j) const {
    return data[static_cast<std::size_t>(i) * cols + j];
  }

  void fill(double v) { data.assign(data.size(), v); }

  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

  bool operator==(const Matrix& o) const = default;
};

// C = A * B
inline void matmul(const Matrix& a, const Matrix& b, Matrix& c) {
  if (a.cols != b.rows) throw std::invalid_argument("matmul: inner dimensions differ");
  c = Matrix(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    const double* ai = a.row(i);
    double* ci = c.row(i);
    for (int k = 0; k < a.cols; ++k) {
      const double aik = ai[k];
      if (aik == 0.0) continue;
      const double* bk = b.row(k);
      for (int j = 0; j < b.cols; ++j) ci[j] += aik * bk[j];
    }
  }
}

// C = A^T * B  (A is tall, C is small)
inline void matmul_tn(const Matrix& a, const Matrix& b, Matrix& c) {
  if (a.rows != b.rows) throw std::invalid_argument("matmul_tn: row counts differ");
  c = Matrix(a.cols, b.cols);
  for (int r = 0; r < a.rows; ++r) {
    const double* ar = a.row(r);
    const double* br = b.row(r);
    for (int i = 0; i < a.cols; ++i) {
      const double ari = ar[i];
      if (ari == 0.0) continue;
      double* ci = c.row(i);
      for (int j = 0; j < b.cols; ++j) ci[j] += ari * br[j];
    }
  }
}

// C = A * B^T
inline void matmul_nt(const Matrix& a, const Matrix& b, Matrix& c) {
  if (a.cols != b.cols) throw std::invalid_argument("matmul_nt: column counts differ");
  c = Matrix(a.rows, b.rows);
  for (int i = 0; i < a.rows; ++i) {
    const double* ai = a.row(i);
    double* ci = c.row(i);
    for (int j = 0; j < b.rows; ++j) {
      const double* bj = b.row(j);
      double s = 0.0;
      for (int k = 0; k < a.cols; ++k) s += ai[k] * bj[k];
      ci[j] = s;
    }
  }
}

inline double log_sum_exp(const double* v, int n) {
  double m = v[0];
  for (int i = 1; i < n; ++i) m = std::max(m, v[i]);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::exp(v[i] - m);
  return m + std::log(s);
}

inline void softmax_row(const double* in, double* out, int n) {
  double m = in[0];
  for (int i = 1; i < n; ++i) m = std::max(m, in[i]);
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    out[i] = std::exp(in[i] - m);
    s += out[i];
  }
  for (int i = 0; i < n; ++i) out[i] /= s;
}

inline int argmax_row(const double* v, int n) {
  int best = 0;
  for (int i = 1; i < n; ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

inline bool all_finite(const Matrix& m) {
  for (double v : m.data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace ugnn
