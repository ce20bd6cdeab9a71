#pragma once

// Compressed sparse column matrices.  Column access is the hot path: dynamic
// graphs are consumed column-by-column (one column per node-time pair), and
// CSC keeps that contiguous.  Duplicate triplets sum; exact zeros after
// summing are not stored.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "ugnn/dense.hpp"

namespace ugnn {

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

struct SparseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<std::int64_t> col_ptr;  // size cols + 1
  std::vector<int> row_idx;           // ascending within each column
  std::vector<double> values;

  SparseMatrix() : col_ptr(1, 0) {}
  SparseMatrix(int r, int c) : rows(r), cols(c), col_ptr(static_cast<std::size_t>(c) + 1, 0) {
    if (r < 0 || c < 0) throw std::invalid_argument("SparseMatrix: negative dimension");
  }

  std::int64_t nnz() const { return static_cast<std::int64_t>(row_idx.size()); }

  std::span<const int> column_rows(int j) const {
    return {row_idx.data() + col_ptr[j], static_cast<std::size_t>(col_ptr[j + 1] - col_ptr[j])};
  }
  std::span<const double> column_values(int j) const {
    return {values.data() + col_ptr[j], static_cast<std::size_t>(col_ptr[j + 1] - col_ptr[j])};
  }

  bool operator==(const SparseMatrix& o) const = default;

  static SparseMatrix from_triplets(int rows, int cols, std::vector<Triplet> t) {
    for (const Triplet& e : t) {
      if (e.row < 0 || e.row >= rows || e.col < 0 || e.col >= cols) {
        throw std::out_of_range("SparseMatrix: triplet outside matrix");
      }
      if (!std::isfinite(e.value)) {
        throw std::invalid_argument("SparseMatrix: non-finite value");
      }
    }
    std::sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
      return std::tie(a.col, a.row) < std::tie(b.col, b.row);
    });
    SparseMatrix m(rows, cols);
    std::size_t i = 0;
    for (int c = 0; c < cols; ++c) {
      m.col_ptr[c] = m.nnz();
      while (i < t.size() && t[i].col == c) {
        int r = t[i].row;
        double v = 0.0;
        while (i < t.size() && t[i].col == c && t[i].row == r) {
          v += t[i].value;
          ++i;
        }
        if (v != 0.0) {
          m.row_idx.push_back(r);
          m.values.push_back(v);
        }
      }
    }
    m.col_ptr[cols] = m.nnz();
    return m;
  }

  SparseMatrix transposed() const {
    std::vector<Triplet> t;
    t.reserve(row_idx.size());
    for (int c = 0; c < cols; ++c) {
      auto rs = column_rows(c);
      auto vs = column_values(c);
      for (std::size_t k = 0; k < rs.size(); ++k) t.push_back({c, rs[k], vs[k]});
    }
    return from_triplets(cols, rows, std::move(t));
  }

  bool is_symmetric() const { return rows == cols && *this == transposed(); }

  Matrix to_dense() const {
    Matrix d(rows, cols);
    for (int c = 0; c < cols; ++c) {
      auto rs = column_rows(c);
      auto vs = column_values(c);
      for (std::size_t k = 0; k < rs.size(); ++k) d.at(rs[k], c) = vs[k];
    }
    return d;
  }
};

// Y = A * X with X, Y dense.  Iterating columns of A visits X rows in order.
inline void spmm(const SparseMatrix& a, const Matrix& x, Matrix& y) {
  if (a.cols != x.rows) throw std::invalid_argument("spmm: inner dimensions differ");
  y = Matrix(a.rows, x.cols);
  const int w = x.cols;
  for (int j = 0; j < a.cols; ++j) {
    const double* xj = x.row(j);
    auto rs = a.column_rows(j);
    auto vs = a.column_values(j);
    for (std::size_t k = 0; k < rs.size(); ++k) {
      double* yi = y.row(rs[k]);
      const double v = vs[k];
      for (int c = 0; c < w; ++c) yi[c] += v * xj[c];
    }
  }
}

// Symmetric permutation B = P A P^T with B[perm[i]][perm[j]] = A[i][j].
inline SparseMatrix permute_symmetric(const SparseMatrix& a, const std::vector<int>& perm) {
  if (static_cast<int>(perm.size()) != a.rows || a.rows != a.cols) {
    throw std::invalid_argument("permute_symmetric: size mismatch");
  }
  std::vector<Triplet> t;
  t.reserve(a.row_idx.size());
  for (int c = 0; c < a.cols; ++c) {
    auto rs = a.column_rows(c);
    auto vs = a.column_values(c);
    for (std::size_t k = 0; k < rs.size(); ++k) t.push_back({perm[rs[k]], perm[c], vs[k]});
  }
  return SparseMatrix::from_triplets(a.rows, a.cols, std::move(t));
}

}  // namespace ugnn
