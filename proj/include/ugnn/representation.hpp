#pragma once

// Builds the symmetric matrices the GNNs run on.  The unfolded form places p
// global node rows ahead of n*T temporal rows and connects them through the
// dilation [[0, A], [A^T, 0]] of the column-concatenated snapshots; the
// block-diagonal form stacks the snapshots on the diagonal.  Temporal rows
// are time-major: pair (i, t) lives at offset t*n + i.

#include <stdexcept>
#include <variant>
#include <vector>

#include "ugnn/graph.hpp"
#include "ugnn/sparse.hpp"

namespace ugnn {

enum class RepresentationKind { unfolded, block_diagonal };

inline const char* representation_name(RepresentationKind k) {
  return k == RepresentationKind::unfolded ? "unfolded" : "block_diagonal";
}

struct FeatureMatrix {
  enum class Kind { identity, dense };
  Kind kind = Kind::identity;
  int dim = 0;  // identity: N; dense: feature width c
  Matrix dense;

  static FeatureMatrix identity(int n_rows) { return {Kind::identity, n_rows, {}}; }

  Matrix materialize(int n_rows) const {
    if (kind == Kind::dense) return dense;
    Matrix eye(n_rows, n_rows);
    for (int i = 0; i < n_rows; ++i) eye.at(i, i) = 1.0;
    return eye;
  }
};

struct RowRef {
  bool global = false;
  int node = 0;
  int time = 0;  // unused for global rows
};

struct Representation {
  RepresentationKind kind = RepresentationKind::unfolded;
  int n = 0;
  int p = 0;
  int T = 0;
  SparseMatrix matrix;  // symmetric N x N
  FeatureMatrix features;

  int N() const {
    int temporal = n * T;
    return kind == RepresentationKind::unfolded ? p + temporal : temporal;
  }

  int global_row(int node) const {
    if (kind != RepresentationKind::unfolded) {
      throw std::logic_error("global rows exist only in the unfolded representation");
    }
    if (node < 0 || node >= p) throw std::out_of_range("global_row: node outside [0, p)");
    return node;
  }

  int row_of(NodeTimePair w) const {
    if (w.node < 0 || w.node >= n || w.time < 0 || w.time >= T) {
      throw std::out_of_range("row_of: pair outside representation");
    }
    int base = kind == RepresentationKind::unfolded ? p : 0;
    return base + w.time * n + w.node;
  }

  RowRef row_ref(int row) const {
    if (row < 0 || row >= N()) throw std::out_of_range("row_ref: row outside matrix");
    if (kind == RepresentationKind::unfolded && row < p) return {true, row, 0};
    int r = kind == RepresentationKind::unfolded ? row - p : row;
    return {false, r % n, r / n};
  }
};

inline Representation unfold(const DynamicGraph& g) {
  const int temporal = g.n * g.T;
  const int N = g.p + temporal;
  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(2) * g.total_edges());
  for (int t = 0; t < g.T; ++t) {
    const SparseMatrix& s = g.snapshots[t];
    for (int j = 0; j < g.n; ++j) {
      const int tcol = g.p + t * g.n + j;
      auto rs = s.column_rows(j);
      auto vs = s.column_values(j);
      for (std::size_t k = 0; k < rs.size(); ++k) {
        trip.push_back({rs[k], tcol, vs[k]});
        trip.push_back({tcol, rs[k], vs[k]});
      }
    }
  }
  Representation rep;
  rep.kind = RepresentationKind::unfolded;
  rep.n = g.n;
  rep.p = g.p;
  rep.T = g.T;
  rep.matrix = SparseMatrix::from_triplets(N, N, std::move(trip));
  rep.features = FeatureMatrix::identity(N);
  return rep;
}

// Snapshots must be square.  A directed graph is only accepted with
// symmetrize set, in which case each snapshot becomes max(A, A^T).
inline Representation block_diagonal(const DynamicGraph& g, bool symmetrize = false) {
  if (g.p != g.n) {
    throw std::invalid_argument("block_diagonal: snapshots must be square");
  }
  if (g.directed && !symmetrize) {
    throw std::invalid_argument("block_diagonal: directed input requires symmetrize");
  }
  const int N = g.n * g.T;
  std::vector<Triplet> trip;
  for (int t = 0; t < g.T; ++t) {
    const SparseMatrix* s = &g.snapshots[t];
    SparseMatrix sym;
    if (g.directed) {
      SparseMatrix st = s->transposed();
      std::vector<Triplet> merged;
      for (int j = 0; j < g.n; ++j) {
        auto ra = s->column_rows(j);
        auto va = s->column_values(j);
        auto rb = st.column_rows(j);
        auto vb = st.column_values(j);
        std::size_t a = 0, b = 0;
        while (a < ra.size() || b < rb.size()) {
          if (b == rb.size() || (a < ra.size() && ra[a] < rb[b])) {
            merged.push_back({ra[a], j, va[a]});
            ++a;
          } else if (a == ra.size() || rb[b] < ra[a]) {
            merged.push_back({rb[b], j, vb[b]});
            ++b;
          } else {
            merged.push_back({ra[a], j, std::max(va[a], vb[b])});
            ++a;
            ++b;
          }
        }
      }
      sym = SparseMatrix::from_triplets(g.n, g.n, std::move(merged));
      s = &sym;
    }
    const int base = t * g.n;
    for (int j = 0; j < g.n; ++j) {
      auto rs = s->column_rows(j);
      auto vs = s->column_values(j);
      for (std::size_t k = 0; k < rs.size(); ++k) {
        trip.push_back({base + rs[k], base + j, vs[k]});
      }
    }
  }
  Representation rep;
  rep.kind = RepresentationKind::block_diagonal;
  rep.n = g.n;
  rep.p = g.p;
  rep.T = g.T;
  rep.matrix = SparseMatrix::from_triplets(N, N, std::move(trip));
  rep.features = FeatureMatrix::identity(N);
  return rep;
}

// Identity attributes give one-hot rows; explicit attributes fill temporal
// rows with the pair's vector and leave global rows at zero.
inline FeatureMatrix make_features(const Representation& rep, const AttributeTable& attrs) {
  if (attrs.mode == AttributeTable::Mode::identity) {
    return FeatureMatrix::identity(rep.N());
  }
  if (attrs.n != rep.n || attrs.T != rep.T) {
    throw std::invalid_argument("make_features: attribute table shape mismatch");
  }
  FeatureMatrix f;
  f.kind = FeatureMatrix::Kind::dense;
  f.dim = attrs.c;
  f.dense = Matrix(rep.N(), attrs.c);
  for (int t = 0; t < rep.T; ++t) {
    for (int i = 0; i < rep.n; ++i) {
      NodeTimePair w{i, t};
      const double* src = attrs.row(w);
      double* dst = f.dense.row(rep.row_of(w));
      std::copy(src, src + attrs.c, dst);
    }
  }
  return f;
}

// D^{-1/2} (A + I) D^{-1/2} with weighted degrees of A + I.  Rows that are
// isolated in A keep exactly their unit self-loop.
inline SparseMatrix normalize_for_gcn(const SparseMatrix& a) {
  if (a.rows != a.cols) throw std::invalid_argument("normalize_for_gcn: matrix not square");
  std::vector<Triplet> trip;
  trip.reserve(a.row_idx.size() + a.rows);
  for (int j = 0; j < a.cols; ++j) {
    auto rs = a.column_rows(j);
    auto vs = a.column_values(j);
    for (std::size_t k = 0; k < rs.size(); ++k) trip.push_back({rs[k], j, vs[k]});
  }
  for (int i = 0; i < a.rows; ++i) trip.push_back({i, i, 1.0});
  SparseMatrix tilde = SparseMatrix::from_triplets(a.rows, a.cols, std::move(trip));

  std::vector<double> degree(a.rows, 0.0);
  for (int j = 0; j < tilde.cols; ++j) {
    for (double v : tilde.column_values(j)) degree[j] += v;
  }
  std::vector<double> dinv(a.rows);
  for (int i = 0; i < a.rows; ++i) dinv[i] = 1.0 / std::sqrt(degree[i]);

  for (int j = 0; j < tilde.cols; ++j) {
    auto rs = tilde.column_rows(j);
    for (std::size_t k = 0; k < rs.size(); ++k) {
      tilde.values[tilde.col_ptr[j] + k] *= dinv[rs[k]] * dinv[j];
    }
  }
  return tilde;
}

inline SparseMatrix normalize_for_gcn(const Representation& rep) {
  if (!rep.matrix.is_symmetric()) {
    throw std::invalid_argument("normalize_for_gcn: representation matrix not symmetric");
  }
  return normalize_for_gcn(rep.matrix);
}

// Model outputs split back into global and temporal halves.  V row for pair
// (i, t) sits at t*n + i; U is empty for block-diagonal inputs.
struct EmbeddingMatrix {
  RepresentationKind kind = RepresentationKind::unfolded;
  int n = 0;
  int p = 0;
  int T = 0;
  Matrix u_hat;  // p x d (unfolded only)
  Matrix v_hat;  // (n*T) x d

  const double* v_row(NodeTimePair w) const {
    if (w.node < 0 || w.node >= n || w.time < 0 || w.time >= T) {
      throw std::out_of_range("v_row: pair outside embedding");
    }
    return v_hat.row(w.time * n + w.node);
  }
};

inline EmbeddingMatrix split_embedding(const Matrix& rows, const Representation& rep) {
  if (rows.rows != rep.N()) {
    throw std::invalid_argument("split_embedding: row count differs from representation");
  }
  EmbeddingMatrix e;
  e.kind = rep.kind;
  e.n = rep.n;
  e.p = rep.kind == RepresentationKind::unfolded ? rep.p : 0;
  e.T = rep.T;
  const int base = e.p;
  e.u_hat = Matrix(e.p, rows.cols);
  e.v_hat = Matrix(rep.n * rep.T, rows.cols);
  for (int i = 0; i < e.p; ++i) {
    std::copy(rows.row(i), rows.row(i) + rows.cols, e.u_hat.row(i));
  }
  for (int r = 0; r < rep.n * rep.T; ++r) {
    std::copy(rows.row(base + r), rows.row(base + r) + rows.cols, e.v_hat.row(r));
  }
  return e;
}

}  // namespace ugnn
