#pragma once

// Dynamic graphs and the bookkeeping around node-time pairs: which pairs are
// in play, what role each one has, and which labels a given stage of the
// pipeline is allowed to read.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ugnn/sparse.hpp"

namespace ugnn {

struct NodeTimePair {
  int node = 0;
  int time = 0;
  auto operator<=>(const NodeTimePair&) const = default;
};

enum class Role : std::uint8_t { training, validation, calibration, test };

inline const char* role_name(Role r) {
  switch (r) {
    case Role::training: return "training";
    case Role::validation: return "validation";
    case Role::calibration: return "calibration";
    case Role::test: return "test";
  }
  return "?";
}

// A sequence of T snapshots, each a sparse p x n matrix over a shared node
// set.  Undirected graphs have p == n and symmetric snapshots; directed
// graphs store an edge source -> target at (row = target, col = source), so a
// node's column holds its outgoing profile.
struct DynamicGraph {
  int p = 0;  // rows per snapshot
  int n = 0;  // columns per snapshot (one per node)
  int T = 0;
  bool directed = false;
  bool weighted = false;
  std::vector<SparseMatrix> snapshots;

  DynamicGraph() = default;
  DynamicGraph(std::vector<SparseMatrix> snaps, bool directed_, bool weighted_)
      : directed(directed_), weighted(weighted_), snapshots(std::move(snaps)) {
    if (snapshots.empty()) throw std::invalid_argument("DynamicGraph: no snapshots");
    p = snapshots[0].rows;
    n = snapshots[0].cols;
    T = static_cast<int>(snapshots.size());
    for (const SparseMatrix& s : snapshots) {
      if (s.rows != p || s.cols != n) {
        throw std::invalid_argument("DynamicGraph: snapshot dimensions differ");
      }
      for (double v : s.values) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
          throw std::invalid_argument("DynamicGraph: negative or non-finite weight");
        }
      }
    }
    if (!directed) {
      for (const SparseMatrix& s : snapshots) {
        if (!s.is_symmetric()) {
          throw std::invalid_argument("DynamicGraph: undirected snapshot not symmetric");
        }
      }
    }
  }

  bool operator==(const DynamicGraph&) const = default;

  std::int64_t total_edges() const {
    std::int64_t e = 0;
    for (const SparseMatrix& s : snapshots) e += s.nnz();
    return e;
  }
};

struct ColumnView {
  std::span<const int> rows;
  std::span<const double> values;
};

inline ColumnView column_of(const DynamicGraph& g, NodeTimePair w) {
  if (w.time < 0 || w.time >= g.T || w.node < 0 || w.node >= g.n) {
    throw std::out_of_range("column_of: pair outside graph");
  }
  const SparseMatrix& s = g.snapshots[w.time];
  return {s.column_rows(w.node), s.column_values(w.node)};
}

// Ordered list of eligible pairs with roles.  Calibration and test pairs
// occupy the first m positions; the permutation machinery acts on exactly
// that prefix.
struct NodeTimeIndex {
  std::vector<NodeTimePair> pairs;
  std::vector<Role> roles;
  int m = 0;

  void validate_shape() const {
    if (pairs.size() != roles.size()) {
      throw std::invalid_argument("NodeTimeIndex: pairs/roles size mismatch");
    }
    if (m < 0 || m > static_cast<int>(pairs.size())) {
      throw std::invalid_argument("NodeTimeIndex: m out of range");
    }
    for (std::size_t i = 0; i < roles.size(); ++i) {
      const bool pool = roles[i] == Role::calibration || roles[i] == Role::test;
      if (pool != (static_cast<int>(i) < m)) {
        throw std::invalid_argument(
            "NodeTimeIndex: calibration/test pairs must occupy the first m positions");
      }
    }
  }

  std::array<int, 4> role_counts() const {
    std::array<int, 4> c{0, 0, 0, 0};
    for (Role r : roles) ++c[static_cast<int>(r)];
    return c;
  }

  std::vector<NodeTimePair> pairs_with_role(Role r) const {
    std::vector<NodeTimePair> out;
    for (std::size_t i = 0; i < roles.size(); ++i) {
      if (roles[i] == r) out.push_back(pairs[i]);
    }
    return out;
  }
};

// Class labels over node-time pairs; absent entries are unlabeled.
struct LabelTable {
  int n = 0;
  int T = 0;
  int d = 0;
  std::vector<std::string> class_names;  // size d
  std::vector<int> label;                // size n*T, -1 = unlabeled

  LabelTable() = default;
  LabelTable(int n_, int T_, int d_)
      : n(n_), T(T_), d(d_), label(static_cast<std::size_t>(n_) * T_, -1) {
    if (n_ <= 0 || T_ <= 0 || d_ < 0) throw std::invalid_argument("LabelTable: bad shape");
  }

  std::size_t slot(NodeTimePair w) const {
    if (w.node < 0 || w.node >= n || w.time < 0 || w.time >= T) {
      throw std::out_of_range("LabelTable: pair outside table");
    }
    return static_cast<std::size_t>(w.time) * n + w.node;
  }

  void set(NodeTimePair w, int cls) {
    if (cls < 0 || cls >= d) throw std::out_of_range("LabelTable: class outside [0, d)");
    label[slot(w)] = cls;
  }

  std::optional<int> get(NodeTimePair w) const {
    int v = label[slot(w)];
    if (v < 0) return std::nullopt;
    return v;
  }

  bool operator==(const LabelTable&) const = default;
};

// Label access restricted to a set of roles.  Training code receives a view
// over {training, validation} and has no way to reach calibration or test
// labels; the evaluation stage builds its own views.
class RoleLabelView {
 public:
  RoleLabelView(const LabelTable& labels, const NodeTimeIndex& index,
                std::initializer_list<Role> allowed)
      : labels_(&labels), allowed_(labels.n * labels.T, false) {
    for (std::size_t i = 0; i < index.pairs.size(); ++i) {
      for (Role r : allowed) {
        if (index.roles[i] == r) allowed_[labels.slot(index.pairs[i])] = true;
      }
    }
  }

  int class_of(NodeTimePair w) const {
    if (!allowed_[labels_->slot(w)]) {
      throw std::logic_error("label access denied for pair outside allowed roles");
    }
    auto v = labels_->get(w);
    if (!v) throw std::logic_error("label requested for unlabeled pair");
    return *v;
  }

  int class_count() const { return labels_->d; }

 private:
  const LabelTable* labels_;
  std::vector<char> allowed_;
};

// Optional per-pair feature vectors; identity mode stores nothing and the
// models treat features as one-hot rows.
struct AttributeTable {
  enum class Mode { identity, explicit_features };
  Mode mode = Mode::identity;
  int n = 0;
  int T = 0;
  int c = 0;
  std::vector<double> data;  // (n*T) x c row-major, pair (i,t) at row t*n+i

  static AttributeTable identity() { return {}; }

  static AttributeTable explicit_features(int n, int T, int c) {
    AttributeTable a;
    a.mode = Mode::explicit_features;
    a.n = n;
    a.T = T;
    a.c = c;
    a.data.assign(static_cast<std::size_t>(n) * T * c, 0.0);
    return a;
  }

  double* row(NodeTimePair w) {
    return data.data() + (static_cast<std::size_t>(w.time) * n + w.node) * c;
  }
  const double* row(NodeTimePair w) const {
    return data.data() + (static_cast<std::size_t>(w.time) * n + w.node) * c;
  }

  bool operator==(const AttributeTable&) const = default;
};

// A graph with its labels and features; the unit everything downstream
// consumes.
struct Dataset {
  DynamicGraph graph;
  LabelTable labels;
  AttributeTable attributes;

  void validate() const {
    if (labels.n != graph.n || labels.T != graph.T)
      throw std::invalid_argument("Dataset: label table does not match graph");
    if (attributes.mode == AttributeTable::Mode::explicit_features &&
        (attributes.n != graph.n || attributes.T != graph.T))
      throw std::invalid_argument("Dataset: attribute table does not match graph");
  }
};

// All pairs a split may assign: labeled and structurally present.  Order is
// time-major, node ascending, so the universe itself is deterministic.
inline std::vector<NodeTimePair> eligible_pairs(const Dataset& data) {
  std::vector<NodeTimePair> pairs;
  for (int t = 0; t < data.graph.T; ++t) {
    for (int i = 0; i < data.graph.n; ++i) {
      const NodeTimePair pair{i, t};
      if (!data.labels.get(pair)) continue;
      if (column_of(data.graph, pair).rows.empty()) continue;
      pairs.push_back(pair);
    }
  }
  return pairs;
}

// Bijection over the first m index positions.
struct IndexPermutation {
  std::vector<int> map;  // position l receives data from position map[l]

  explicit IndexPermutation(std::vector<int> source_of) : map(std::move(source_of)) {
    std::vector<char> seen(map.size(), false);
    for (int s : map) {
      if (s < 0 || s >= static_cast<int>(map.size()) || seen[s]) {
        throw std::invalid_argument("IndexPermutation: not a bijection");
      }
      seen[s] = true;
    }
  }

  static IndexPermutation identity(int m) {
    std::vector<int> v(m);
    for (int i = 0; i < m; ++i) v[i] = i;
    return IndexPermutation(std::move(v));
  }

  int size() const { return static_cast<int>(map.size()); }

  IndexPermutation inverse() const {
    std::vector<int> inv(map.size());
    for (int l = 0; l < size(); ++l) inv[map[l]] = l;
    return IndexPermutation(std::move(inv));
  }
};

struct PermutedData {
  DynamicGraph graph;
  LabelTable labels;
  AttributeTable attributes;
};

// Moves data among the first m pairs: position l receives the column, label
// and attributes that previously belonged to pair at position perm.map[l].
// Only the listed columns change; every other column is untouched.  Permuted
// snapshots of an undirected graph are generally not symmetric, so the copy
// is returned with the directed flag raised; composing with the inverse
// permutation restores the input exactly.
inline PermutedData apply_permutation(const DynamicGraph& g, const NodeTimeIndex& index,
                                      const LabelTable& labels, const AttributeTable& attrs,
                                      const IndexPermutation& perm) {
  index.validate_shape();
  if (perm.size() != index.m) {
    throw std::invalid_argument("apply_permutation: permutation size differs from m");
  }

  // replacement[t][i] = index position whose column moves into (i, t)
  std::vector<std::vector<int>> replacement(g.T, std::vector<int>(g.n, -1));
  for (int l = 0; l < perm.size(); ++l) {
    NodeTimePair dst = index.pairs[l];
    replacement[dst.time][dst.node] = perm.map[l];
  }

  std::vector<SparseMatrix> snaps;
  snaps.reserve(g.T);
  for (int t = 0; t < g.T; ++t) {
    std::vector<Triplet> trip;
    for (int j = 0; j < g.n; ++j) {
      ColumnView col = replacement[t][j] < 0
                           ? ColumnView{g.snapshots[t].column_rows(j),
                                        g.snapshots[t].column_values(j)}
                           : column_of(g, index.pairs[replacement[t][j]]);
      for (std::size_t k = 0; k < col.rows.size(); ++k) {
        trip.push_back({col.rows[k], j, col.values[k]});
      }
    }
    snaps.push_back(SparseMatrix::from_triplets(g.p, g.n, std::move(trip)));
  }

  PermutedData out{DynamicGraph(std::move(snaps), /*directed=*/true, g.weighted), labels, attrs};
  out.graph.directed = g.directed;

  for (int l = 0; l < perm.size(); ++l) {
    NodeTimePair dst = index.pairs[l];
    NodeTimePair src = index.pairs[perm.map[l]];
    auto v = labels.get(src);
    out.labels.label[labels.slot(dst)] = v ? *v : -1;
    if (attrs.mode == AttributeTable::Mode::explicit_features) {
      const double* from = attrs.row(src);
      std::copy(from, from + attrs.c, out.attributes.row(dst));
    }
  }
  return out;
}

struct IndexValidation {
  std::vector<NodeTimePair> zero_column_pairs;
  std::vector<NodeTimePair> duplicate_pairs;
  std::array<int, 4> role_counts{0, 0, 0, 0};

  bool clean() const { return zero_column_pairs.empty() && duplicate_pairs.empty(); }
};

inline IndexValidation validate_index(const DynamicGraph& g, const NodeTimeIndex& index) {
  index.validate_shape();
  IndexValidation report;
  report.role_counts = index.role_counts();
  std::vector<char> seen(static_cast<std::size_t>(g.n) * g.T, false);
  for (const NodeTimePair& w : index.pairs) {
    if (column_of(g, w).rows.empty()) report.zero_column_pairs.push_back(w);
    std::size_t s = static_cast<std::size_t>(w.time) * g.n + w.node;
    if (seen[s]) report.duplicate_pairs.push_back(w);
    seen[s] = true;
  }
  return report;
}

}  // namespace ugnn
