#include <catch_amalgamated.hpp>

#include "support/stats.hpp"
#include "ugnn/generators.hpp"
#include "ugnn/representation.hpp"

using namespace ugnn;

namespace {

DynamicGraph single_edge_graph() {
  // T=2, n=p=2; only snapshot 1 has the undirected edge {0, 1}.
  auto s0 = SparseMatrix(2, 2);
  auto s1 = SparseMatrix::from_triplets(2, 2, {{0, 1, 1.0}, {1, 0, 1.0}});
  return DynamicGraph({s0, s1}, false, false);
}

DsbmSample small_sample(std::uint64_t seed) {
  DsbmSpec spec = make_two_block_example(seed);
  spec.n = 30;
  spec.z = std::vector<int>(30, 0);
  for (int i = 15; i < 30; ++i) spec.z[i] = 1;
  return sample_dsbm(spec);
}

}  // namespace

TEST_CASE("unfolding a single edge produces the four dilation entries", "[representation]") {
  Representation rep = unfold(single_edge_graph());
  REQUIRE(rep.N() == 6);
  REQUIRE(rep.matrix.nnz() == 4);
  Matrix d = rep.matrix.to_dense();
  // Temporal rows start at p=2; pair (i, t) sits at 2 + 2t + i.
  CHECK(d.at(0, 5) == 1.0);  // global 0 ~ temporal (1, t=1)
  CHECK(d.at(1, 4) == 1.0);  // global 1 ~ temporal (0, t=1)
  CHECK(d.at(5, 0) == 1.0);
  CHECK(d.at(4, 1) == 1.0);
  CHECK(rep.matrix.is_symmetric());
}

TEST_CASE("unfolding doubles the stored edge count", "[representation]") {
  DsbmSample s = small_sample(3);
  Representation rep = unfold(s.graph);
  CHECK(rep.matrix.nnz() == 2 * s.graph.total_edges());
  CHECK(rep.matrix.is_symmetric());

  // Global-global and temporal-temporal blocks are empty.
  Matrix dense = rep.matrix.to_dense();
  for (int i = 0; i < rep.p; ++i) {
    for (int j = 0; j < rep.p; ++j) CHECK(dense.at(i, j) == 0.0);
  }
  for (int i = rep.p; i < rep.N(); ++i) {
    for (int j = rep.p; j < rep.N(); ++j) CHECK(dense.at(i, j) == 0.0);
  }
}

TEST_CASE("row mapping is time-major and inverts", "[representation]") {
  DsbmSample s = small_sample(4);
  Representation rep = unfold(s.graph);
  CHECK(rep.row_of({0, 0}) == rep.p);
  CHECK(rep.row_of({3, 1}) == rep.p + rep.n + 3);
  for (int t = 0; t < rep.T; ++t) {
    for (int i = 0; i < rep.n; i += 7) {
      RowRef ref = rep.row_ref(rep.row_of({i, t}));
      CHECK_FALSE(ref.global);
      CHECK(ref.node == i);
      CHECK(ref.time == t);
    }
  }
  CHECK(rep.row_ref(2).global);
  CHECK(rep.row_ref(2).node == 2);
  CHECK_THROWS_AS(rep.row_of({0, 2}), std::out_of_range);

  Representation block = block_diagonal(s.graph);
  CHECK(block.row_of({3, 1}) == block.n + 3);
  CHECK_THROWS_AS(block.global_row(0), std::logic_error);
}

TEST_CASE("unfolding a permuted graph permutes temporal rows and columns",
          "[representation]") {
  DsbmSample s = small_sample(5);
  NodeTimeIndex idx;
  for (int t = 0; t < s.graph.T; ++t) {
    for (int i = 0; i < s.graph.n; ++i) {
      if (!column_of(s.graph, {i, t}).rows.empty()) {
        idx.pairs.push_back({i, t});
        idx.roles.push_back(Role::calibration);
      }
    }
  }
  idx.m = static_cast<int>(idx.pairs.size());

  std::vector<int> map(idx.m);
  for (int i = 0; i < idx.m; ++i) map[i] = i;
  rng::Generator gen(12);
  gen.shuffle(map);
  IndexPermutation perm(map);

  Representation base = unfold(s.graph);
  PermutedData permuted =
      apply_permutation(s.graph, idx, s.labels, AttributeTable::identity(), perm);
  Representation direct = unfold(permuted.graph);

  // Oracle: permute rows/columns of unfold(G); global rows stay fixed and the
  // temporal row of pair l moves to the temporal row of pair perm^{-1}(l).
  std::vector<int> rowperm(base.N());
  for (int r = 0; r < base.N(); ++r) rowperm[r] = r;
  IndexPermutation inv = perm.inverse();
  for (int l = 0; l < idx.m; ++l) {
    rowperm[base.row_of(idx.pairs[l])] = base.row_of(idx.pairs[inv.map[l]]);
  }
  SparseMatrix expected = permute_symmetric(base.matrix, rowperm);
  CHECK(direct.matrix == expected);
}

TEST_CASE("block diagonal places each snapshot on its block", "[representation]") {
  DsbmSample s = small_sample(6);
  Representation rep = block_diagonal(s.graph);
  REQUIRE(rep.N() == s.graph.n * s.graph.T);
  Matrix dense = rep.matrix.to_dense();
  for (int t = 0; t < s.graph.T; ++t) {
    Matrix snap = s.graph.snapshots[t].to_dense();
    for (int i = 0; i < s.graph.n; ++i) {
      for (int j = 0; j < s.graph.n; ++j) {
        CHECK(dense.at(t * s.graph.n + i, t * s.graph.n + j) == snap.at(i, j));
      }
    }
  }
  // Off-diagonal blocks empty.
  for (int i = 0; i < s.graph.n; ++i) {
    for (int j = s.graph.n; j < rep.N(); ++j) CHECK(dense.at(i, j) == 0.0);
  }
}

TEST_CASE("block diagonal of directed input needs the symmetrize flag",
          "[representation]") {
  auto s0 = SparseMatrix::from_triplets(3, 3, {{0, 1, 2.0}, {1, 0, 5.0}, {2, 0, 1.0}});
  DynamicGraph g({s0}, true, true);
  CHECK_THROWS_AS(block_diagonal(g), std::invalid_argument);
  Representation rep = block_diagonal(g, true);
  Matrix dense = rep.matrix.to_dense();
  CHECK(dense.at(0, 1) == 5.0);  // max of the two orientations
  CHECK(dense.at(1, 0) == 5.0);
  CHECK(dense.at(0, 2) == 1.0);
  CHECK(dense.at(2, 0) == 1.0);
  CHECK(rep.matrix.is_symmetric());
}

TEST_CASE("rectangular graphs cannot be block diagonalized", "[representation]") {
  auto s0 = SparseMatrix::from_triplets(3, 2, {{0, 1, 1.0}});
  DynamicGraph g({s0}, true, false);
  CHECK_THROWS_AS(block_diagonal(g, true), std::invalid_argument);
  CHECK_NOTHROW(unfold(g));
  CHECK(unfold(g).N() == 3 + 2);
}

TEST_CASE("two-node normalization gives the half matrix", "[representation]") {
  auto a = SparseMatrix::from_triplets(2, 2, {{0, 1, 1.0}, {1, 0, 1.0}});
  SparseMatrix norm = normalize_for_gcn(a);
  Matrix d = norm.to_dense();
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) CHECK(d.at(i, j) == Catch::Approx(0.5).margin(1e-12));
  }
}

TEST_CASE("isolated rows keep a unit self-loop after normalization", "[representation]") {
  SparseMatrix empty(3, 3);
  SparseMatrix norm = normalize_for_gcn(empty);
  Matrix d = norm.to_dense();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) CHECK(d.at(i, j) == (i == j ? 1.0 : 0.0));
  }
}

TEST_CASE("normalization keeps the A + I pattern and is symmetric", "[representation]") {
  DsbmSample s = small_sample(7);
  Representation rep = unfold(s.graph);
  SparseMatrix norm = normalize_for_gcn(rep);
  CHECK(norm.is_symmetric());

  std::vector<Triplet> trip;
  for (int j = 0; j < rep.matrix.cols; ++j) {
    auto rs = rep.matrix.column_rows(j);
    for (int r : rs) trip.push_back({r, j, 1.0});
  }
  for (int i = 0; i < rep.matrix.rows; ++i) trip.push_back({i, i, 1.0});
  SparseMatrix pattern =
      SparseMatrix::from_triplets(rep.matrix.rows, rep.matrix.cols, std::move(trip));
  REQUIRE(norm.nnz() == pattern.nnz());
  CHECK(norm.row_idx == pattern.row_idx);
  CHECK(norm.col_ptr == pattern.col_ptr);
}

TEST_CASE("normalized operator has spectral radius at most one", "[representation]") {
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    DsbmSample s = small_sample(seed);
    SparseMatrix norm = normalize_for_gcn(unfold(s.graph));
    CHECK(testsupport::spectral_radius(norm) <= 1.0 + 1e-9);
    SparseMatrix bnorm = normalize_for_gcn(block_diagonal(s.graph));
    CHECK(testsupport::spectral_radius(bnorm) <= 1.0 + 1e-9);
  }
}

TEST_CASE("identity features stay virtual and materialize to the identity",
          "[representation]") {
  Representation rep = unfold(single_edge_graph());
  FeatureMatrix f = make_features(rep, AttributeTable::identity());
  CHECK(f.kind == FeatureMatrix::Kind::identity);
  CHECK(f.dim == rep.N());
  Matrix eye = f.materialize(rep.N());
  for (int i = 0; i < rep.N(); ++i) {
    for (int j = 0; j < rep.N(); ++j) CHECK(eye.at(i, j) == (i == j ? 1.0 : 0.0));
  }
}

TEST_CASE("explicit features fill temporal rows and zero global rows", "[representation]") {
  DynamicGraph g = single_edge_graph();
  AttributeTable attrs = AttributeTable::explicit_features(2, 2, 3);
  for (int t = 0; t < 2; ++t) {
    for (int i = 0; i < 2; ++i) {
      for (int c = 0; c < 3; ++c) attrs.row({i, t})[c] = 100.0 * t + 10.0 * i + c;
    }
  }
  Representation rep = unfold(g);
  FeatureMatrix f = make_features(rep, attrs);
  REQUIRE(f.kind == FeatureMatrix::Kind::dense);
  REQUIRE(f.dense.rows == rep.N());
  for (int i = 0; i < rep.p; ++i) {
    for (int c = 0; c < 3; ++c) CHECK(f.dense.at(i, c) == 0.0);
  }
  CHECK(f.dense.at(rep.row_of({1, 1}), 2) == 112.0);
  CHECK(f.dense.at(rep.row_of({0, 1}), 0) == 100.0);
}

TEST_CASE("split_embedding separates global and temporal rows", "[representation]") {
  DsbmSample s = small_sample(8);
  Representation rep = unfold(s.graph);
  Matrix rows(rep.N(), 2);
  for (int r = 0; r < rep.N(); ++r) {
    rows.at(r, 0) = r;
    rows.at(r, 1) = -r;
  }
  EmbeddingMatrix e = split_embedding(rows, rep);
  REQUIRE(e.u_hat.rows == rep.p);
  REQUIRE(e.v_hat.rows == rep.n * rep.T);
  CHECK(e.u_hat.at(3, 0) == 3.0);
  CHECK(e.v_row({4, 1})[0] == static_cast<double>(rep.p + rep.n + 4));

  Representation block = block_diagonal(s.graph);
  Matrix brows(block.N(), 1);
  EmbeddingMatrix be = split_embedding(brows, block);
  CHECK(be.u_hat.rows == 0);
  CHECK(be.v_hat.rows == block.N());

  Matrix wrong(rep.N() - 1, 2);
  CHECK_THROWS_AS(split_embedding(wrong, rep), std::invalid_argument);
}
