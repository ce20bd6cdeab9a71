#pragma once

// Dynamic stochastic block model sampling.  Each unordered pair (i <= j,
// self-loops included) is an independent Bernoulli draw per snapshot with
// probability B_t[z_i][z_j]; the result is symmetrized.  Draws are keyed by
// (seed, t, i, j), so a spec reproduces bit-identically regardless of order.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ugnn/graph.hpp"
#include "ugnn/rng.hpp"

namespace ugnn {

struct DsbmSpec {
  int n = 0;
  int T = 0;
  std::vector<int> z;               // community of each node, values in [0, K)
  std::vector<Matrix> b_sequence;   // T symmetric K x K probability matrices
  std::uint64_t seed = 0;

  int communities() const {
    int k = 0;
    for (int c : z) k = std::max(k, c + 1);
    return k;
  }

  void validate() const {
    if (n <= 0 || T <= 0) throw std::invalid_argument("DsbmSpec: n and T must be positive");
    if (static_cast<int>(z.size()) != n) {
      throw std::invalid_argument("DsbmSpec: community vector size differs from n");
    }
    for (int c : z) {
      if (c < 0) throw std::invalid_argument("DsbmSpec: negative community");
    }
    const int k = communities();
    if (static_cast<int>(b_sequence.size()) != T) {
      throw std::invalid_argument("DsbmSpec: need one B matrix per snapshot");
    }
    for (const Matrix& b : b_sequence) {
      if (b.rows != k || b.cols != k) {
        throw std::invalid_argument("DsbmSpec: B matrix shape differs from community count");
      }
      for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
          double v = b.at(i, j);
          if (!(v >= 0.0 && v <= 1.0)) {
            throw std::invalid_argument("DsbmSpec: probability outside [0, 1]");
          }
          if (b.at(i, j) != b.at(j, i)) {
            throw std::invalid_argument("DsbmSpec: B matrix not symmetric");
          }
        }
      }
    }
  }
};

struct DsbmSample {
  DynamicGraph graph;
  LabelTable labels;  // community of node i at every time
};

inline DsbmSample sample_dsbm(const DsbmSpec& spec) {
  spec.validate();
  std::vector<SparseMatrix> snaps;
  snaps.reserve(spec.T);
  for (int t = 0; t < spec.T; ++t) {
    const Matrix& b = spec.b_sequence[t];
    std::vector<Triplet> trip;
    for (int i = 0; i < spec.n; ++i) {
      for (int j = i; j < spec.n; ++j) {
        const double u = rng::uniform_at(rng::derive(
            spec.seed, rng::kDsbmEdges, static_cast<std::uint64_t>(t),
            static_cast<std::uint64_t>(i) * spec.n + j));
        if (u < b.at(spec.z[i], spec.z[j])) {
          trip.push_back({i, j, 1.0});
          if (i != j) trip.push_back({j, i, 1.0});
        }
      }
    }
    snaps.push_back(SparseMatrix::from_triplets(spec.n, spec.n, std::move(trip)));
  }

  DsbmSample out{DynamicGraph(std::move(snaps), false, false),
                 LabelTable(spec.n, spec.T, spec.communities())};
  for (int c = 0; c < out.labels.d; ++c) {
    out.labels.class_names.push_back("community-" + std::to_string(c));
  }
  for (int t = 0; t < spec.T; ++t) {
    for (int i = 0; i < spec.n; ++i) out.labels.set({i, t}, spec.z[i]);
  }
  return out;
}

namespace detail {

inline std::vector<int> equal_communities(int n, int k) {
  std::vector<int> z(n);
  for (int i = 0; i < n; ++i) z[i] = i / (n / k);
  return z;
}

}  // namespace detail

// n=300, three equal communities, T=8.  Off-diagonal connection probability
// is 0.02 throughout; each diagonal entry switches between 0.08 and 0.16, and
// the 8 = 2^3 diagonal states appear exactly once, in seeded-random order.
inline DsbmSpec make_paper_sbm(std::uint64_t seed) {
  DsbmSpec spec;
  spec.n = 300;
  spec.T = 8;
  spec.z = detail::equal_communities(300, 3);
  spec.seed = seed;

  std::vector<int> states(8);
  for (int i = 0; i < 8; ++i) states[i] = i;
  rng::Generator g(rng::derive(seed, rng::kStateOrder));
  g.shuffle(states);

  for (int t = 0; t < 8; ++t) {
    Matrix b(3, 3);
    b.fill(0.02);
    for (int c = 0; c < 3; ++c) {
      b.at(c, c) = (states[t] >> c) & 1 ? 0.16 : 0.08;
    }
    spec.b_sequence.push_back(b);
  }
  return spec;
}

// n=300, three equal communities, every snapshot drawn from the same B.
inline DsbmSpec make_iid_sbm(std::uint64_t seed, int T = 8) {
  DsbmSpec spec;
  spec.n = 300;
  spec.T = T;
  spec.z = detail::equal_communities(300, 3);
  spec.seed = seed;
  Matrix b(3, 3);
  b.fill(0.02);
  b.at(0, 0) = 0.16;
  b.at(1, 1) = 0.08;
  b.at(2, 2) = 0.16;
  spec.b_sequence.assign(T, b);
  return spec;
}

// Two equal communities over two identically distributed snapshots; the
// small worked example used by the embedding-exchangeability checks.
inline DsbmSpec make_two_block_example(std::uint64_t seed) {
  DsbmSpec spec;
  spec.n = 200;
  spec.T = 2;
  spec.z = detail::equal_communities(200, 2);
  spec.seed = seed;
  Matrix b(2, 2);
  b.at(0, 0) = 0.5;
  b.at(0, 1) = 0.5;
  b.at(1, 0) = 0.5;
  b.at(1, 1) = 0.9;
  spec.b_sequence.assign(2, b);
  return spec;
}

}  // namespace ugnn
