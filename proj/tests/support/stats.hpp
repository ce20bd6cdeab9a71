#pragma once

// Statistical checks used by the test suites: two-sample energy distance with
// a permutation test, a two-sample Kolmogorov-Smirnov statistic, and a power
// iteration bound for spectral radii.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "ugnn/dense.hpp"
#include "ugnn/rng.hpp"
#include "ugnn/sparse.hpp"

namespace testsupport {

inline double euclidean(const double* a, const double* b, int d) {
  double s = 0.0;
  for (int i = 0; i < d; ++i) {
    double t = a[i] - b[i];
    s += t * t;
  }
  return std::sqrt(s);
}

// Energy distance between row sets X (nx x d) and Y (ny x d):
//   2 E|X - Y| - E|X - X'| - E|Y - Y'|
inline double energy_distance(const ugnn::Matrix& x, const ugnn::Matrix& y) {
  const int d = x.cols;
  double xy = 0.0, xx = 0.0, yy = 0.0;
  for (int i = 0; i < x.rows; ++i) {
    for (int j = 0; j < y.rows; ++j) xy += euclidean(x.row(i), y.row(j), d);
  }
  for (int i = 0; i < x.rows; ++i) {
    for (int j = 0; j < x.rows; ++j) xx += euclidean(x.row(i), x.row(j), d);
  }
  for (int i = 0; i < y.rows; ++i) {
    for (int j = 0; j < y.rows; ++j) yy += euclidean(y.row(i), y.row(j), d);
  }
  xy /= static_cast<double>(x.rows) * y.rows;
  xx /= static_cast<double>(x.rows) * x.rows;
  yy /= static_cast<double>(y.rows) * y.rows;
  return 2.0 * xy - xx - yy;
}

struct EnergyTestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Permutation p-value for equality in distribution of the two row sets.
// Pairwise distances are computed once and each shuffle only re-partitions
// them, so many permutations stay cheap.
inline EnergyTestResult energy_permutation_test(const ugnn::Matrix& x, const ugnn::Matrix& y,
                                                int permutations, std::uint64_t seed) {
  const int nx = x.rows, ny = y.rows, d = x.cols;
  const int n = nx + ny;
  ugnn::Matrix pooled(n, d);
  for (int i = 0; i < nx; ++i) std::copy(x.row(i), x.row(i) + d, pooled.row(i));
  for (int i = 0; i < ny; ++i) std::copy(y.row(i), y.row(i) + d, pooled.row(nx + i));

  ugnn::Matrix dist(n, n);
  for (int i = 0; i < n; ++i) {
    dist.at(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j) {
      const double v = euclidean(pooled.row(i), pooled.row(j), d);
      dist.at(i, j) = dist.at(j, i) = v;
    }
  }

  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  auto energy_of = [&](const std::vector<int>& idx) {
    double xy = 0.0, xx = 0.0, yy = 0.0;
    for (int i = 0; i < nx; ++i) {
      const double* row = dist.row(idx[i]);
      for (int j = 0; j < nx; ++j) xx += row[idx[j]];
      for (int j = nx; j < n; ++j) xy += row[idx[j]];
    }
    for (int i = nx; i < n; ++i) {
      const double* row = dist.row(idx[i]);
      for (int j = nx; j < n; ++j) yy += row[idx[j]];
    }
    xy /= static_cast<double>(nx) * ny;
    xx /= static_cast<double>(nx) * nx;
    yy /= static_cast<double>(ny) * ny;
    return 2.0 * xy - xx - yy;
  };

  EnergyTestResult res;
  res.statistic = energy_of(order);
  ugnn::rng::Generator gen(seed);
  int at_least = 0;
  for (int p = 0; p < permutations; ++p) {
    gen.shuffle(order);
    if (energy_of(order) >= res.statistic) ++at_least;
  }
  res.p_value = (1.0 + at_least) / (permutations + 1.0);
  return res;
}

// Two-sample KS statistic sup_x |F1(x) - F2(x)|.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() -
                             static_cast<double>(j) / b.size()));
  }
  return d;
}

// Rejects equality at level alpha using the asymptotic critical value.
inline bool ks_reject(const std::vector<double>& a, const std::vector<double>& b, double alpha) {
  double c = std::sqrt(-std::log(alpha / 2.0) / 2.0);
  double thresh = c * std::sqrt((a.size() + b.size()) / (static_cast<double>(a.size()) * b.size()));
  return ks_statistic(a, b) > thresh;
}

// Power iteration estimate of the spectral radius of a symmetric matrix.
inline double spectral_radius(const ugnn::SparseMatrix& a, int iterations = 300,
                              std::uint64_t seed = 7) {
  ugnn::Matrix v(a.rows, 1);
  ugnn::rng::Generator gen(seed);
  for (int i = 0; i < a.rows; ++i) v.at(i, 0) = gen.uniform(-1.0, 1.0);
  double lambda = 0.0;
  ugnn::Matrix w;
  for (int it = 0; it < iterations; ++it) {
    ugnn::spmm(a, v, w);
    double norm = 0.0;
    for (int i = 0; i < a.rows; ++i) norm += w.at(i, 0) * w.at(i, 0);
    norm = std::sqrt(norm);
    if (norm == 0.0) return 0.0;
    for (int i = 0; i < a.rows; ++i) v.at(i, 0) = w.at(i, 0) / norm;
    lambda = norm;
  }
  return lambda;
}

}  // namespace testsupport
