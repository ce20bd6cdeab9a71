#pragma once

// Non-conformity scores (APS, RAPS, SAPS), split conformal calibration, and
// a full conformal oracle used to cross-check the split path.
//
// Score formulas follow the papers that introduced them:
//   APS   Romano, Sesia, Candes (2020): descending cumulative probability
//         through the label's position; the randomized form subtracts
//         u * p_label.
//   RAPS  Angelopoulos et al. (2021): APS plus lambda * max(0, rank - k_reg)
//         with 1-based ranks.
//   SAPS  Huang et al. (2023): u * p_max for the top-ranked label, otherwise
//         p_max + (rank - 2 + u) * lambda_s; deterministic mode fixes u = 1.
// Ties in the probability ordering break by class index, so scores are exact
// functions of (probabilities, label, u) with no hidden state.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "ugnn/dense.hpp"
#include "ugnn/graph.hpp"
#include "ugnn/rng.hpp"

namespace ugnn {

enum class ScoreKind { aps, raps, saps };

inline const char* score_name(ScoreKind k) {
  switch (k) {
    case ScoreKind::aps: return "aps";
    case ScoreKind::raps: return "raps";
    case ScoreKind::saps: return "saps";
  }
  throw std::logic_error("score_name: unknown kind");
}

inline ScoreKind score_kind_from(const std::string& name) {
  if (name == "aps") return ScoreKind::aps;
  if (name == "raps") return ScoreKind::raps;
  if (name == "saps") return ScoreKind::saps;
  throw std::invalid_argument("unknown score kind: " + name);
}

struct ScoreSpec {
  ScoreKind kind = ScoreKind::aps;
  bool randomized = true;
  double lambda = 0.0;    // raps rank penalty weight
  int k_reg = 0;          // raps penalty-free prefix length
  double lambda_s = 0.1;  // saps per-rank step
  double holdout_fraction = 0.2;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
      throw std::invalid_argument("ScoreSpec: lambda must be finite and >= 0");
    if (k_reg < 0) throw std::invalid_argument("ScoreSpec: k_reg must be >= 0");
    if (!(lambda_s >= 0.0) || !std::isfinite(lambda_s))
      throw std::invalid_argument("ScoreSpec: lambda_s must be finite and >= 0");
    if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
      throw std::invalid_argument("ScoreSpec: holdout_fraction must lie in (0, 1)");
  }
};

namespace conformal_detail {

struct RankInfo {
  int rank = 1;  // 1-based position in the descending probability order
  double cumulative = 0.0;
  double p_label = 0.0;
  double p_max = 0.0;
};

inline void check_simplex(const double* p, int d, int label) {
  if (d <= 0) throw std::invalid_argument("score: empty probability vector");
  if (label < 0 || label >= d) throw std::invalid_argument("score: label out of range");
  double sum = 0.0;
  for (int j = 0; j < d; ++j) {
    if (!std::isfinite(p[j]) || p[j] < 0.0)
      throw std::invalid_argument("score: probabilities must be finite and >= 0");
    sum += p[j];
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw std::invalid_argument("score: probabilities must sum to 1");
}

inline RankInfo rank_of(const double* p, int d, int label) {
  RankInfo r;
  r.p_label = p[label];
  for (int j = 0; j < d; ++j) {
    r.p_max = std::max(r.p_max, p[j]);
    const bool before = p[j] > r.p_label || (p[j] == r.p_label && j < label);
    if (before) {
      r.cumulative += p[j];
      ++r.rank;
    }
  }
  r.cumulative += r.p_label;
  return r;
}

}  // namespace conformal_detail

// Non-conformity score of one (probability vector, label) pair.  u is the
// caller's uniform draw in [0, 1); it is ignored in deterministic modes.
inline double score(const double* probs, int d, int label, const ScoreSpec& spec,
                    double u = 0.0) {
  spec.validate();
  conformal_detail::check_simplex(probs, d, label);
  const conformal_detail::RankInfo r = conformal_detail::rank_of(probs, d, label);
  switch (spec.kind) {
    case ScoreKind::aps:
      return r.cumulative - (spec.randomized ? u * r.p_label : 0.0);
    case ScoreKind::raps:
      return r.cumulative - (spec.randomized ? u * r.p_label : 0.0) +
             spec.lambda * std::max(0, r.rank - spec.k_reg);
    case ScoreKind::saps: {
      const double w = spec.randomized ? u : 1.0;
      if (r.rank == 1) return w * r.p_max;
      return r.p_max + (r.rank - 2 + w) * spec.lambda_s;
    }
  }
  throw std::logic_error("score: unknown kind");
}

inline double score(const std::vector<double>& probs, int label, const ScoreSpec& spec,
                    double u = 0.0) {
  return score(probs.data(), static_cast<int>(probs.size()), label, spec, u);
}

// The uniform draw attached to one (pair, label) slot.  Calibration and test
// sides key their draws identically, so a pair's score does not depend on
// which side of the split it lands on.
inline double score_noise(const ScoreSpec& spec, NodeTimePair pair, int label) {
  return rng::uniform_at(rng::derive(spec.seed, rng::Stream::kScoreNoise,
                                     static_cast<std::uint64_t>(pair.node),
                                     static_cast<std::uint64_t>(pair.time),
                                     static_cast<std::uint64_t>(label)));
}

// Score with the pair's own noise draw filled in.
inline double pair_score(const double* probs, int d, NodeTimePair pair, int label,
                         const ScoreSpec& spec) {
  const double u = spec.randomized ? score_noise(spec, pair, label) : 0.0;
  return score(probs, d, label, spec, u);
}

struct CalibrationModel {
  double q_hat = std::numeric_limits<double>::infinity();
  int k = 0;
  int m = 0;
  double alpha = 0.0;
  std::vector<double> calibration_scores;
};

// Threshold selection: q_hat is the floor(alpha * m)-th largest calibration
// score.  k = 0 or k beyond the list means no score can reach the threshold
// and every label survives.  The small nudge before floor() keeps products
// like 0.3 * 10 from truncating to 2.
inline CalibrationModel calibrate(std::vector<double> scores, double alpha, int m) {
  if (scores.empty()) throw std::invalid_argument("calibrate: empty calibration set");
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw std::invalid_argument("calibrate: alpha must lie in [0, 1]");
  if (m <= 0) throw std::invalid_argument("calibrate: m must be positive");
  for (double s : scores) {
    if (std::isnan(s)) throw std::invalid_argument("calibrate: NaN score");
  }
  CalibrationModel model;
  model.alpha = alpha;
  model.m = m;
  model.k = static_cast<int>(std::floor(alpha * m + 1e-9));
  if (model.k >= 1 && model.k <= static_cast<int>(scores.size())) {
    std::vector<double> sorted = scores;
    std::nth_element(sorted.begin(), sorted.begin() + (model.k - 1), sorted.end(),
                     std::greater<double>());
    model.q_hat = sorted[model.k - 1];
  }
  model.calibration_scores = std::move(scores);
  return model;
}

struct PredictionSet {
  NodeTimePair pair;
  std::vector<int> included;    // ascending class ids
  std::vector<double> scores;   // one score per class

  bool contains(int label) const {
    return std::binary_search(included.begin(), included.end(), label);
  }
  int size() const { return static_cast<int>(included.size()); }
};

// Set construction from probabilities: label y survives unless its score
// reaches the threshold (removal on >=, so boundary ties remove).
inline PredictionSet predict_set_from_probs(const double* probs, int d, NodeTimePair pair,
                                            const CalibrationModel& model,
                                            const ScoreSpec& spec) {
  PredictionSet set;
  set.pair = pair;
  set.scores.resize(d);
  for (int y = 0; y < d; ++y) {
    set.scores[y] = pair_score(probs, d, pair, y, spec);
    if (!(set.scores[y] >= model.q_hat)) set.included.push_back(y);
  }
  return set;
}

// Same, from a raw embedding row: softmax first, then score.
inline PredictionSet predict_set(const double* embedding_row, int d, NodeTimePair pair,
                                 const CalibrationModel& model, const ScoreSpec& spec) {
  std::vector<double> probs(d);
  softmax_row(embedding_row, probs.data(), d);
  return predict_set_from_probs(probs.data(), d, pair, model, spec);
}

// Full conformal oracle.  algorithm(y) must return the m scores produced
// with candidate label y written into position test_index; the candidate is
// excluded when its score ranks within the floor(alpha * m) largest,
// counting only strictly larger scores against it.  With a split-structured
// algorithm this reproduces predict_set exactly, ties included.
template <typename ScoreAlgorithm>
PredictionSet full_conformal(ScoreAlgorithm&& algorithm, int d, int test_index,
                             double alpha, NodeTimePair pair = {}) {
  if (d <= 0) throw std::invalid_argument("full_conformal: need at least one class");
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw std::invalid_argument("full_conformal: alpha must lie in [0, 1]");
  PredictionSet set;
  set.pair = pair;
  set.scores.resize(d);
  for (int y = 0; y < d; ++y) {
    const std::vector<double> scores = algorithm(y);
    const int m = static_cast<int>(scores.size());
    if (test_index < 0 || test_index >= m)
      throw std::invalid_argument("full_conformal: test index outside score list");
    const double r_test = scores[test_index];
    if (std::isnan(r_test)) throw std::invalid_argument("full_conformal: NaN score");
    set.scores[y] = r_test;
    const int k = static_cast<int>(std::floor(alpha * m + 1e-9));
    int rank = 1;
    for (int l = 0; l < m; ++l) {
      if (l != test_index && scores[l] > r_test) ++rank;
    }
    if (rank > k) set.included.push_back(y);
  }
  return set;
}

struct TuningInput {
  Matrix probabilities;  // one simplex row per calibration pair
  std::vector<int> labels;
  std::vector<NodeTimePair> pairs;
  double alpha = 0.1;
};

// Hyperparameter search on a held-out slice of the calibration set: the
// slice is chosen by a seeded shuffle, each grid candidate is calibrated on
// the remainder and judged on the slice, and the smallest mean set size
// subject to holdout coverage >= 1 - alpha wins (earliest grid entry on
// ties).  If no candidate reaches the coverage target the best-covering one
// is kept, smaller sets breaking ties; a single-class holdout falls back to
// a zero penalty.
inline ScoreSpec tune_score_hyperparams(const TuningInput& input, ScoreSpec spec,
                                        std::string* warning = nullptr) {
  spec.validate();
  if (spec.kind == ScoreKind::aps) return spec;
  const int n = input.probabilities.rows;
  const int d = input.probabilities.cols;
  if (n < 10)
    throw std::invalid_argument("tune_score_hyperparams: need >= 10 calibration points");
  if (static_cast<int>(input.labels.size()) != n ||
      static_cast<int>(input.pairs.size()) != n)
    throw std::invalid_argument("tune_score_hyperparams: labels/pairs size mismatch");
  for (int label : input.labels) {
    if (label < 0 || label >= d)
      throw std::invalid_argument("tune_score_hyperparams: label out of range");
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng::Generator g(rng::derive(spec.seed, rng::Stream::kHoldout));
  g.shuffle(order);
  const int holdout_count =
      static_cast<int>(std::ceil(spec.holdout_fraction * n - 1e-9));
  const std::vector<int> holdout(order.begin(), order.begin() + holdout_count);
  const std::vector<int> rest(order.begin() + holdout_count, order.end());

  bool degenerate = true;
  for (int idx : holdout) {
    if (input.labels[idx] != input.labels[holdout.front()]) degenerate = false;
  }
  if (degenerate || rest.empty()) {
    if (warning) *warning = "degenerate tuning holdout; penalty weight reset to 0";
    if (spec.kind == ScoreKind::raps) spec.lambda = 0.0;
    if (spec.kind == ScoreKind::saps) spec.lambda_s = 0.0;
    return spec;
  }

  const std::vector<double> lambda_grid{0.001, 0.01, 0.1, 1.0};
  const std::vector<int> k_reg_grid{0, 1, 2, 5};
  std::vector<ScoreSpec> candidates;
  for (double lambda : lambda_grid) {
    if (spec.kind == ScoreKind::raps) {
      for (int k_reg : k_reg_grid) {
        ScoreSpec c = spec;
        c.lambda = lambda;
        c.k_reg = k_reg;
        candidates.push_back(c);
      }
    } else {
      ScoreSpec c = spec;
      c.lambda_s = lambda;
      candidates.push_back(c);
    }
  }

  ScoreSpec best = spec;
  bool have_covering = false;
  double best_size = std::numeric_limits<double>::infinity();
  double best_coverage = -1.0;
  for (const ScoreSpec& candidate : candidates) {
    std::vector<double> cal_scores;
    cal_scores.reserve(rest.size());
    for (int idx : rest) {
      cal_scores.push_back(pair_score(input.probabilities.row(idx), d, input.pairs[idx],
                                      input.labels[idx], candidate));
    }
    const CalibrationModel model =
        calibrate(std::move(cal_scores), input.alpha, static_cast<int>(rest.size()) + 1);
    double sizes = 0.0;
    int covered = 0;
    for (int idx : holdout) {
      const PredictionSet set = predict_set_from_probs(
          input.probabilities.row(idx), d, input.pairs[idx], model, candidate);
      sizes += set.size();
      if (set.contains(input.labels[idx])) ++covered;
    }
    const double coverage = static_cast<double>(covered) / holdout_count;
    const double mean_size = sizes / holdout_count;
    const bool covering = coverage >= 1.0 - input.alpha;
    bool better = false;
    if (covering) {
      better = !have_covering || mean_size < best_size;
    } else if (!have_covering) {
      better = coverage > best_coverage ||
               (coverage == best_coverage && mean_size < best_size);
    }
    if (better) {
      best = candidate;
      best_size = mean_size;
      best_coverage = coverage;
      have_covering = have_covering || covering;
    }
  }
  return best;
}

}  // namespace ugnn
