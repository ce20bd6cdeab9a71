#pragma once

// Regime-aware split sampling and the multi-fit, multi-permutation
// experiment harness.  Three regimes:
//   transductive            roles assigned uniformly at random, any time
//   temporal_transductive   train/valid before the cutoff, cal/test after
//   semi_inductive          everything at or past the cutoff is test
// One "instance" is a (trained model, role assignment) pair; metrics are
// aggregated across instances with their spread.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "ugnn/conformal.hpp"
#include "ugnn/dense.hpp"
#include "ugnn/gnn.hpp"
#include "ugnn/graph.hpp"
#include "ugnn/representation.hpp"
#include "ugnn/rng.hpp"

namespace ugnn {

enum class Regime { transductive, temporal_transductive, semi_inductive };

inline const char* regime_name(Regime r) {
  switch (r) {
    case Regime::transductive: return "transductive";
    case Regime::temporal_transductive: return "temporal-transductive";
    case Regime::semi_inductive: return "semi-inductive";
  }
  throw std::logic_error("regime_name: unknown regime");
}

inline Regime regime_from(const std::string& name) {
  if (name == "transductive") return Regime::transductive;
  if (name == "temporal-transductive") return Regime::temporal_transductive;
  if (name == "semi-inductive") return Regime::semi_inductive;
  throw std::invalid_argument("unknown regime: " + name);
}

struct RegimeSpec {
  Regime regime = Regime::transductive;
  double train_ratio = 0.20;
  double valid_ratio = 0.10;
  double cal_ratio = 0.35;
  double test_ratio = 0.35;
  int n_fits = 10;
  int n_permutations = 100;
  int n_splits_semi_inductive = 50;
  double alpha = 0.1;
  std::uint64_t seed = 0;

  void validate() const {
    const double ratios[4] = {train_ratio, valid_ratio, cal_ratio, test_ratio};
    double sum = 0.0;
    for (double r : ratios) {
      if (!(r > 0.0) || !std::isfinite(r))
        throw std::invalid_argument("RegimeSpec: ratios must be positive");
      sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("RegimeSpec: ratios must sum to 1");
    if (n_fits < 1 || n_permutations < 1 || n_splits_semi_inductive < 1)
      throw std::invalid_argument("RegimeSpec: fit/permutation counts must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0))
      throw std::invalid_argument("RegimeSpec: alpha must lie in (0, 1)");
  }

  // Temporal cutoff: the post-cutoff block holds the test set alone in the
  // semi-inductive regime and calibration + test in the temporal one, with
  // its width rounded up to whole time points.
  int tau(int T) const {
    double tail = 0.0;
    switch (regime) {
      case Regime::transductive:
        throw std::logic_error("tau: transductive regime has no cutoff");
      case Regime::semi_inductive:
        tail = test_ratio;
        break;
      case Regime::temporal_transductive:
        tail = cal_ratio + test_ratio;
        break;
    }
    const int cut = T - static_cast<int>(std::ceil(tail * T - 1e-9));
    if (cut < 1 || cut >= T)
      throw std::invalid_argument("RegimeSpec: cutoff leaves an empty side");
    return cut;
  }
};

namespace evaluation_detail {

// Largest-remainder apportionment of total across the ratio vector.
inline std::vector<int> apportion(int total, const std::vector<double>& ratios) {
  double sum = 0.0;
  for (double r : ratios) sum += r;
  std::vector<int> counts(ratios.size());
  std::vector<std::pair<double, int>> remainders;
  int assigned = 0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    const double target = total * ratios[i] / sum;
    counts[i] = static_cast<int>(std::floor(target + 1e-9));
    assigned += counts[i];
    remainders.push_back({target - counts[i], static_cast<int>(i)});
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int i = 0; i < total - assigned; ++i) {
    ++counts[remainders[i % ratios.size()].second];
  }
  return counts;
}

inline void append_role(NodeTimeIndex& index, const std::vector<NodeTimePair>& pairs,
                        std::size_t begin, std::size_t end, Role role) {
  for (std::size_t i = begin; i < end; ++i) {
    index.pairs.push_back(pairs[i]);
    index.roles.push_back(role);
  }
}

}  // namespace evaluation_detail

// Draws one role assignment for the given regime.  The returned index keeps
// the calibration and test pairs in its first m positions so later
// permutations only touch that pool.
inline NodeTimeIndex sample_split(const std::vector<NodeTimePair>& universe, int T,
                                  const RegimeSpec& spec, std::uint64_t run_seed) {
  spec.validate();
  if (universe.empty()) throw std::invalid_argument("sample_split: no eligible pairs");
  rng::Generator g(rng::derive(run_seed, rng::Stream::kSplit));
  NodeTimeIndex index;

  if (spec.regime == Regime::transductive) {
    std::vector<NodeTimePair> pool = universe;
    g.shuffle(pool);
    const std::vector<int> counts = evaluation_detail::apportion(
        static_cast<int>(pool.size()),
        {spec.cal_ratio, spec.test_ratio, spec.train_ratio, spec.valid_ratio});
    const std::size_t c0 = counts[0], c1 = c0 + counts[1], c2 = c1 + counts[2];
    evaluation_detail::append_role(index, pool, 0, c0, Role::calibration);
    evaluation_detail::append_role(index, pool, c0, c1, Role::test);
    index.m = static_cast<int>(index.pairs.size());
    evaluation_detail::append_role(index, pool, c1, c2, Role::training);
    evaluation_detail::append_role(index, pool, c2, pool.size(), Role::validation);
  } else {
    const int cut = spec.tau(T);
    std::vector<NodeTimePair> before, after;
    for (const NodeTimePair& pair : universe) {
      (pair.time < cut ? before : after).push_back(pair);
    }
    g.shuffle(before);
    g.shuffle(after);
    if (spec.regime == Regime::semi_inductive) {
      // Everything past the cutoff is test; the pre-cutoff pairs split by
      // the remaining ratios.
      const std::vector<int> counts = evaluation_detail::apportion(
          static_cast<int>(before.size()),
          {spec.cal_ratio, spec.train_ratio, spec.valid_ratio});
      const std::size_t c0 = counts[0], c1 = c0 + counts[1];
      evaluation_detail::append_role(index, before, 0, c0, Role::calibration);
      evaluation_detail::append_role(index, after, 0, after.size(), Role::test);
      index.m = static_cast<int>(index.pairs.size());
      evaluation_detail::append_role(index, before, c0, c1, Role::training);
      evaluation_detail::append_role(index, before, c1, before.size(), Role::validation);
    } else {
      const std::vector<int> post_counts = evaluation_detail::apportion(
          static_cast<int>(after.size()), {spec.cal_ratio, spec.test_ratio});
      const std::vector<int> pre_counts = evaluation_detail::apportion(
          static_cast<int>(before.size()), {spec.train_ratio, spec.valid_ratio});
      const std::size_t p0 = post_counts[0];
      evaluation_detail::append_role(index, after, 0, p0, Role::calibration);
      evaluation_detail::append_role(index, after, p0, after.size(), Role::test);
      index.m = static_cast<int>(index.pairs.size());
      evaluation_detail::append_role(index, before, 0, pre_counts[0], Role::training);
      evaluation_detail::append_role(index, before, pre_counts[0], before.size(),
                                     Role::validation);
    }
  }

  for (int c : index.role_counts()) {
    if (c == 0) throw std::runtime_error("sample_split: a role received no pairs");
  }
  index.validate_shape();
  return index;
}

// Reassigns calibration/test roles uniformly within the first-m pool; the
// pair sequence and the role counts are preserved.
inline NodeTimeIndex permute_roles(const NodeTimeIndex& index, std::uint64_t perm_seed) {
  index.validate_shape();
  NodeTimeIndex out = index;
  std::vector<Role> pool_roles(out.roles.begin(), out.roles.begin() + out.m);
  rng::Generator g(rng::derive(perm_seed, rng::Stream::kPermutation));
  g.shuffle(pool_roles);
  std::copy(pool_roles.begin(), pool_roles.end(), out.roles.begin());
  return out;
}

struct Stat {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation, zero for fewer than two values
};

inline Stat stat_of(const std::vector<double>& values) {
  Stat s;
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / (values.size() - 1));
  }
  return s;
}

// Per-window tallies of one instance; windows with no test points are
// simply absent.
struct WindowTally {
  int count = 0;
  int covered = 0;
  int correct = 0;
  double size_sum = 0.0;
};

struct InstanceMetrics {
  std::uint64_t seed = 0;
  int fit = 0;
  double accuracy = 0.0;
  double coverage = 0.0;
  double set_size = 0.0;
  double worst_window_coverage = 0.0;
  std::map<int, WindowTally> windows;
};

struct TimeWindowStats {
  int time = 0;
  int instances = 0;  // instances with at least one test point here
  double mean_count = 0.0;
  Stat accuracy, coverage, set_size;
};

struct MetricsReport {
  Stat accuracy, coverage, set_size, time_conditional_coverage;
  Stat accuracy_across_fits, coverage_across_fits, set_size_across_fits;
  std::vector<TimeWindowStats> per_time;
  std::vector<InstanceMetrics> instances;
  int planned_instances = 0;
  int skipped_instances = 0;
  std::uint64_t master_seed = 0;
  std::string config_hash;  // filled by the runner
};

namespace evaluation_detail {

struct FitContext {
  NodeTimeIndex index;
  Matrix pool_probs;  // m x d, softmax over the pool pairs' logits
  std::vector<int> pool_argmax;
  bool diverged = false;
};

inline FitContext fit_once(const Representation& rep, const Dataset& data,
                           const std::vector<NodeTimePair>& universe,
                           const RegimeSpec& regime, const ModelConfig& model,
                           std::uint64_t fit_seed) {
  FitContext ctx;
  ctx.index = sample_split(universe, data.graph.T, regime, fit_seed);
  ModelConfig config = model;
  config.seed = fit_seed;
  try {
    const TrainResult result = train(rep, data.labels, ctx.index, config);
    const int d = data.labels.d;
    ctx.pool_probs = Matrix(ctx.index.m, d);
    ctx.pool_argmax.resize(ctx.index.m);
    for (int w = 0; w < ctx.index.m; ++w) {
      const double* row = result.embedding.v_row(ctx.index.pairs[w]);
      softmax_row(row, ctx.pool_probs.row(w), d);
      ctx.pool_argmax[w] = argmax_row(row, d);
    }
  } catch (const TrainingDivergence&) {
    ctx.diverged = true;
  }
  return ctx;
}

// Scores one role assignment against the fit's probabilities.  The index
// argument may be a permuted copy of ctx.index; pair positions must match.
inline InstanceMetrics evaluate_instance(const FitContext& ctx, const NodeTimeIndex& index,
                                         const Dataset& data, const RegimeSpec& regime,
                                         ScoreSpec score, std::uint64_t instance_seed,
                                         std::uint64_t score_seed, int fit) {
  const int d = data.labels.d;
  score.seed = score_seed;

  std::vector<int> cal_rows, test_rows;
  for (int w = 0; w < index.m; ++w) {
    (index.roles[w] == Role::calibration ? cal_rows : test_rows).push_back(w);
  }

  if (score.kind != ScoreKind::aps) {
    TuningInput tuning;
    tuning.alpha = regime.alpha;
    tuning.probabilities = Matrix(static_cast<int>(cal_rows.size()), d);
    for (std::size_t i = 0; i < cal_rows.size(); ++i) {
      const int w = cal_rows[i];
      std::copy(ctx.pool_probs.row(w), ctx.pool_probs.row(w) + d,
                tuning.probabilities.row(static_cast<int>(i)));
      tuning.labels.push_back(*data.labels.get(index.pairs[w]));
      tuning.pairs.push_back(index.pairs[w]);
    }
    score = tune_score_hyperparams(tuning, score);
  }

  std::vector<double> cal_scores;
  cal_scores.reserve(cal_rows.size());
  for (int w : cal_rows) {
    cal_scores.push_back(pair_score(ctx.pool_probs.row(w), d, index.pairs[w],
                                    *data.labels.get(index.pairs[w]), score));
  }
  const CalibrationModel model =
      calibrate(std::move(cal_scores), regime.alpha, static_cast<int>(cal_rows.size()) + 1);

  InstanceMetrics metrics;
  metrics.seed = instance_seed;
  metrics.fit = fit;
  for (int w : test_rows) {
    const NodeTimePair pair = index.pairs[w];
    const int truth = *data.labels.get(pair);
    const PredictionSet set =
        predict_set_from_probs(ctx.pool_probs.row(w), d, pair, model, score);
    WindowTally& tally = metrics.windows[pair.time];
    ++tally.count;
    tally.size_sum += set.size();
    if (set.contains(truth)) ++tally.covered;
    if (ctx.pool_argmax[w] == truth) ++tally.correct;
  }

  int count = 0, covered = 0, correct = 0;
  double size_sum = 0.0;
  double worst = 1.0;
  for (const auto& [time, tally] : metrics.windows) {
    count += tally.count;
    covered += tally.covered;
    correct += tally.correct;
    size_sum += tally.size_sum;
    worst = std::min(worst, static_cast<double>(tally.covered) / tally.count);
  }
  metrics.accuracy = static_cast<double>(correct) / count;
  metrics.coverage = static_cast<double>(covered) / count;
  metrics.set_size = size_sum / count;
  metrics.worst_window_coverage = worst;
  return metrics;
}

}  // namespace evaluation_detail

// Runs the full harness: n_fits trained models with n_permutations role
// reshuffles each (transductive and temporal-transductive), or
// n_splits_semi_inductive independent fits against the fixed temporal test
// block.  Jobs parallelize over fits into preassigned slots, so any job
// count reproduces the serial output exactly.  A diverged fit skips its
// instances; more than 5% skipped aborts the run.
inline MetricsReport run_experiment(const Dataset& data, RepresentationKind rep_kind,
                                    const ModelConfig& model, const RegimeSpec& regime,
                                    const ScoreSpec& score, int jobs = 1) {
  data.validate();
  regime.validate();
  model.validate();
  score.validate();
  if (jobs < 1) throw std::invalid_argument("run_experiment: jobs must be >= 1");

  Representation rep = rep_kind == RepresentationKind::unfolded
                           ? unfold(data.graph)
                           : block_diagonal(data.graph);
  if (data.attributes.mode == AttributeTable::Mode::explicit_features) {
    rep.features = make_features(rep, data.attributes);
  }
  const std::vector<NodeTimePair> universe = eligible_pairs(data);

  const bool permuted = regime.regime != Regime::semi_inductive;
  const int fits = permuted ? regime.n_fits : regime.n_splits_semi_inductive;
  const int per_fit = permuted ? regime.n_permutations : 1;

  std::vector<std::vector<InstanceMetrics>> slots(fits);
  std::vector<int> skipped(fits, 0);
  std::vector<std::string> errors(fits);
  std::atomic<int> next_fit{0};

  auto worker = [&]() {
    for (int fit = next_fit.fetch_add(1); fit < fits; fit = next_fit.fetch_add(1)) {
      try {
        const std::uint64_t fit_seed = rng::derive(regime.seed, rng::Stream::kFit, fit);
        const evaluation_detail::FitContext ctx =
            evaluation_detail::fit_once(rep, data, universe, regime, model, fit_seed);
        if (ctx.diverged) {
          skipped[fit] = per_fit;
          continue;
        }
        slots[fit].reserve(per_fit);
        for (int perm = 0; perm < per_fit; ++perm) {
          const std::uint64_t instance_seed =
              rng::derive(regime.seed, rng::Stream::kPermutation, fit, perm);
          const std::uint64_t score_seed =
              rng::derive(regime.seed, rng::Stream::kScoreNoise, fit, perm);
          const NodeTimeIndex index =
              permuted ? permute_roles(ctx.index, instance_seed) : ctx.index;
          slots[fit].push_back(evaluation_detail::evaluate_instance(
              ctx, index, data, regime, score, instance_seed, score_seed, fit));
        }
      } catch (const std::exception& e) {
        errors[fit] = e.what();
      }
    }
  };

  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    const int workers = std::min(jobs, fits);
    threads.reserve(workers);
    for (int i = 0; i < workers; ++i) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();
  }
  for (const std::string& e : errors) {
    if (!e.empty()) throw std::runtime_error("run_experiment: " + e);
  }

  MetricsReport report;
  report.master_seed = regime.seed;
  report.planned_instances = fits * per_fit;
  for (int fit = 0; fit < fits; ++fit) {
    report.skipped_instances += skipped[fit];
    for (InstanceMetrics& inst : slots[fit]) report.instances.push_back(std::move(inst));
  }
  if (report.skipped_instances > 0.05 * report.planned_instances) {
    throw std::runtime_error("run_experiment: over 5% of instances diverged");
  }
  if (report.instances.empty()) {
    throw std::runtime_error("run_experiment: no instances completed");
  }

  std::vector<double> acc, cov, size, worst;
  for (const InstanceMetrics& inst : report.instances) {
    acc.push_back(inst.accuracy);
    cov.push_back(inst.coverage);
    size.push_back(inst.set_size);
    worst.push_back(inst.worst_window_coverage);
  }
  report.accuracy = stat_of(acc);
  report.coverage = stat_of(cov);
  report.set_size = stat_of(size);
  report.time_conditional_coverage = stat_of(worst);

  // Fit-level spread: mean per fit, then spread across fit means.
  std::vector<double> fit_acc, fit_cov, fit_size;
  for (int fit = 0; fit < fits; ++fit) {
    std::vector<double> a, c, s;
    for (const InstanceMetrics& inst : report.instances) {
      if (inst.fit != fit) continue;
      a.push_back(inst.accuracy);
      c.push_back(inst.coverage);
      s.push_back(inst.set_size);
    }
    if (a.empty()) continue;
    fit_acc.push_back(stat_of(a).mean);
    fit_cov.push_back(stat_of(c).mean);
    fit_size.push_back(stat_of(s).mean);
  }
  report.accuracy_across_fits = stat_of(fit_acc);
  report.coverage_across_fits = stat_of(fit_cov);
  report.set_size_across_fits = stat_of(fit_size);

  // Per-window aggregation over the instances that saw the window.
  std::map<int, std::vector<const WindowTally*>> by_time;
  for (const InstanceMetrics& inst : report.instances) {
    for (const auto& [time, tally] : inst.windows) by_time[time].push_back(&tally);
  }
  for (const auto& [time, tallies] : by_time) {
    TimeWindowStats stats;
    stats.time = time;
    stats.instances = static_cast<int>(tallies.size());
    std::vector<double> a, c, s;
    double counts = 0.0;
    for (const WindowTally* tally : tallies) {
      a.push_back(static_cast<double>(tally->correct) / tally->count);
      c.push_back(static_cast<double>(tally->covered) / tally->count);
      s.push_back(tally->size_sum / tally->count);
      counts += tally->count;
    }
    stats.accuracy = stat_of(a);
    stats.coverage = stat_of(c);
    stats.set_size = stat_of(s);
    stats.mean_count = counts / stats.instances;
    report.per_time.push_back(stats);
  }
  return report;
}

}  // namespace ugnn
