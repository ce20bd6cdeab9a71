#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include "ugnn/evaluation.hpp"
#include "ugnn/generators.hpp"

using namespace ugnn;

namespace {

// Two assortative communities, stationary over time.  Small and easy, so
// fits stay cheap and aggregation identities can be checked exactly.
Dataset small_dataset(std::uint64_t seed, int n = 30, int T = 4) {
  DsbmSpec spec;
  spec.n = n;
  spec.T = T;
  spec.seed = seed;
  spec.z = detail::equal_communities(n, 2);
  Matrix b(2, 2);
  b.at(0, 0) = b.at(1, 1) = 0.6;
  b.at(0, 1) = b.at(1, 0) = 0.05;
  spec.b_sequence.assign(T, b);
  DsbmSample sample = sample_dsbm(spec);
  Dataset data{std::move(sample.graph), std::move(sample.labels), {}};
  data.validate();
  return data;
}

ModelConfig fast_model() {
  ModelConfig config;
  config.hidden_dim = 8;
  config.dropout = 0.0;
  config.max_epochs = 60;
  config.patience = 60;
  return config;
}

std::vector<NodeTimePair> synthetic_universe(int n, int T) {
  std::vector<NodeTimePair> universe;
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < n; ++i) universe.push_back({i, t});
  }
  return universe;
}

std::multiset<std::pair<int, int>> pair_multiset(const std::vector<NodeTimePair>& pairs,
                                                 std::size_t begin, std::size_t end) {
  std::multiset<std::pair<int, int>> out;
  for (std::size_t i = begin; i < end; ++i) out.insert({pairs[i].node, pairs[i].time});
  return out;
}

std::array<int, 4> counts_of(const NodeTimeIndex& index) { return index.role_counts(); }

bool reports_equal(const MetricsReport& a, const MetricsReport& b) {
  if (a.instances.size() != b.instances.size()) return false;
  for (std::size_t i = 0; i < a.instances.size(); ++i) {
    const InstanceMetrics& x = a.instances[i];
    const InstanceMetrics& y = b.instances[i];
    if (x.seed != y.seed || x.fit != y.fit) return false;
    if (x.accuracy != y.accuracy || x.coverage != y.coverage) return false;
    if (x.set_size != y.set_size) return false;
    if (x.worst_window_coverage != y.worst_window_coverage) return false;
  }
  return a.accuracy.mean == b.accuracy.mean && a.accuracy.sd == b.accuracy.sd &&
         a.coverage.mean == b.coverage.mean && a.coverage.sd == b.coverage.sd &&
         a.set_size.mean == b.set_size.mean && a.set_size.sd == b.set_size.sd;
}

}  // namespace

TEST_CASE("apportion follows largest remainders", "[evaluation]") {
  using evaluation_detail::apportion;
  CHECK(apportion(100, {0.25, 0.25, 0.25, 0.25}) == std::vector<int>{25, 25, 25, 25});
  CHECK(apportion(7, {0.5, 0.5}) == std::vector<int>{4, 3});
  // 10 * (.2, .1, .35, .35) = (2, 1, 3.5, 3.5): the first .5 remainder wins.
  CHECK(apportion(10, {0.2, 0.1, 0.35, 0.35}) == std::vector<int>{2, 1, 4, 3});
  CHECK(apportion(3, {0.9, 0.1}) == std::vector<int>{3, 0});
  int total = 0;
  for (int c : apportion(97, {0.2, 0.1, 0.35, 0.35})) total += c;
  CHECK(total == 97);
}

TEST_CASE("transductive split assigns roles uniformly", "[evaluation]") {
  const std::vector<NodeTimePair> universe = synthetic_universe(25, 4);
  RegimeSpec spec;
  spec.train_ratio = spec.valid_ratio = spec.cal_ratio = spec.test_ratio = 0.25;
  spec.seed = 3;

  const NodeTimeIndex index = sample_split(universe, 4, spec, 11);
  const std::array<int, 4> counts = counts_of(index);
  CHECK(counts == std::array<int, 4>{25, 25, 25, 25});
  CHECK(index.m == 50);
  for (int w = 0; w < index.m; ++w) {
    CHECK((index.roles[w] == Role::calibration || index.roles[w] == Role::test));
  }
  CHECK(pair_multiset(index.pairs, 0, index.pairs.size()) ==
        pair_multiset(universe, 0, universe.size()));

  SECTION("deterministic in the run seed") {
    const NodeTimeIndex again = sample_split(universe, 4, spec, 11);
    CHECK(again.roles == index.roles);
    CHECK(std::equal(again.pairs.begin(), again.pairs.end(), index.pairs.begin(),
                     [](NodeTimePair a, NodeTimePair b) {
                       return a.node == b.node && a.time == b.time;
                     }));
    const NodeTimeIndex other = sample_split(universe, 4, spec, 12);
    CHECK_FALSE(std::equal(other.pairs.begin(), other.pairs.end(), index.pairs.begin(),
                           [](NodeTimePair a, NodeTimePair b) {
                             return a.node == b.node && a.time == b.time;
                           }));
  }

  SECTION("roles ignore time") {
    // Every window should hold pairs of all four roles at these sizes.
    std::map<int, std::set<Role>> seen;
    for (std::size_t w = 0; w < index.pairs.size(); ++w) {
      seen[index.pairs[w].time].insert(index.roles[w]);
    }
    for (const auto& [t, roles] : seen) CHECK(roles.size() == 4);
  }
}

TEST_CASE("semi-inductive split reserves the tail for testing", "[evaluation]") {
  const std::vector<NodeTimePair> universe = synthetic_universe(20, 8);
  RegimeSpec spec;
  spec.regime = Regime::semi_inductive;
  spec.seed = 5;

  CHECK(spec.tau(8) == 5);
  const NodeTimeIndex index = sample_split(universe, 8, spec, 21);

  int tail_pairs = 0;
  for (const NodeTimePair& pair : universe) tail_pairs += pair.time >= 5;
  const std::array<int, 4> counts = counts_of(index);
  CHECK(counts[static_cast<int>(Role::test)] == tail_pairs);

  for (std::size_t w = 0; w < index.pairs.size(); ++w) {
    if (index.roles[w] == Role::test) {
      CHECK(index.pairs[w].time >= 5);
    } else {
      CHECK(index.pairs[w].time < 5);
    }
  }
  // Pre-cutoff pairs split 0.35 : 0.20 : 0.10 across cal/train/valid.
  const int before = 20 * 5;
  CHECK(counts[static_cast<int>(Role::calibration)] ==
        evaluation_detail::apportion(before, {0.35, 0.20, 0.10})[0]);
  CHECK(index.m == counts[static_cast<int>(Role::calibration)] + tail_pairs);
}

TEST_CASE("temporal-transductive split calibrates past the cutoff", "[evaluation]") {
  const std::vector<NodeTimePair> universe = synthetic_universe(15, 8);
  RegimeSpec spec;
  spec.regime = Regime::temporal_transductive;
  spec.seed = 7;

  CHECK(spec.tau(8) == 2);
  const NodeTimeIndex index = sample_split(universe, 8, spec, 9);
  for (std::size_t w = 0; w < index.pairs.size(); ++w) {
    const bool tail = index.pairs[w].time >= 2;
    const Role role = index.roles[w];
    if (tail) {
      CHECK((role == Role::calibration || role == Role::test));
    } else {
      CHECK((role == Role::training || role == Role::validation));
    }
  }
  // Equal cal/test ratios halve the tail; 2:1 train/valid on the head.
  const std::array<int, 4> counts = counts_of(index);
  CHECK(counts[static_cast<int>(Role::calibration)] == 45);
  CHECK(counts[static_cast<int>(Role::test)] == 45);
  CHECK(counts[static_cast<int>(Role::training)] == 20);
  CHECK(counts[static_cast<int>(Role::validation)] == 10);
}

TEST_CASE("split and cutoff rejections", "[evaluation]") {
  RegimeSpec spec;
  SECTION("ratios must sum to one") {
    spec.train_ratio = 0.5;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  }
  SECTION("alpha range") {
    spec.alpha = 1.0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  }
  SECTION("transductive has no cutoff") {
    CHECK_THROWS_AS(spec.tau(8), std::logic_error);
  }
  SECTION("cutoff needs both sides") {
    spec.regime = Regime::temporal_transductive;
    CHECK_THROWS_AS(spec.tau(1), std::invalid_argument);
  }
  SECTION("tiny universes leave a role empty") {
    const std::vector<NodeTimePair> universe = synthetic_universe(2, 1);
    CHECK_THROWS_AS(sample_split(universe, 1, spec, 1), std::runtime_error);
  }
  SECTION("empty universe") {
    CHECK_THROWS_AS(sample_split({}, 4, spec, 1), std::invalid_argument);
  }
  SECTION("one-sided universe starves the tail roles") {
    std::vector<NodeTimePair> head_only = synthetic_universe(20, 2);
    spec.regime = Regime::temporal_transductive;
    // tau(8) = 2, so every pair sits before the cutoff.
    CHECK_THROWS_AS(sample_split(head_only, 8, spec, 1), std::runtime_error);
  }
}

TEST_CASE("permute_roles reshuffles only the pool", "[evaluation]") {
  const std::vector<NodeTimePair> universe = synthetic_universe(20, 4);
  RegimeSpec spec;
  spec.seed = 2;
  const NodeTimeIndex base = sample_split(universe, 4, spec, 17);

  const NodeTimeIndex perm = permute_roles(base, 99);
  CHECK(std::equal(perm.pairs.begin(), perm.pairs.end(), base.pairs.begin(),
                   [](NodeTimePair a, NodeTimePair b) {
                     return a.node == b.node && a.time == b.time;
                   }));
  CHECK(counts_of(perm) == counts_of(base));
  // Tail roles untouched.
  for (std::size_t w = base.m; w < base.roles.size(); ++w) {
    CHECK(perm.roles[w] == base.roles[w]);
  }
  // Pool roles moved for at least one position under this seed.
  CHECK(perm.roles != base.roles);

  const NodeTimeIndex again = permute_roles(base, 99);
  CHECK(again.roles == perm.roles);
  CHECK(permute_roles(base, 100).roles != perm.roles);
}

TEST_CASE("experiment aggregation identities", "[evaluation]") {
  const Dataset data = small_dataset(41);
  RegimeSpec regime;
  regime.n_fits = 2;
  regime.n_permutations = 5;
  regime.seed = 6;
  ScoreSpec score;
  score.randomized = false;

  const MetricsReport report = run_experiment(data, RepresentationKind::unfolded,
                                              fast_model(), regime, score);
  REQUIRE(report.planned_instances == 10);
  REQUIRE(report.skipped_instances == 0);
  REQUIRE(report.instances.size() == 10);
  CHECK(report.master_seed == 6);

  SECTION("marginals recompose from the window tallies") {
    for (const InstanceMetrics& inst : report.instances) {
      int count = 0, covered = 0, correct = 0;
      double size_sum = 0.0;
      double worst = 1.0;
      REQUIRE_FALSE(inst.windows.empty());
      for (const auto& [t, tally] : inst.windows) {
        REQUIRE(tally.count > 0);
        count += tally.count;
        covered += tally.covered;
        correct += tally.correct;
        size_sum += tally.size_sum;
        worst = std::min(worst, double(tally.covered) / tally.count);
      }
      CHECK(inst.coverage == double(covered) / count);
      CHECK(inst.accuracy == double(correct) / count);
      CHECK(inst.set_size == size_sum / count);
      CHECK(inst.worst_window_coverage == worst);
      CHECK(inst.worst_window_coverage <= inst.coverage);
    }
  }

  SECTION("report means average the instances") {
    std::vector<double> cov;
    for (const InstanceMetrics& inst : report.instances) cov.push_back(inst.coverage);
    CHECK(report.coverage.mean == Catch::Approx(stat_of(cov).mean).epsilon(0));
    CHECK(report.coverage.sd == Catch::Approx(stat_of(cov).sd).epsilon(0));
    // Role permutations move individual predictions, so spread is real.
    CHECK(report.accuracy.sd + report.coverage.sd + report.set_size.sd > 0.0);
    CHECK(report.coverage_across_fits.sd >= 0.0);
  }

  SECTION("per-time table covers every observed window once") {
    REQUIRE(report.per_time.size() == 4);
    for (const TimeWindowStats& window : report.per_time) {
      CHECK(window.instances == 10);
      std::vector<double> cov;
      for (const InstanceMetrics& inst : report.instances) {
        cov.push_back(double(inst.windows.at(window.time).covered) /
                      inst.windows.at(window.time).count);
      }
      CHECK(window.coverage.mean == Catch::Approx(stat_of(cov).mean).epsilon(0));
    }
  }

  SECTION("pool multiset is invariant across permutations") {
    std::map<std::uint64_t, int> seen;
    for (const InstanceMetrics& inst : report.instances) ++seen[inst.seed];
    CHECK(seen.size() == 10);  // all instance seeds distinct
  }
}

TEST_CASE("experiment is deterministic and parallel-stable", "[evaluation]") {
  const Dataset data = small_dataset(43);
  RegimeSpec regime;
  regime.n_fits = 2;
  regime.n_permutations = 3;
  regime.seed = 8;
  ScoreSpec score;

  const MetricsReport serial = run_experiment(data, RepresentationKind::unfolded,
                                              fast_model(), regime, score, 1);
  const MetricsReport repeat = run_experiment(data, RepresentationKind::unfolded,
                                              fast_model(), regime, score, 1);
  const MetricsReport parallel = run_experiment(data, RepresentationKind::unfolded,
                                                fast_model(), regime, score, 2);
  CHECK(reports_equal(serial, repeat));
  CHECK(reports_equal(serial, parallel));

  RegimeSpec other = regime;
  other.seed = 9;
  const MetricsReport different = run_experiment(data, RepresentationKind::unfolded,
                                                 fast_model(), regime, score, 1);
  CHECK(reports_equal(serial, different));  // same spec, fresh call
  const MetricsReport reseeded = run_experiment(data, RepresentationKind::unfolded,
                                                fast_model(), other, score, 1);
  CHECK_FALSE(reports_equal(serial, reseeded));
}

TEST_CASE("semi-inductive experiment tests only the tail windows", "[evaluation]") {
  const Dataset data = small_dataset(47, 24, 8);
  RegimeSpec regime;
  regime.regime = Regime::semi_inductive;
  regime.n_splits_semi_inductive = 3;
  regime.seed = 12;
  ScoreSpec score;
  score.randomized = false;

  const MetricsReport report = run_experiment(data, RepresentationKind::unfolded,
                                              fast_model(), regime, score);
  CHECK(report.planned_instances == 3);
  CHECK(report.instances.size() == 3);
  // Windows before the cutoff hold no test pairs and never appear.
  REQUIRE(report.per_time.size() == 3);
  for (const TimeWindowStats& window : report.per_time) CHECK(window.time >= 5);
  for (const InstanceMetrics& inst : report.instances) {
    CHECK(inst.windows.size() == 3);
    CHECK(inst.windows.begin()->first == 5);
  }
}

TEST_CASE("single-window runs collapse per-time onto the marginal", "[evaluation]") {
  const Dataset data = small_dataset(53, 40, 1);
  RegimeSpec regime;
  regime.n_fits = 2;
  regime.n_permutations = 4;
  regime.seed = 15;
  ScoreSpec score;
  score.randomized = false;

  const MetricsReport report = run_experiment(data, RepresentationKind::unfolded,
                                              fast_model(), regime, score);
  REQUIRE(report.per_time.size() == 1);
  CHECK(report.per_time[0].coverage.mean == report.coverage.mean);
  CHECK(report.per_time[0].coverage.sd == report.coverage.sd);
  for (const InstanceMetrics& inst : report.instances) {
    CHECK(inst.worst_window_coverage == inst.coverage);
  }
}

TEST_CASE("experiment validates its inputs", "[evaluation]") {
  const Dataset data = small_dataset(59, 20, 2);
  RegimeSpec regime;
  regime.n_fits = 1;
  regime.n_permutations = 1;
  ScoreSpec score;
  SECTION("jobs must be positive") {
    CHECK_THROWS_AS(run_experiment(data, RepresentationKind::unfolded, fast_model(),
                                   regime, score, 0),
                    std::invalid_argument);
  }
  SECTION("model config is checked before any fit") {
    ModelConfig bad = fast_model();
    bad.hidden_dim = 0;
    CHECK_THROWS_AS(
        run_experiment(data, RepresentationKind::unfolded, bad, regime, score),
        std::invalid_argument);
  }
}
