#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <string>

#include "ugnn/config.hpp"

using namespace ugnn;
using Catch::Matchers::ContainsSubstring;

namespace {

ExperimentConfig sample_config() {
  ExperimentConfig config;
  config.dataset.generator = "sbm-iid";
  config.dataset.seed = 9;
  config.dataset.T = 4;
  config.representation = RepresentationKind::block_diagonal;
  config.model.architecture = Architecture::gat;
  config.model.hidden_dim = 24;
  config.regime.regime = Regime::semi_inductive;
  config.regime.alpha = 0.2;
  config.regime.seed = 77;
  config.score.kind = ScoreKind::raps;
  config.score.lambda = 0.01;
  config.output = "out/sample";
  return config;
}

}  // namespace

TEST_CASE("config round trip is identity", "[config]") {
  const ExperimentConfig config = sample_config();
  const std::string once = to_json(config).dump();
  const ExperimentConfig reparsed = parse_config(once);
  REQUIRE(to_json(reparsed).dump() == once);

  // A manifest-based config survives the trip too.
  ExperimentConfig manifest_config;
  manifest_config.dataset.generator.clear();
  manifest_config.dataset.manifest = "data/school/manifest.json";
  const std::string dump = to_json(manifest_config).dump();
  REQUIRE(to_json(parse_config(dump)).dump() == dump);
}

TEST_CASE("config parsing fills defaults for absent sections", "[config]") {
  const ExperimentConfig config = parse_config(R"({"dataset": {"generator": "sbm-paper"}})");
  REQUIRE(config.representation == RepresentationKind::unfolded);
  REQUIRE(config.model.hidden_dim == 16);
  REQUIRE(config.regime.regime == Regime::transductive);
  REQUIRE(config.regime.alpha == 0.1);
  REQUIRE(config.score.kind == ScoreKind::aps);
  REQUIRE(config.output == "out");
}

TEST_CASE("config errors carry field paths", "[config]") {
  CHECK_THROWS_WITH(parse_config(R"({"dataset": {"generator": "sbm-paper"}, "mdoel": {}})"),
                    ContainsSubstring("config.mdoel") && ContainsSubstring("unknown key"));
  CHECK_THROWS_WITH(
      parse_config(R"({"dataset": {"generator": "sbm-paper"}, "model": {"hidden": 4}})"),
      ContainsSubstring("model.hidden") && ContainsSubstring("unknown key"));
  CHECK_THROWS_WITH(
      parse_config(
          R"({"dataset": {"generator": "sbm-paper"}, "regime": {"alpha": "big"}})"),
      ContainsSubstring("regime.alpha") && ContainsSubstring("wrong type"));
  CHECK_THROWS_WITH(
      parse_config(
          R"({"dataset": {"generator": "sbm-paper"}, "regime": {"ratios": [0.5, 0.5]}})"),
      ContainsSubstring("regime.ratios") && ContainsSubstring("4 entries"));
  CHECK_THROWS_WITH(
      parse_config(
          R"({"dataset": {"generator": "sbm-paper"},
              "regime": {"ratios": [0.4, 0.2, 0.2, 0.1]}})"),
      ContainsSubstring("regime.ratios: must sum to 1"));
  CHECK_THROWS_WITH(parse_config(R"({"dataset": {}})"),
                    ContainsSubstring("dataset: set exactly one"));
  CHECK_THROWS_WITH(
      parse_config(R"({"dataset": {"generator": "sbm-paper", "manifest": "x.json"}})"),
      ContainsSubstring("dataset: set exactly one"));
  CHECK_THROWS_WITH(parse_config(R"({"dataset": {"generator": "erdos"}})"),
                    ContainsSubstring("dataset.generator") &&
                        ContainsSubstring("erdos"));
  CHECK_THROWS_WITH(parse_config("{nope"), ContainsSubstring("config:"));
  CHECK_THROWS_WITH(
      parse_config(R"({"dataset": {"generator": "sbm-paper"}, "score": {"kind": "naive"}})"),
      ContainsSubstring("score.kind"));
}

TEST_CASE("window override is generator dependent", "[config]") {
  const DsbmSpec iid = generator_spec("sbm-iid", 3, 5);
  REQUIRE(iid.T == 5);
  REQUIRE(generator_spec("sbm-iid", 3).T == 8);
  REQUIRE(generator_spec("sbm-paper", 3).T == 8);
  CHECK_THROWS_WITH(generator_spec("sbm-paper", 3, 5), ContainsSubstring("dataset.T"));
  CHECK_THROWS_WITH(generator_spec("two-block", 3, 5), ContainsSubstring("dataset.T"));
}

TEST_CASE("config hash is stable and sensitive", "[config]") {
  const ExperimentConfig config = sample_config();
  const std::string h = config_hash(config);
  REQUIRE(h.size() == 16);
  REQUIRE(h.find_first_not_of("0123456789abcdef") == std::string::npos);
  REQUIRE(config_hash(config) == h);
  REQUIRE(config_hash(parse_config(to_json(config).dump())) == h);

  ExperimentConfig changed = sample_config();
  changed.regime.seed += 1;
  REQUIRE(config_hash(changed) != h);
  changed = sample_config();
  changed.score.lambda = 0.1;
  REQUIRE(config_hash(changed) != h);
}

TEST_CASE("run presets cover the full grid", "[config]") {
  const std::vector<std::string> names = run_preset_names();
  REQUIRE(names.size() == 36);
  std::set<std::string> unique(names.begin(), names.end());
  REQUIRE(unique.size() == 36);
  for (const std::string& name : names) {
    const ExperimentConfig config = preset_config(name);
    REQUIRE(config.output == "out/" + name);
    REQUIRE((config.score.randomized ==
             (config.regime.regime == Regime::temporal_transductive)));
  }
}

TEST_CASE("preset spot checks", "[config]") {
  const ExperimentConfig a = preset_config("sbm_ugcn_trans");
  REQUIRE(a.dataset.generator == "sbm-paper");
  REQUIRE(a.dataset.seed == 2);
  REQUIRE(a.representation == RepresentationKind::unfolded);
  REQUIRE(a.model.architecture == Architecture::gcn);
  REQUIRE(a.regime.regime == Regime::transductive);
  REQUIRE_FALSE(a.score.randomized);

  const ExperimentConfig b = preset_config("sbm_iid_blockgat_semiind");
  REQUIRE(b.dataset.generator == "sbm-iid");
  REQUIRE(b.dataset.seed == 1);
  REQUIRE(b.representation == RepresentationKind::block_diagonal);
  REQUIRE(b.model.architecture == Architecture::gat);
  REQUIRE(b.regime.regime == Regime::semi_inductive);

  const ExperimentConfig c = preset_config("two_block_ugat_temptrans");
  REQUIRE(c.dataset.generator == "two-block");
  REQUIRE(c.representation == RepresentationKind::unfolded);
  REQUIRE(c.model.architecture == Architecture::gat);
  REQUIRE(c.regime.regime == Regime::temporal_transductive);
  REQUIRE(c.score.randomized);

  CHECK_THROWS_WITH(preset_config("sbm_ugcn"), ContainsSubstring("unknown preset"));
  CHECK_THROWS_WITH(preset_config("sbm_mlp_trans"), ContainsSubstring("unknown preset"));
  CHECK_THROWS_WITH(preset_config(""), ContainsSubstring("unknown preset"));
}
