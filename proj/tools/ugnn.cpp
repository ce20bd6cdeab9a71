// Command-line front end: dataset generation, single experiment runs, and
// reproduction of the published result tables.
//
// Exit codes: 0 success, 1 configuration or usage error, 2 runtime abort.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ugnn/runner.hpp"

namespace {

namespace fs = std::filesystem;

struct GenerateOptions {
  std::string preset;
  std::uint64_t seed = 1;
  int T = 0;
  std::string output;
};

int cmd_generate(const GenerateOptions& opt) {
  const ugnn::DsbmSpec spec = ugnn::generator_spec(opt.preset, opt.seed, opt.T);
  const ugnn::DsbmSample sample = ugnn::sample_dsbm(spec);

  const fs::path dir = opt.output.empty() ? fs::path("data") / opt.preset
                                          : fs::path(opt.output);
  fs::create_directories(dir);

  std::vector<std::string> names;
  names.reserve(spec.n);
  for (int i = 0; i < spec.n; ++i) names.push_back("n" + std::to_string(i));
  ugnn::save_edge_file(sample.graph, names, (dir / "edges.csv").string());

  {
    std::ofstream labels(dir / "labels.csv");
    if (!labels) throw std::runtime_error("cannot write " + (dir / "labels.csv").string());
    labels << "node,label\n";
    for (int i = 0; i < spec.n; ++i) {
      labels << names[i] << ',' << sample.labels.class_names[*sample.labels.get({i, 0})]
             << '\n';
    }
  }
  {
    const nlohmann::json manifest = {
        {"edges", "edges.csv"},     {"labels", "labels.csv"},
        {"windows", spec.T},        {"directed", false},
        {"weighted", false},        {"label_mode", "static-node"},
        {"expected_nodes", spec.n}, {"generator", opt.preset},
        {"seed", opt.seed}};
    std::ofstream out(dir / "manifest.json");
    if (!out) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
    out << manifest.dump(2) << '\n';
  }
  std::cout << "wrote " << (dir / "edges.csv").string() << " ("
            << sample.graph.total_edges() << " entries over " << spec.T
            << " windows)\n";
  std::cout << "wrote " << (dir / "labels.csv").string() << " (" << spec.n
            << " nodes, " << sample.labels.d << " classes)\n";
  std::cout << "wrote " << (dir / "manifest.json").string() << " (seed " << opt.seed
            << ")\n";
  return 0;
}

struct RunOptions {
  std::string config;
  std::string preset;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int jobs = 1;
  std::string output;
};

ugnn::ExperimentConfig resolve_run_config(const RunOptions& opt) {
  if (!opt.preset.empty() && !opt.config.empty()) {
    throw std::invalid_argument("config: give either --config or --preset, not both");
  }
  if (!opt.preset.empty()) return ugnn::preset_config(opt.preset);
  if (opt.config.empty()) {
    throw std::invalid_argument("config: --config or --preset is required");
  }
  if (fs::exists(opt.config)) {
    std::ifstream in(opt.config);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return ugnn::parse_config(text);
  }
  // Bare preset names are accepted where a path would go.
  const std::vector<std::string> names = ugnn::run_preset_names();
  if (std::find(names.begin(), names.end(), opt.config) != names.end()) {
    return ugnn::preset_config(opt.config);
  }
  throw std::invalid_argument("config: '" + opt.config +
                              "' is neither a readable file nor a preset name");
}

int cmd_run(const RunOptions& opt) {
  ugnn::ExperimentConfig config = resolve_run_config(opt);
  if (opt.seed_set) config.regime.seed = opt.seed;
  if (!opt.output.empty()) config.output = opt.output;

  const ugnn::RunResult result = ugnn::run_from_config(config, opt.jobs);
  const ugnn::MetricsReport& r = result.report;
  std::printf("%s %s (config %s)\n", ugnn::method_name(config).c_str(),
              ugnn::regime_name(config.regime.regime), result.hash.c_str());
  std::printf("  accuracy        %.3f +- %.3f\n", r.accuracy.mean, r.accuracy.sd);
  std::printf("  coverage        %.3f +- %.3f\n", r.coverage.mean, r.coverage.sd);
  std::printf("  set size        %.3f +- %.3f\n", r.set_size.mean, r.set_size.sd);
  std::printf("  worst window    %.3f +- %.3f\n", r.time_conditional_coverage.mean,
              r.time_conditional_coverage.sd);
  std::printf("  instances       %zu/%d (%d skipped)\n", r.instances.size(),
              r.planned_instances, r.skipped_instances);
  std::printf("  outputs         %s\n", result.summary_path.c_str());
  return 0;
}

struct ReproduceOptions {
  std::string table;
  std::string dataset = "sbm";
  std::string regime;
  int jobs = 1;
  std::string output = "out/reproduce";
};

int cmd_reproduce(const ReproduceOptions& opt) {
  std::string table = opt.table;
  if (table.rfind("table-", 0) == 0) table = table.substr(6);
  if (table != "accuracy" && table != "coverage" && table != "set-size") {
    throw std::invalid_argument(
        "reproduce: table must be table-accuracy, table-coverage or table-set-size");
  }
  if (!opt.regime.empty() && opt.regime != "temporal-transductive") {
    throw std::invalid_argument(
        "reproduce: --regime only accepts temporal-transductive (adds those rows)");
  }
  const bool include_temporal = opt.regime == "temporal-transductive";

  const std::vector<ugnn::ReproduceRow> plan =
      ugnn::reproduce_plan(table, opt.dataset, include_temporal);
  std::printf("reproducing %zu row(s) of the %s table on %s\n", plan.size(),
              table.c_str(), opt.dataset.c_str());

  std::vector<ugnn::ReproduceOutcome> outcomes;
  for (const ugnn::ReproduceRow& row : plan) {
    std::printf("  %-9s %-22s ...", row.reference.method, row.reference.regime);
    std::fflush(stdout);
    outcomes.push_back(ugnn::run_reproduce_row(row, opt.output, opt.jobs));
    const ugnn::ReproduceOutcome& o = outcomes.back();
    if (o.status == "SKIPPED") {
      std::printf(" SKIPPED (%s)\n", o.note.c_str());
    } else {
      std::printf(" %.3f (paper %.3f) %s\n", o.observed_mean, row.reference.mean,
                  o.status.c_str());
    }
  }
  ugnn::apply_directional_checks(outcomes);

  std::printf("\n%-10s %-9s %-22s %9s %9s  %s\n", "dataset", "method", "regime", "paper",
              "observed", "status");
  for (const ugnn::ReproduceOutcome& o : outcomes) {
    const ugnn::ReferenceRow& ref = o.row.reference;
    if (o.status == "SKIPPED") {
      std::printf("%-10s %-9s %-22s %9.3f %9s  SKIPPED: %s\n", ref.dataset, ref.method,
                  ref.regime, ref.mean, "-", o.note.c_str());
    } else {
      std::printf("%-10s %-9s %-22s %9.3f %9.3f  %s\n", ref.dataset, ref.method,
                  ref.regime, ref.mean, o.observed_mean, o.status.c_str());
    }
  }

  fs::create_directories(opt.output);
  const std::string csv = (fs::path(opt.output) / "reproduce.csv").string();
  ugnn::write_reproduce_csv(outcomes, csv);
  std::printf("\nwrote %s\n", csv.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conformal node classification on dynamic graphs"};
  app.require_subcommand(1);

  GenerateOptions gen;
  CLI::App* generate = app.add_subcommand("generate", "Write a synthetic dataset to disk");
  generate->add_option("--preset", gen.preset, "Generator name")
      ->required()
      ->check(CLI::IsMember(ugnn::generator_names()))
      ->envname("UGNN_PRESET");
  generate->add_option("--seed", gen.seed, "Generator seed")->envname("UGNN_SEED");
  generate->add_option("--T", gen.T, "Window count override (sbm-iid only)")
      ->envname("UGNN_T");
  generate->add_option("--output", gen.output, "Output directory (default data/<preset>)")
      ->envname("UGNN_OUTPUT");

  RunOptions run;
  CLI::App* run_cmd = app.add_subcommand("run", "Run one experiment");
  run_cmd->add_option("--config", run.config, "Config file path or preset name")
      ->envname("UGNN_CONFIG");
  run_cmd->add_option("--preset", run.preset, "Run preset name")->envname("UGNN_PRESET");
  run_cmd->add_option("--seed", run.seed, "Master seed override")->envname("UGNN_SEED");
  run_cmd->add_option("--jobs", run.jobs, "Worker thread cap")
      ->check(CLI::PositiveNumber)
      ->envname("UGNN_JOBS");
  run_cmd->add_option("--output", run.output, "Output directory override")
      ->envname("UGNN_OUTPUT");

  ReproduceOptions rep;
  CLI::App* reproduce = app.add_subcommand("reproduce", "Re-run a published table");
  reproduce->add_option("table", rep.table, "table-accuracy|table-coverage|table-set-size")
      ->required();
  reproduce->add_option("--dataset", rep.dataset, "sbm|sbm-iid|school|flight|trade")
      ->envname("UGNN_DATASET");
  reproduce->add_option("--regime", rep.regime, "temporal-transductive adds those rows");
  reproduce->add_option("--jobs", rep.jobs, "Worker thread cap")
      ->check(CLI::PositiveNumber)
      ->envname("UGNN_JOBS");
  reproduce->add_option("--output", rep.output, "Output directory")
      ->envname("UGNN_OUTPUT");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    run.seed_set = run_cmd->count("--seed") > 0 || std::getenv("UGNN_SEED") != nullptr;
    if (*generate) return cmd_generate(gen);
    if (*run_cmd) return cmd_run(run);
    return cmd_reproduce(rep);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::logic_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "abort: " << e.what() << '\n';
    return 2;
  }
}
