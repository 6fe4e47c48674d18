// Command-line front end: gen-data, pretrain, train-generator, run, report.

#include <cstdlib>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <omp.h>

#include <CLI11.hpp>

#include "fedssg/cli/config.hpp"
#include "fedssg/cli/experiment.hpp"
#include "fedssg/cli/report.hpp"
#include "fedssg/core/error.hpp"

namespace {

// Worker count comes from the environment only; results do not depend on it.
void apply_worker_env() {
  if (const char* w = std::getenv("FEDSSG_WORKERS")) {
    const int n = std::atoi(w);
    if (n >= 1) omp_set_num_threads(n);
  }
}

}  // namespace

int main(int argc, char** argv) {
  apply_worker_env();
  CLI::App app{"Federated training simulator with synthetic minority augmentation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", fedssg::cli::kToolVersion);

  std::string config_path;
  std::string preset;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool print_config = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
    cmd->add_option("--preset", preset, "named experiment preset (table2, table4, clients, longer, desk)");
    cmd->add_option("--seed", seed, "run a single seed instead of the configured list");
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_flag("--print-config", print_config, "print the resolved configuration and exit");
  };
  auto* gen_data = app.add_subcommand("gen-data", "generate and export the benchmark datasets");
  auto* pretrain = app.add_subcommand("pretrain", "pretrain the global model on public data");
  auto* train_gen = app.add_subcommand("train-generator", "train the conditional generator on public data");
  auto* run = app.add_subcommand("run", "run the experiment grid and write reports");
  for (auto* c : {gen_data, pretrain, train_gen, run}) add_common(c);
  auto* report = app.add_subcommand("report", "summarize completed runs");
  report->add_option("--out", out_dir, "output directory of a previous run")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (report->parsed()) return fedssg::cli::report_command(out_dir, std::cout);

    fedssg::cli::ConfigSources sources;
    if (!config_path.empty()) sources.config_file = config_path;
    if (!preset.empty()) sources.preset = preset;
    for (auto* c : {gen_data, pretrain, train_gen, run})
      if (c->parsed() && c->count("--seed")) sources.seed = seed;
    if (!out_dir.empty()) sources.output_dir = out_dir;

    const auto json = fedssg::cli::resolve_config_json(sources);
    const auto config = fedssg::cli::parse_config(json);
    if (print_config) {
      std::cout << fedssg::cli::config_to_json(config).dump(2) << '\n';
      return 0;
    }
    if (gen_data->parsed()) fedssg::cli::generate_data(config, std::cout);
    if (pretrain->parsed()) fedssg::cli::pretrain_models(config, std::cout);
    if (train_gen->parsed()) fedssg::cli::train_generators(config, std::cout);
    if (run->parsed()) fedssg::cli::run_experiment(config, std::cout);
  } catch (const fedssg::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "fatal: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
