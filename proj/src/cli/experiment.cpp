#include "fedssg/cli/experiment.hpp"

#include <cstdio>
#include <filesystem>
#include <map>
#include <ostream>
#include <sstream>

#include "fedssg/cli/report.hpp"
#include "fedssg/core/error.hpp"
#include "fedssg/core/text_io.hpp"
#include "fedssg/fedengine/pretrain.hpp"
#include "fedssg/generator/checkpoint.hpp"
#include "fedssg/generator/gmm.hpp"
#include "fedssg/nn/checkpoint.hpp"

#ifndef FEDSSG_GIT_REV
#define FEDSSG_GIT_REV "unknown"
#endif

namespace fedssg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string git_revision() { return FEDSSG_GIT_REV; }

SeedStreams::SeedStreams(std::uint64_t seed)
    : spec(RngStream(seed).derive("spec")),
      benchmark(RngStream(seed).derive("benchmark")),
      split(RngStream(seed).derive("split")),
      model(RngStream(seed).derive("model")),
      generator(RngStream(seed).derive("generator")),
      federation(RngStream(seed).derive("federation")) {}

datasynth::Benchmark build_benchmark(const ExperimentConfig& config, std::uint64_t seed) {
  const SeedStreams s(seed);
  const auto spec = datasynth::make_spec(config.benchmark, s.spec);
  return datasynth::generate_benchmark(spec, s.benchmark);
}

datasynth::FederatedSplit build_split(const ExperimentConfig& config, const datasynth::Benchmark& benchmark,
                                      std::uint64_t seed) {
  return datasynth::make_federated_split(benchmark.private_typed, config.split_config(), SeedStreams(seed).split);
}

nn::ParamVector build_initial_model(const ExperimentConfig& config, const datasynth::Benchmark& benchmark,
                                    std::uint64_t seed) {
  const auto& pub = benchmark.public_untyped;
  const auto topology = config.model.topology(pub.dim(), pub.classes());
  return fed::initial_global_model(pub, topology, config.pretrain, config.federation.use_pretraining,
                                   SeedStreams(seed).model);
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t fnv1a(std::string_view text, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string generator_cache_key(const ExperimentConfig& config, const Dataset& data, std::uint64_t seed) {
  std::ostringstream os;
  write_dataset(os, data);
  json settings = config_to_json(config)["generator"];
  settings["stream"] = hex64(SeedStreams(seed).generator.key());
  return hex64(fnv1a(settings.dump(), fnv1a(os.str())));
}

}  // namespace

std::unique_ptr<gen::SampleGenerator> build_generator(const ExperimentConfig& config,
                                                      const datasynth::Benchmark& benchmark, std::uint64_t seed,
                                                      const fs::path& cache_dir) {
  const Dataset& pub = benchmark.public_untyped;
  const RngStream rng = SeedStreams(seed).generator;
  if (config.generator.kind == GeneratorKind::Gmm)
    return std::make_unique<gen::GmmSampler>(gen::fit_gmm_baseline(pub, config.generator.gmm_components, rng));

  fs::path file;
  if (!cache_dir.empty()) {
    file = cache_dir / ("generator-" + generator_cache_key(config, pub, seed) + ".txt");
    if (fs::exists(file)) return std::make_unique<gen::DiffusionGenerator>(gen::load_generator(file));
  }
  auto g = std::make_unique<gen::DiffusionGenerator>(gen::train_generator(pub, config.generator.diffusion, rng));
  if (!file.empty()) {
    fs::create_directories(cache_dir);
    gen::save_generator(file, *g);
  }
  return g;
}

std::vector<std::string> csv_columns(const std::vector<std::string>& names) {
  std::vector<std::string> cols = {"round", "label", "seed"};
  for (const auto& n : names) cols.push_back("acc_" + n);
  cols.push_back("acc_avg");
  for (const auto& n : names) cols.push_back("f1_" + n);
  cols.push_back("f1_avg");
  return cols;
}

std::string history_csv(const std::string& label, std::uint64_t seed, const std::vector<fed::EvalRecord>& history) {
  std::vector<std::string> names;
  const std::size_t domains = history.empty() ? datasynth::kDomainNames.size() : history.front().report.accuracy.size();
  for (std::size_t j = 0; j < domains; ++j)
    names.push_back(j < datasynth::kDomainNames.size() ? datasynth::kDomainNames[j] : "D" + std::to_string(j));
  std::string out;
  const auto cols = csv_columns(names);
  for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
  out += '\n';
  for (const auto& e : history) {
    out += std::to_string(e.round) + "," + label + "," + std::to_string(seed);
    for (double v : e.report.accuracy) out += "," + format_double(v);
    out += "," + format_double(e.report.accuracy_avg);
    for (double v : e.report.f1) out += "," + format_double(v);
    out += "," + format_double(e.report.f1_avg);
    out += '\n';
  }
  return out;
}

std::string run_file_stem(const std::string& label, std::uint64_t seed) {
  return label + "__seed" + std::to_string(seed);
}

namespace {

fs::path cache_dir_of(const ExperimentConfig& c) { return fs::path(c.output_dir) / "cache"; }

json manifest_json(const ExperimentConfig& config, const std::vector<ResolvedRun>& runs, const json& completed) {
  json planned = json::array();
  for (const auto& r : runs)
    for (auto seed : config.seeds)
      planned.push_back({{"label", r.label}, {"seed", seed}, {"csv", "runs/" + run_file_stem(r.label, seed) + ".csv"}});
  return {{"tool", kToolVersion},
          {"git_revision", git_revision()},
          {"config", config_to_json(config)},
          {"planned", planned},
          {"completed", completed}};
}

std::string jsonl(const std::vector<fed::RoundRecord>& rounds) {
  std::string out;
  for (const auto& r : rounds) out += r.to_json().dump() + '\n';
  return out;
}

}  // namespace

std::vector<RunSummary> run_experiment(const ExperimentConfig& config, std::ostream& log) {
  const auto runs = expand_runs(config);
  const fs::path out_dir(config.output_dir);
  fs::create_directories(out_dir / "runs");
  json completed = json::array();
  write_file_atomic(out_dir / "manifest.json", manifest_json(config, runs, completed).dump(2) + "\n");

  // Pretraining and generator training only depend on a subset of the
  // configuration; reuse them across runs that share it.
  std::map<std::string, nn::ParamVector> models;
  std::map<std::string, std::shared_ptr<gen::SampleGenerator>> generators;

  std::vector<RunSummary> summaries;
  for (const auto& run : runs) {
    const auto& rc = run.config;
    const json rj = config_to_json(rc);
    for (auto seed : config.seeds) {
      log << "[run] " << run.label << " seed " << seed << std::endl;
      const auto bench = build_benchmark(rc, seed);
      const auto split = build_split(rc, bench, seed);
      const std::string data_key = rj["benchmark"].dump() + "|" + std::to_string(seed);

      const std::string model_key =
          data_key + "|" + rj["model"].dump() + "|" + rj["pretrain"].dump() + "|" +
          (rc.federation.use_pretraining ? "pre" : "scratch");
      auto mit = models.find(model_key);
      if (mit == models.end()) mit = models.emplace(model_key, build_initial_model(rc, bench, seed)).first;

      std::shared_ptr<gen::SampleGenerator> generator;
      if (rc.federation.use_synthetic_augmentation) {
        const std::string gen_key = data_key + "|" + rj["generator"].dump();
        auto git = generators.find(gen_key);
        if (git == generators.end())
          git = generators.emplace(gen_key, build_generator(rc, bench, seed, cache_dir_of(rc))).first;
        generator = git->second;
      }

      const auto result =
          fed::run_federation(split, mit->second, rc.federation, generator.get(), SeedStreams(seed).federation);

      const std::string stem = run_file_stem(run.label, seed);
      const fs::path base = out_dir / "runs";
      write_file_atomic(base / (stem + ".rounds.jsonl"), jsonl(result.rounds));
      if (!result.plans.empty()) write_file_atomic(base / (stem + ".plans.json"), json(result.plans).dump(1) + "\n");
      nn::save_params(base / (stem + ".model"), result.final_params);
      // The CSV goes last: its presence marks the run as complete.
      const fs::path csv = base / (stem + ".csv");
      write_file_atomic(csv, history_csv(run.label, seed, result.history));
      completed.push_back({{"label", run.label}, {"seed", seed}});
      write_file_atomic(out_dir / "manifest.json", manifest_json(config, runs, completed).dump(2) + "\n");

      const auto& last = result.history.back().report;
      log << "       acc avg " << format_double(last.accuracy_avg) << "  f1 avg " << format_double(last.f1_avg)
          << std::endl;
      summaries.push_back({run.label, seed, last, csv});
    }
  }
  report_command(out_dir, log);
  return summaries;
}

void generate_data(const ExperimentConfig& config, std::ostream& log) {
  for (const auto& run : expand_runs(config)) {
    for (auto seed : config.seeds) {
      const auto bench = build_benchmark(run.config, seed);
      const fs::path dir = fs::path(config.output_dir) / "data" / (run_file_stem(run.label, seed));
      fs::create_directories(dir);
      save_dataset(dir / "private.txt", bench.private_typed);
      save_dataset(dir / "public.txt", bench.public_untyped);
      const auto spec = datasynth::make_spec(run.config.benchmark, SeedStreams(seed).spec);
      write_file_atomic(dir / "manifest.json",
                        datasynth::benchmark_manifest(spec, bench, seed).dump(2) + "\n");
      log << "[gen-data] " << dir.string() << ": " << bench.private_typed.size() << " private, "
          << bench.public_untyped.size() << " public samples" << std::endl;
    }
  }
}

void pretrain_models(const ExperimentConfig& config, std::ostream& log) {
  for (const auto& run : expand_runs(config)) {
    for (auto seed : config.seeds) {
      const auto bench = build_benchmark(run.config, seed);
      const auto& pub = bench.public_untyped;
      const auto topology = run.config.model.topology(pub.dim(), pub.classes());
      const fs::path dir = fs::path(config.output_dir) / "models";
      fs::create_directories(dir);
      const std::string stem = run_file_stem(run.label, seed);
      if (!run.config.federation.use_pretraining) {
        nn::save_params(dir / (stem + ".init.model"), fed::initial_params(topology, SeedStreams(seed).model));
        log << "[pretrain] " << stem << ": pretraining disabled, wrote random init" << std::endl;
        continue;
      }
      const auto res = fed::pretrain(pub, topology, run.config.pretrain, SeedStreams(seed).model);
      nn::save_params(dir / (stem + ".pretrained.model"), res.params);
      write_file_atomic(dir / (stem + ".pretrain.json"),
                        json{{"val_loss", res.val_loss}, {"val_accuracy", res.val_accuracy},
                             {"best_epoch", res.best_epoch}}
                                .dump(1) +
                            "\n");
      const double acc = res.best_epoch >= 0 ? res.val_accuracy[static_cast<std::size_t>(res.best_epoch)] : 0.0;
      log << "[pretrain] " << stem << ": best epoch " << res.best_epoch << ", validation accuracy "
          << format_double(acc) << std::endl;
    }
  }
}

void train_generators(const ExperimentConfig& config, std::ostream& log) {
  for (const auto& run : expand_runs(config)) {
    for (auto seed : config.seeds) {
      const auto bench = build_benchmark(run.config, seed);
      const auto g = build_generator(run.config, bench, seed, cache_dir_of(run.config));
      log << "[train-generator] " << run_file_stem(run.label, seed) << ": checksum " << hex64(g->checksum())
          << std::endl;
    }
  }
}

}  // namespace fedssg::cli
