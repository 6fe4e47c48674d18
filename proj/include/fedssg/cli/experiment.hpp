#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "fedssg/cli/config.hpp"
#include "fedssg/datasynth/benchmark.hpp"
#include "fedssg/datasynth/partition.hpp"
#include "fedssg/fedengine/federation.hpp"
#include "fedssg/generator/diffusion.hpp"

namespace fedssg::cli {

inline constexpr const char* kToolVersion = "fedssg 1.0.0";
std::string git_revision();

/// Stream roots of one seed. Every pipeline stage draws from its own child
/// so that changing one stage never shifts the randomness of another.
struct SeedStreams {
  RngStream spec, benchmark, split, model, generator, federation;
  explicit SeedStreams(std::uint64_t seed);
};

datasynth::Benchmark build_benchmark(const ExperimentConfig& config, std::uint64_t seed);
datasynth::FederatedSplit build_split(const ExperimentConfig& config, const datasynth::Benchmark& benchmark,
                                      std::uint64_t seed);
nn::ParamVector build_initial_model(const ExperimentConfig& config, const datasynth::Benchmark& benchmark,
                                    std::uint64_t seed);

/// Trained (or fitted) generator for the public data of `benchmark`. A
/// diffusion generator is looked up in, and stored to, `cache_dir` under a
/// key hashed from the training data, generator settings and seed; pass an
/// empty path to disable caching.
std::unique_ptr<gen::SampleGenerator> build_generator(const ExperimentConfig& config,
                                                      const datasynth::Benchmark& benchmark, std::uint64_t seed,
                                                      const std::filesystem::path& cache_dir);

/// Column names of the per-run CSV for the given domain names.
std::vector<std::string> csv_columns(const std::vector<std::string>& domain_names);
/// One row per evaluation: round,label,seed, accuracy per domain, average,
/// macro-F1 per domain, average.
std::string history_csv(const std::string& label, std::uint64_t seed, const std::vector<fed::EvalRecord>& history);

std::string run_file_stem(const std::string& label, std::uint64_t seed);

struct RunSummary {
  std::string label;
  std::uint64_t seed = 0;
  metrics::DomainReport final_report;
  std::filesystem::path csv;
};

/// Executes every (run, seed) pair of the grid into config.output_dir,
/// then writes the consolidated report. Each run's files are complete before
/// the manifest lists it as completed.
std::vector<RunSummary> run_experiment(const ExperimentConfig& config, std::ostream& log);

/// Writes each seed's datasets and benchmark manifest under <out>/data.
void generate_data(const ExperimentConfig& config, std::ostream& log);
/// Writes each seed's initial global model under <out>/models.
void pretrain_models(const ExperimentConfig& config, std::ostream& log);
/// Trains (or loads from cache) each seed's generator.
void train_generators(const ExperimentConfig& config, std::ostream& log);

}  // namespace fedssg::cli
