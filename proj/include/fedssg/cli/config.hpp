#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedssg/datasynth/benchmark.hpp"
#include "fedssg/datasynth/partition.hpp"
#include "fedssg/fedengine/federation.hpp"
#include "fedssg/fedengine/pretrain.hpp"
#include "fedssg/generator/diffusion.hpp"
#include "fedssg/nn/mlp.hpp"

namespace fedssg::cli {

struct ModelConfig {
  std::vector<int> trunk = {32, 32};
  std::vector<int> head = {16};
  double dropout = 0.3;
  nn::Activation activation = nn::Activation::ReLU;

  nn::MlpTopology topology(int input_dim, int classes) const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

enum class GeneratorKind { Diffusion, Gmm };

struct GeneratorSettings {
  GeneratorKind kind = GeneratorKind::Diffusion;
  gen::GeneratorConfig diffusion{};
  int gmm_components = 3;

  friend bool operator==(const GeneratorSettings&, const GeneratorSettings&) = default;
};

/// One entry of a run grid: a label and a JSON merge patch over the base
/// configuration.
struct RunSpec {
  std::string label;
  nlohmann::json overrides = nlohmann::json::object();

  friend bool operator==(const RunSpec&, const RunSpec&) = default;
};

struct ExperimentConfig {
  datasynth::BenchmarkKnobs benchmark{};
  std::optional<std::vector<int>> clients_per_domain;
  double dirichlet_alpha = 0.5;
  ModelConfig model{};
  fed::PretrainConfig pretrain{};
  GeneratorSettings generator{};
  bool allow_non_monotone_scales = false;
  fed::FederationConfig federation{};
  std::vector<std::uint64_t> seeds = {1};
  std::string output_dir = "out";
  std::vector<RunSpec> runs;

  datasynth::SplitConfig split_config() const;
  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Full default configuration as JSON (every accepted key appears).
nlohmann::json default_config_json();

std::vector<std::string> preset_names();
/// Merge patch of a named preset; throws ConfigError for unknown names.
nlohmann::json preset_json(const std::string& name);

/// Strict conversion: unknown keys and ill-typed or out-of-range values are
/// collected and reported together in one ConfigError, one line per field.
ExperimentConfig parse_config(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);

/// Sources merged in order: defaults, preset (flag wins over the file's
/// "preset" key), config file, command-line flags.
struct ConfigSources {
  std::optional<std::filesystem::path> config_file;
  std::optional<std::string> preset;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
};

nlohmann::json resolve_config_json(const ConfigSources& sources);
ExperimentConfig load_config(const ConfigSources& sources);

/// A labeled, fully resolved run of the grid.
struct ResolvedRun {
  std::string label;
  ExperimentConfig config;
};

/// Applies every run patch to the base configuration (or yields a single
/// run labeled after the strategy when `runs` is empty) and validates each
/// result with check_experiment.
std::vector<ResolvedRun> expand_runs(const ExperimentConfig& config);

/// Cross-field checks: client counts, domain-scale ordering (unless
/// overridden), generator settings.
void check_experiment(const ExperimentConfig& config);

/// Label used for a run without an explicit one, e.g. "fedavg",
/// "fedssg", "moon-scratch".
std::string default_label(const ExperimentConfig& config);

}  // namespace fedssg::cli
