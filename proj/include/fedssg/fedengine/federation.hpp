#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "fedssg/allocator/allocator.hpp"
#include "fedssg/core/dataset.hpp"
#include "fedssg/core/rng.hpp"
#include "fedssg/datasynth/partition.hpp"
#include "fedssg/fedengine/objective.hpp"
#include "fedssg/generator/diffusion.hpp"
#include "fedssg/metrics/metrics.hpp"
#include "fedssg/nn/mlp.hpp"

namespace fedssg::fed {

enum class AggregationWeighting { RealCount, AugmentedCount };

std::string to_string(AggregationWeighting w);
AggregationWeighting weighting_from_string(const std::string& name);

struct FederationConfig {
  int clients = 85;
  int active_per_round = 6;
  int rounds = 150;
  int local_epochs = 5;
  std::size_t batch_size = 32;
  ObjectiveConfig objective{};
  bool use_synthetic_augmentation = false;
  bool use_pretraining = true;
  AggregationWeighting aggregation_weighting = AggregationWeighting::AugmentedCount;
  int eval_interval = 5;
  bool regenerate_each_round = false;
  bool class_balanced_local = false;
  double local_trunk_lr = 1e-4;
  double local_head_lr = 1e-4;
  double local_weight_decay = 0.0;
  /// Allocation: epsilon of the imbalance weights and S per domain.
  double epsilon = 1.0;
  std::vector<double> domain_scales = {20.0, 50.0, 80.0};
  /// Run each round's local training in a shuffled order (audit switch; the
  /// aggregate does not depend on it).
  bool permute_execution = false;

  friend bool operator==(const FederationConfig&, const FederationConfig&) = default;
  void validate() const;
};

struct ClientUpdate {
  int client_id = 0;
  nn::ParamVector params;
  double weight = 0.0;
};

/// Weighted coordinate-wise mean of the updates, reduced in ascending
/// client-id order whatever the order of `updates`. Throws ProtocolError on
/// an empty list, mismatched topologies or non-positive weights.
nn::ParamVector aggregate(std::span<const ClientUpdate> updates);

/// `active` distinct ids from [0, clients), uniformly at random from the
/// stream of `round`, in ascending order.
std::vector<int> select_clients(int clients, int active, int round, const RngStream& rng);

struct LocalResult {
  nn::ParamVector params;
  double weight = 0.0;
  double final_loss = 0.0;  // mean objective of the last epoch
};

/// Local optimization of one client starting from `global`. `previous` is
/// the client's last local model (MOON only; the global model stands in when
/// absent).
LocalResult local_train(const ClientDataset& client, const nn::ParamVector& global, const nn::ParamVector* previous,
                        const FederationConfig& config, RngStream rng);

/// Synthetic data of one client: allocation plan from its class counts, then
/// per-class draws from the generator tagged with the client's domain.
struct Augmentation {
  alloc::AllocationInput input;
  alloc::AllocationPlan plan;
  Dataset synthetic;
};

Augmentation synthesize_for_client(const ClientDataset& client, const gen::SampleGenerator& generator,
                                   const FederationConfig& config, RngStream rng);

struct RoundRecord {
  int round = 0;  // 1-based
  std::vector<int> selected;
  std::vector<double> update_norms;  // |theta_k - theta_global|, per selected client
  std::vector<double> local_losses;
  std::uint64_t checksum = 0;        // of the aggregated parameters
  double wall_seconds = 0.0;

  nlohmann::json to_json() const;
};

struct EvalRecord {
  int round = 0;
  metrics::DomainReport report;
};

struct FederationResult {
  nn::ParamVector final_params;
  std::vector<RoundRecord> rounds;
  std::vector<EvalRecord> history;
  std::vector<nlohmann::json> plans;  // one per augmented client
};

/// Optional observer called after every round.
using RoundObserver = std::function<void(const RoundRecord&)>;

/// Federated training from `theta0` over the clients of `split`. With
/// augmentation on, every client receives synthetic data from the frozen
/// `generator` (once, or every round with regenerate_each_round). Evaluates
/// on the centralized test set every eval_interval rounds and after the
/// last round.
FederationResult run_federation(const datasynth::FederatedSplit& split, const nn::ParamVector& theta0,
                                const FederationConfig& config, const gen::SampleGenerator* generator,
                                RngStream rng, const RoundObserver& observer = {});

}  // namespace fedssg::fed
