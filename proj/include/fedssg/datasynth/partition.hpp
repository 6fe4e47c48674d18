#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fedssg/core/dataset.hpp"
#include "fedssg/core/rng.hpp"

namespace fedssg::datasynth {

/// Number of clients per domain, proportional to `domain_sizes` with
/// largest-remainder rounding. Every domain gets at least one client; a
/// domain rounded down to zero takes a client from the currently largest
/// allocation (lowest index on ties). Throws ConfigError when K < J.
std::vector<int> assign_clients_to_domains(int clients, std::span<const std::int64_t> domain_sizes);

/// Splits one domain's samples across `n_clients` clients: for every class,
/// client proportions are drawn from Dirichlet(alpha, ..., alpha) and the
/// class's (shuffled) samples are dealt out by largest-remainder counts.
/// Client ids are `first_client_id`, `first_client_id + 1`, ...
std::vector<ClientDataset> dirichlet_partition(const Dataset& domain_data, int domain, int n_clients, double alpha,
                                               RngStream rng, int first_client_id = 0);

struct SplitConfig {
  int clients = 85;
  /// Explicit per-domain client counts; when unset they follow
  /// assign_clients_to_domains.
  std::optional<std::vector<int>> clients_per_domain;
  double dirichlet_alpha = 0.5;
  double test_fraction = 0.15;
  double val_fraction = 0.10;

  friend bool operator==(const SplitConfig&, const SplitConfig&) = default;
};

struct FederatedSplit {
  std::vector<ClientDataset> clients;
  std::vector<int> clients_per_domain;
  double dirichlet_alpha = 0.5;
  Dataset test_set;
  std::vector<Dataset> val_sets;  // one per client, same order as `clients`
};

/// Holds out a stratified centralized test set (test_fraction of every
/// (domain, class) cell), partitions each domain's remainder across its
/// clients, moves one sample into any client left empty, and carves a
/// client-local validation set (val_fraction, keeping at least one training
/// sample per client).
FederatedSplit make_federated_split(const Dataset& private_data, const SplitConfig& config, RngStream rng);

}  // namespace fedssg::datasynth
