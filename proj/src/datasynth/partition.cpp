#include "fedssg/datasynth/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fedssg/core/error.hpp"
#include "fedssg/core/rounding.hpp"

namespace fedssg::datasynth {

std::vector<int> assign_clients_to_domains(int clients, std::span<const std::int64_t> domain_sizes) {
  const int domains = static_cast<int>(domain_sizes.size());
  require(domains >= 1, "assign_clients_to_domains: no domains");
  if (clients < domains) {
    throw ConfigError("assign_clients_to_domains: " + std::to_string(clients) + " clients cannot cover " +
                      std::to_string(domains) + " domains");
  }
  double total = 0.0;
  for (auto s : domain_sizes) {
    require(s >= 0, "assign_clients_to_domains: negative domain size");
    total += static_cast<double>(s);
  }
  std::vector<double> quotas(domain_sizes.size());
  for (std::size_t j = 0; j < quotas.size(); ++j) {
    quotas[j] = total > 0.0 ? clients * static_cast<double>(domain_sizes[j]) / total
                            : static_cast<double>(clients) / domains;
  }
  auto alloc = largest_remainder(quotas, clients);
  for (std::size_t j = 0; j < alloc.size(); ++j) {
    if (alloc[j] > 0) continue;
    auto donor = std::max_element(alloc.begin(), alloc.end());
    --*donor;
    alloc[j] = 1;
  }
  return {alloc.begin(), alloc.end()};
}

std::vector<ClientDataset> dirichlet_partition(const Dataset& domain_data, int domain, int n_clients, double alpha,
                                               RngStream rng, int first_client_id) {
  require(n_clients >= 1, "dirichlet_partition: need at least one client");
  require(alpha > 0.0, "dirichlet_partition: alpha must be positive");
  std::vector<std::vector<std::size_t>> per_client(static_cast<std::size_t>(n_clients));
  auto by_class = domain_data.indices_by_class();
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& idx = by_class[c];
    if (idx.empty()) continue;
    RngStream r = rng.derive_path({"class", static_cast<int>(c)});
    const auto props = r.dirichlet(static_cast<std::size_t>(n_clients), alpha);
    std::vector<double> quotas(props.size());
    const double n = static_cast<double>(idx.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < props.size(); ++k) {
      quotas[k] = n * props[k];
      acc += quotas[k];
    }
    // Guard the float sum so the integer total is always reachable.
    if (acc > n) {
      for (auto& q : quotas) q = q * (n / acc);
    }
    const auto counts = largest_remainder(quotas, static_cast<std::int64_t>(idx.size()));
    r.shuffle(idx);
    std::size_t pos = 0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
      for (std::int64_t i = 0; i < counts[k]; ++i) per_client[k].push_back(idx[pos++]);
    }
  }
  std::vector<ClientDataset> out;
  for (int k = 0; k < n_clients; ++k) {
    auto& idx = per_client[static_cast<std::size_t>(k)];
    std::sort(idx.begin(), idx.end());
    out.emplace_back(first_client_id + k, domain, domain_data.subset(idx));
  }
  return out;
}

FederatedSplit make_federated_split(const Dataset& private_data, const SplitConfig& config, RngStream rng) {
  require(config.dirichlet_alpha > 0.0, "split: dirichlet_alpha must be positive");
  require(config.test_fraction > 0.0 && config.val_fraction >= 0.0 && config.test_fraction + config.val_fraction < 1.0,
          "split: need 0 < test_fraction, 0 <= val_fraction, and test + val < 1");
  const int domains = private_data.domains();
  FederatedSplit split;
  split.dirichlet_alpha = config.dirichlet_alpha;

  if (config.clients_per_domain) {
    split.clients_per_domain = *config.clients_per_domain;
    require(static_cast<int>(split.clients_per_domain.size()) == domains, "split: clients_per_domain needs one entry per domain");
    int sum = 0;
    for (int k : split.clients_per_domain) {
      require(k >= 1, "split: every domain needs at least one client");
      sum += k;
    }
    require(sum == config.clients, "split: clients_per_domain must sum to the client count");
  } else {
    split.clients_per_domain = assign_clients_to_domains(config.clients, private_data.domain_counts());
  }

  // Stratified centralized test holdout.
  std::vector<std::vector<std::vector<std::size_t>>> cells(
      static_cast<std::size_t>(domains), std::vector<std::vector<std::size_t>>(static_cast<std::size_t>(private_data.classes())));
  for (std::size_t i = 0; i < private_data.size(); ++i) {
    const auto& s = private_data[i];
    cells[static_cast<std::size_t>(s.domain)][static_cast<std::size_t>(s.label)].push_back(i);
  }
  std::vector<std::size_t> test_idx;
  std::vector<std::vector<std::size_t>> train_idx(static_cast<std::size_t>(domains));
  for (int j = 0; j < domains; ++j) {
    for (int c = 0; c < private_data.classes(); ++c) {
      auto idx = cells[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)];
      RngStream r = rng.derive_path({"test-holdout", j, c});
      r.shuffle(idx);
      const auto n_test = static_cast<std::size_t>(std::llround(config.test_fraction * static_cast<double>(idx.size())));
      test_idx.insert(test_idx.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
      auto& dst = train_idx[static_cast<std::size_t>(j)];
      dst.insert(dst.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
    }
  }
  std::sort(test_idx.begin(), test_idx.end());
  split.test_set = private_data.subset(test_idx);

  std::vector<ClientDataset> clients;
  int next_id = 0;
  for (int j = 0; j < domains; ++j) {
    auto& idx = train_idx[static_cast<std::size_t>(j)];
    std::sort(idx.begin(), idx.end());
    Dataset domain_data = private_data.subset(idx);
    const int k = split.clients_per_domain[static_cast<std::size_t>(j)];
    auto part = dirichlet_partition(domain_data, j, k, config.dirichlet_alpha, rng.derive_path({"partition", j}), next_id);
    next_id += k;

    // Repair: no client may start empty.
    std::vector<std::vector<Sample>> pools;
    for (const auto& cd : part) pools.push_back(cd.real().samples());
    for (auto& pool : pools) {
      if (!pool.empty()) continue;
      auto donor = std::max_element(pools.begin(), pools.end(),
                                    [](const auto& a, const auto& b) { return a.size() < b.size(); });
      if (donor->size() <= 1) break;
      pool.push_back(donor->back());
      donor->pop_back();
    }
    for (std::size_t p = 0; p < part.size(); ++p) {
      clients.emplace_back(part[p].client_id(), j,
                           Dataset(std::move(pools[p]), private_data.classes(), domains, private_data.dim()));
    }
  }

  // Client-local validation carve-out.
  for (const auto& cd : clients) {
    const Dataset& real = cd.real();
    std::vector<std::size_t> order(real.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    RngStream r = rng.derive_path({"val", cd.client_id()});
    r.shuffle(order);
    auto n_val = static_cast<std::size_t>(std::llround(config.val_fraction * static_cast<double>(real.size())));
    if (real.size() > 0) n_val = std::min(n_val, real.size() - 1);
    std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
    std::sort(val.begin(), val.end());
    std::sort(train.begin(), train.end());
    split.val_sets.push_back(real.subset(val));
    split.clients.emplace_back(cd.client_id(), cd.domain(), real.subset(train));
  }
  return split;
}

}  // namespace fedssg::datasynth
