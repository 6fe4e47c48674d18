#include "fedssg/fedengine/federation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>

#include "fedssg/core/error.hpp"
#include "fedssg/datasynth/sampler.hpp"
#include "fedssg/kernels/kernels.hpp"
#include "fedssg/nn/optimizer.hpp"

namespace fedssg::fed {

std::string to_string(AggregationWeighting w) {
  return w == AggregationWeighting::RealCount ? "real" : "augmented";
}

AggregationWeighting weighting_from_string(const std::string& name) {
  if (name == "real") return AggregationWeighting::RealCount;
  if (name == "augmented") return AggregationWeighting::AugmentedCount;
  throw ConfigError("unknown aggregation weighting '" + name + "' (expected real or augmented)");
}

void FederationConfig::validate() const {
  require(clients >= 1, "federation: clients must be >= 1");
  require(active_per_round >= 1 && active_per_round <= clients, "federation: active_per_round must be in [1, clients]");
  require(rounds >= 1, "federation: rounds must be >= 1");
  require(local_epochs >= 0, "federation: local_epochs must be >= 0");
  require(batch_size >= 1, "federation: batch_size must be >= 1");
  require(eval_interval >= 1, "federation: eval_interval must be >= 1");
  require(objective.prox_mu >= 0.0, "federation: prox_mu must be >= 0");
  require(objective.moon_tau > 0.0, "federation: moon_tau must be > 0");
  require(local_trunk_lr >= 0.0 && local_head_lr >= 0.0, "federation: learning rates must be >= 0");
  require(local_weight_decay >= 0.0, "federation: weight decay must be >= 0");
  require(epsilon > 0.0, "federation: epsilon must be > 0");
  for (double s : domain_scales) require(s >= 0.0, "federation: domain scales must be >= 0");
}

nn::ParamVector aggregate(std::span<const ClientUpdate> updates) {
  if (updates.empty()) throw ProtocolError("aggregate: no updates");
  std::vector<std::size_t> order(updates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return updates[a].client_id < updates[b].client_id; });
  const auto& ref = updates[order.front()].params;
  std::vector<std::span<const double>> inputs;
  std::vector<double> weights;
  for (auto i : order) {
    const auto& u = updates[i];
    if (!(u.params.topology == ref.topology) || u.params.values.size() != ref.values.size())
      throw ProtocolError("aggregate: client " + std::to_string(u.client_id) + " sent a different topology");
    if (!(u.weight > 0.0) || !std::isfinite(u.weight))
      throw ProtocolError("aggregate: client " + std::to_string(u.client_id) + " has a non-positive weight");
    inputs.emplace_back(u.params.values);
    weights.push_back(u.weight);
  }
  nn::ParamVector out{ref.topology, std::vector<double>(ref.values.size(), 0.0)};
  kernels::weighted_mean(inputs, weights, out.values);
  return out;
}

std::vector<int> select_clients(int clients, int active, int round, const RngStream& rng) {
  require(active >= 0 && active <= clients, "select_clients: active must be in [0, clients]");
  RngStream r = rng.derive(round);
  std::vector<int> ids(static_cast<std::size_t>(clients));
  std::iota(ids.begin(), ids.end(), 0);
  // Partial Fisher-Yates: the first `active` slots are a uniform subset.
  for (int i = 0; i < active; ++i) {
    const auto j = static_cast<std::size_t>(i) + static_cast<std::size_t>(r.below(static_cast<std::uint64_t>(clients - i)));
    std::swap(ids[static_cast<std::size_t>(i)], ids[j]);
  }
  ids.resize(static_cast<std::size_t>(active));
  std::sort(ids.begin(), ids.end());
  return ids;
}

LocalResult local_train(const ClientDataset& client, const nn::ParamVector& global, const nn::ParamVector* previous,
                        const FederationConfig& config, RngStream rng) {
  const Dataset data = config.use_synthetic_augmentation ? client.augmented() : client.real();
  require(!data.is_empty(), "local_train: client " + std::to_string(client.client_id()) + " has no data");

  LocalResult result;
  result.params = global;
  result.weight = static_cast<double>(config.aggregation_weighting == AggregationWeighting::RealCount
                                          ? client.real().size()
                                          : data.size());
  if (config.local_epochs == 0) return result;

  nn::OptimizerConfig oc;
  oc.kind = nn::OptimizerKind::AdamW;
  oc.weight_decay = config.local_weight_decay;
  auto opt = nn::Optimizer::for_classifier(oc, result.params, config.local_trunk_lr, config.local_head_lr);

  const auto& obj = config.objective;
  const bool moon = obj.strategy == Strategy::Moon && obj.moon_mu != 0.0;
  const nn::ParamVector& prev = previous ? *previous : global;

  RngStream order_rng = rng.derive("order");
  RngStream dropout_rng = rng.derive("dropout");
  std::optional<datasynth::ClassBalancedSampler> sampler;
  if (config.class_balanced_local) sampler.emplace(data, config.batch_size, rng.derive("sampler"));

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t batches = (data.size() + config.batch_size - 1) / config.batch_size;
  std::vector<double> grad(result.params.values.size());
  for (int epoch = 0; epoch < config.local_epochs; ++epoch) {
    if (!sampler) order_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      std::vector<std::size_t> idx;
      if (sampler) {
        idx = sampler->next_batch();
      } else {
        const std::size_t begin = b * config.batch_size;
        const std::size_t end = std::min(order.size(), begin + config.batch_size);
        idx.assign(order.begin() + static_cast<std::ptrdiff_t>(begin), order.begin() + static_cast<std::ptrdiff_t>(end));
      }
      const auto batch = nn::make_batch(data, idx);
      ContrastiveRefs refs;
      if (moon) {
        refs.z_global = nn::forward(global.topology, global.values, batch.inputs, nn::Mode::Eval).features;
        refs.z_previous = nn::forward(prev.topology, prev.values, batch.inputs, nn::Mode::Eval).features;
      }
      std::fill(grad.begin(), grad.end(), 0.0);
      const auto v = local_objective(result.params.topology, result.params.values, batch.inputs, batch.labels, obj,
                                     global.values, moon ? &refs : nullptr, nn::Mode::Train, &dropout_rng, grad);
      opt.step(result.params.values, grad);
      epoch_loss += v.total;
    }
    result.final_loss = epoch_loss / static_cast<double>(batches);
  }
  return result;
}

Augmentation synthesize_for_client(const ClientDataset& client, const gen::SampleGenerator& generator,
                                   const FederationConfig& config, RngStream rng) {
  const Dataset& real = client.real();
  require(client.domain() >= 0 && static_cast<std::size_t>(client.domain()) < config.domain_scales.size(),
          "synthesize: no domain scale for domain " + std::to_string(client.domain()));
  require(generator.dim() == real.dim() && generator.classes() == real.classes(),
          "synthesize: generator shape does not match client data");
  Augmentation a;
  a.input = alloc::AllocationInput{real.class_counts(), client.domain(), config.epsilon,
                                   config.domain_scales[static_cast<std::size_t>(client.domain())]};
  a.plan = alloc::synthetic_budget(a.input);
  std::vector<Sample> samples;
  for (int c = 0; c < real.classes(); ++c) {
    const auto n = a.plan.per_class_synthetic[static_cast<std::size_t>(c)];
    if (n <= 0) continue;
    auto part = generator.sample(c, static_cast<std::size_t>(n), client.domain(), rng.derive(c));
    std::move(part.begin(), part.end(), std::back_inserter(samples));
  }
  a.synthetic = Dataset(std::move(samples), real.classes(), real.domains(), real.dim());
  return a;
}

nlohmann::json RoundRecord::to_json() const {
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(checksum));
  return {{"round", round},          {"selected", selected},     {"update_norms", update_norms},
          {"local_losses", local_losses}, {"checksum", hex}, {"wall_seconds", wall_seconds}};
}

namespace {

template <class F>
void parallel_for(std::size_t n, F&& body) {
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
#pragma omp critical(fedssg_parallel_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

FederationResult run_federation(const datasynth::FederatedSplit& split, const nn::ParamVector& theta0,
                                const FederationConfig& config, const gen::SampleGenerator* generator,
                                RngStream rng, const RoundObserver& observer) {
  config.validate();
  require(static_cast<int>(split.clients.size()) == config.clients,
          "federation: split has " + std::to_string(split.clients.size()) + " clients, config expects " +
              std::to_string(config.clients));
  const bool augment = config.use_synthetic_augmentation;
  if (augment) {
    require(generator != nullptr, "federation: synthetic augmentation requires a generator");
    require(config.domain_scales.size() == split.clients_per_domain.size(),
            "federation: one domain scale per domain required");
  }
  const std::uint64_t generator_checksum = generator ? generator->checksum() : 0;

  std::vector<ClientDataset> clients = split.clients;
  FederationResult result;
  if (augment && !config.regenerate_each_round) {
    std::vector<Augmentation> aug(clients.size());
    parallel_for(clients.size(), [&](std::size_t k) {
      aug[k] = synthesize_for_client(clients[k], *generator, config,
                                     rng.derive_path({"synthetic", clients[k].client_id()}));
    });
    for (std::size_t k = 0; k < clients.size(); ++k) {
      result.plans.push_back(alloc::plan_to_json(clients[k].client_id(), aug[k].input, aug[k].plan));
      clients[k] = clients[k].with_synthetic(std::move(aug[k].synthetic));
    }
  }

  nn::ParamVector global = theta0;
  std::vector<std::optional<nn::ParamVector>> previous(clients.size());
  const bool keep_previous = config.objective.strategy == Strategy::Moon;
  const RngStream selection_rng = rng.derive("selection");

  for (int round = 1; round <= config.rounds; ++round) {
    const auto t0 = std::chrono::steady_clock::now();
    RoundRecord rec;
    rec.round = round;
    rec.selected = select_clients(config.clients, config.active_per_round, round, selection_rng);

    std::vector<std::size_t> exec(rec.selected.size());
    std::iota(exec.begin(), exec.end(), std::size_t{0});
    if (config.permute_execution) rng.derive_path({"execution-order", round}).shuffle(exec);

    std::vector<LocalResult> local(rec.selected.size());
    parallel_for(exec.size(), [&](std::size_t e) {
      const std::size_t pos = exec[e];
      const int k = rec.selected[pos];
      const auto ku = static_cast<std::size_t>(k);
      ClientDataset client = clients[ku];
      if (augment && config.regenerate_each_round) {
        client = client.with_synthetic(
            synthesize_for_client(client, *generator, config, rng.derive_path({"synthetic", k, round})).synthetic);
      }
      const nn::ParamVector* prev = previous[ku] ? &*previous[ku] : nullptr;
      local[pos] = local_train(client, global, prev, config, rng.derive_path({"local", round, k}));
    });

    std::vector<ClientUpdate> updates;
    for (std::size_t i = 0; i < local.size(); ++i) {
      rec.update_norms.push_back(distance(local[i].params.values, global.values));
      rec.local_losses.push_back(local[i].final_loss);
      updates.push_back(ClientUpdate{rec.selected[i], local[i].params, local[i].weight});
    }
    global = aggregate(updates);
    if (keep_previous)
      for (std::size_t i = 0; i < local.size(); ++i)
        previous[static_cast<std::size_t>(rec.selected[i])] = std::move(local[i].params);

    rec.checksum = nn::checksum(global.values);
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (round % config.eval_interval == 0 || round == config.rounds) {
      const auto cms = metrics::evaluate(global, split.test_set);
      result.history.push_back(EvalRecord{round, metrics::per_domain_report(cms)});
    }
    if (observer) observer(rec);
    result.rounds.push_back(std::move(rec));
  }

  if (generator && generator->checksum() != generator_checksum)
    throw ProtocolError("federation: generator parameters changed during the run");
  result.final_params = std::move(global);
  return result;
}

}  // namespace fedssg::fed
