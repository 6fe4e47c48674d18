#include "fedssg/core/dataset.hpp"

#include <string>

#include "fedssg/core/error.hpp"

namespace fedssg {

Dataset::Dataset(std::vector<Sample> samples, int classes, int domains, int dim)
    : samples_(std::move(samples)),
      classes_(classes),
      domains_(domains),
      dim_(dim),
      class_counts_(static_cast<std::size_t>(classes), 0),
      domain_counts_(static_cast<std::size_t>(domains), 0) {
  require(classes >= 1 && domains >= 1 && dim >= 1, "Dataset: classes, domains and dim must be positive");
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const Sample& s = samples_[i];
    if (static_cast<int>(s.features.size()) != dim_) {
      throw ConfigError("Dataset: sample " + std::to_string(i) + " has dimension " +
                        std::to_string(s.features.size()) + ", expected " + std::to_string(dim_));
    }
    if (s.label < 0 || s.label >= classes_) {
      throw ConfigError("Dataset: sample " + std::to_string(i) + " label out of range");
    }
    if (s.domain < 0 || s.domain >= domains_) {
      throw ConfigError("Dataset: sample " + std::to_string(i) + " domain out of range");
    }
    ++class_counts_[static_cast<std::size_t>(s.label)];
    ++domain_counts_[static_cast<std::size_t>(s.domain)];
  }
}

Dataset Dataset::empty(int classes, int domains, int dim) { return Dataset({}, classes, domains, dim); }

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  std::vector<Sample> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(samples_.at(i));
  return Dataset(std::move(out), classes_, domains_, dim_);
}

Dataset Dataset::concat(const Dataset& other) const {
  if (other.is_empty()) return *this;
  if (is_empty() && classes_ == 0) return other;
  require(other.classes_ == classes_ && other.domains_ == domains_ && other.dim_ == dim_,
          "Dataset::concat: shape mismatch");
  std::vector<Sample> out = samples_;
  out.insert(out.end(), other.samples_.begin(), other.samples_.end());
  return Dataset(std::move(out), classes_, domains_, dim_);
}

Dataset Dataset::filter_domain(int domain) const {
  std::vector<Sample> out;
  for (const auto& s : samples_) {
    if (s.domain == domain) out.push_back(s);
  }
  return Dataset(std::move(out), classes_, domains_, dim_);
}

std::vector<std::vector<std::size_t>> Dataset::indices_by_class() const {
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(classes_));
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    out[static_cast<std::size_t>(samples_[i].label)].push_back(i);
  }
  return out;
}

Histogram histogram(const Dataset& dataset) {
  Histogram h{std::vector<std::int64_t>(static_cast<std::size_t>(dataset.classes()), 0),
              std::vector<std::int64_t>(static_cast<std::size_t>(dataset.domains()), 0)};
  for (const auto& s : dataset.samples()) {
    ++h.class_counts[static_cast<std::size_t>(s.label)];
    ++h.domain_counts[static_cast<std::size_t>(s.domain)];
  }
  return h;
}

ClientDataset::ClientDataset(int client_id, int domain, Dataset real, Dataset synthetic)
    : client_id_(client_id), domain_(domain), real_(std::move(real)), synthetic_(std::move(synthetic)) {
  for (const auto& s : real_.samples()) {
    require(s.domain == domain_, "ClientDataset: real sample from a foreign domain");
  }
  for (const auto& s : synthetic_.samples()) {
    require(s.domain == domain_, "ClientDataset: synthetic sample not tagged with the client domain");
  }
}

ClientDataset::ClientDataset(int client_id, int domain, Dataset real)
    : ClientDataset(client_id, domain, real,
                    Dataset::empty(real.classes(), real.domains(), real.dim())) {}

ClientDataset ClientDataset::with_synthetic(Dataset synthetic) const {
  return ClientDataset(client_id_, domain_, real_, std::move(synthetic));
}

}  // namespace fedssg
