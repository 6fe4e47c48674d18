#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fedssg {

/// A labeled feature vector tagged with the device domain it came from.
struct Sample {
  std::vector<double> features;
  int label = 0;
  int domain = 0;

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct Histogram {
  std::vector<std::int64_t> class_counts;
  std::vector<std::int64_t> domain_counts;

  friend bool operator==(const Histogram&, const Histogram&) = default;
};

/// Slot reserved for samples that carry no device information (public data).
/// A dataset holding untyped samples is built with `domains + 1` slots.
inline int untyped_domain(int domains) { return domains; }

/// Immutable ordered collection of samples with cached histograms.
///
/// Construction validates that every sample has the same feature dimension
/// and in-range label/domain ids; the histograms are therefore always exact.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<Sample> samples, int classes, int domains, int dim);

  /// Empty dataset with the given shape.
  static Dataset empty(int classes, int domains, int dim);

  const std::vector<Sample>& samples() const { return samples_; }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }
  std::size_t size() const { return samples_.size(); }
  bool is_empty() const { return samples_.empty(); }

  int classes() const { return classes_; }
  int domains() const { return domains_; }
  int dim() const { return dim_; }

  const std::vector<std::int64_t>& class_counts() const { return class_counts_; }
  const std::vector<std::int64_t>& domain_counts() const { return domain_counts_; }

  /// New dataset holding the samples at `indices`, in that order.
  Dataset subset(std::span<const std::size_t> indices) const;
  /// Samples of `this` followed by those of `other`.
  Dataset concat(const Dataset& other) const;
  /// Samples whose domain tag equals `domain`.
  Dataset filter_domain(int domain) const;

  /// Per-class lists of sample indices.
  std::vector<std::vector<std::size_t>> indices_by_class() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::vector<Sample> samples_;
  int classes_ = 0;
  int domains_ = 0;
  int dim_ = 0;
  std::vector<std::int64_t> class_counts_;
  std::vector<std::int64_t> domain_counts_;
};

/// Exact class and domain multiplicities of a dataset.
Histogram histogram(const Dataset& dataset);

/// One federation participant: single-domain real data plus optional
/// generated samples carrying the same domain tag.
class ClientDataset {
 public:
  ClientDataset(int client_id, int domain, Dataset real, Dataset synthetic);
  ClientDataset(int client_id, int domain, Dataset real);

  int client_id() const { return client_id_; }
  int domain() const { return domain_; }
  const Dataset& real() const { return real_; }
  const Dataset& synthetic() const { return synthetic_; }

  /// Real samples followed by synthetic ones.
  Dataset augmented() const { return real_.concat(synthetic_); }
  ClientDataset with_synthetic(Dataset synthetic) const;

 private:
  int client_id_;
  int domain_;
  Dataset real_;
  Dataset synthetic_;
};

}  // namespace fedssg
