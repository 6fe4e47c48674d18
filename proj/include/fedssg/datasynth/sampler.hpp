#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fedssg/core/dataset.hpp"
#include "fedssg/core/rng.hpp"

namespace fedssg::datasynth {

/// p_i = (1/n_i) / sum_j (1/n_j) over classes with n_i > 0; empty classes
/// get probability 0. Throws ConfigError when every count is zero.
std::vector<double> balanced_class_probabilities(std::span<const std::int64_t> class_counts);

/// Draws batches whose slots are i.i.d.: a class from the balanced
/// probabilities, then a uniformly chosen sample of that class.
class ClassBalancedSampler {
 public:
  ClassBalancedSampler(const Dataset& data, std::size_t batch_size, RngStream rng);
  ClassBalancedSampler(std::vector<std::vector<std::size_t>> indices_by_class, std::size_t batch_size, RngStream rng);
  /// Counts-only form: indices refer to a dataset laid out in contiguous
  /// class blocks (class 0 first).
  ClassBalancedSampler(std::span<const std::int64_t> class_counts, std::size_t batch_size, RngStream rng);

  std::vector<std::size_t> next_batch();
  /// Class of the next draw without picking a sample (used by tests).
  int draw_class();

  const std::vector<double>& probabilities() const { return probs_; }

 private:
  std::vector<std::vector<std::size_t>> by_class_;
  std::vector<double> probs_;
  std::size_t batch_size_;
  RngStream rng_;
};

}  // namespace fedssg::datasynth
