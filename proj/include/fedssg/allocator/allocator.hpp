#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

namespace fedssg::alloc {

/// Everything a client discloses to plan its synthetic data: the per-class
/// counts of its local data, nothing sample-level.
struct AllocationInput {
  std::vector<std::int64_t> per_class_counts;
  int domain = 0;
  double epsilon = 1.0;
  double domain_scale = 0.0;
};

struct AllocationPlan {
  std::vector<std::int64_t> per_class_synthetic;
  std::vector<double> real_valued_budget;
  std::vector<double> weights;
  double lambda = 0.0;  // S / sum of weights
};

/// w_c = max_c' n_c' - n_c + epsilon.
std::vector<double> imbalance_weights(std::span<const std::int64_t> counts, double epsilon);

/// budget_c = S w_c / sum w, integerized by floor plus largest remainder
/// (ties to the lower class) so the integers sum to round(S).
AllocationPlan synthetic_budget(const AllocationInput& input);

struct ScaleViolation {
  int larger_domain = 0;   // the domain with more data
  int smaller_domain = 0;
  friend bool operator==(const ScaleViolation&, const ScaleViolation&) = default;
};

/// Every pair where domain i holds more data than domain j but does not get
/// a strictly smaller scale. Empty means the scales are valid.
std::vector<ScaleViolation> validate_domain_scales(std::span<const std::int64_t> domain_sizes,
                                                   std::span<const double> scales);

nlohmann::json plan_to_json(int client_id, const AllocationInput& input, const AllocationPlan& plan);

}  // namespace fedssg::alloc
