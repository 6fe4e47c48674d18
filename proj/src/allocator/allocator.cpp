#include "fedssg/allocator/allocator.hpp"

#include <algorithm>
#include <cmath>

#include "fedssg/core/error.hpp"
#include "fedssg/core/rounding.hpp"

namespace fedssg::alloc {

std::vector<double> imbalance_weights(std::span<const std::int64_t> counts, double epsilon) {
  require(epsilon > 0.0, "allocator: epsilon must be positive");
  require(!counts.empty(), "allocator: no classes");
  const std::int64_t top = *std::max_element(counts.begin(), counts.end());
  std::vector<double> w;
  w.reserve(counts.size());
  for (auto n : counts) {
    require(n >= 0, "allocator: negative class count");
    w.push_back(static_cast<double>(top - n) + epsilon);
  }
  return w;
}

AllocationPlan synthetic_budget(const AllocationInput& input) {
  require(input.domain_scale >= 0.0 && std::isfinite(input.domain_scale),
          "allocator: domain scale must be a nonnegative number");
  AllocationPlan plan;
  plan.weights = imbalance_weights(input.per_class_counts, input.epsilon);
  double total_w = 0.0;
  for (double w : plan.weights) total_w += w;
  plan.lambda = input.domain_scale / total_w;
  plan.real_valued_budget.reserve(plan.weights.size());
  for (double w : plan.weights) plan.real_valued_budget.push_back(input.domain_scale * w / total_w);
  const auto total = static_cast<std::int64_t>(std::llround(input.domain_scale));
  plan.per_class_synthetic = largest_remainder(plan.real_valued_budget, total);
  return plan;
}

std::vector<ScaleViolation> validate_domain_scales(std::span<const std::int64_t> domain_sizes,
                                                   std::span<const double> scales) {
  require(domain_sizes.size() == scales.size(), "allocator: one scale per domain required");
  std::vector<ScaleViolation> out;
  for (std::size_t i = 0; i < domain_sizes.size(); ++i)
    for (std::size_t j = 0; j < domain_sizes.size(); ++j)
      if (domain_sizes[i] > domain_sizes[j] && !(scales[i] < scales[j]))
        out.push_back({static_cast<int>(i), static_cast<int>(j)});
  return out;
}

nlohmann::json plan_to_json(int client_id, const AllocationInput& input, const AllocationPlan& plan) {
  return {{"client", client_id},
          {"domain", input.domain},
          {"counts", input.per_class_counts},
          {"epsilon", input.epsilon},
          {"scale", input.domain_scale},
          {"weights", plan.weights},
          {"lambda", plan.lambda},
          {"budget_real", plan.real_valued_budget},
          {"budget", plan.per_class_synthetic}};
}

}  // namespace fedssg::alloc
