#include "fedssg/core/rounding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedssg/core/error.hpp"

namespace fedssg {

std::vector<std::int64_t> largest_remainder(std::span<const double> quotas, std::int64_t total) {
  std::vector<std::int64_t> out(quotas.size(), 0);
  std::vector<double> remainder(quotas.size(), 0.0);
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < quotas.size(); ++i) {
    require(quotas[i] >= 0.0 && std::isfinite(quotas[i]), "largest_remainder: quotas must be finite and >= 0");
    const double fl = std::floor(quotas[i]);
    out[i] = static_cast<std::int64_t>(fl);
    remainder[i] = quotas[i] - fl;
    assigned += out[i];
  }
  const std::int64_t extra = total - assigned;
  require(extra >= 0 && extra <= static_cast<std::int64_t>(quotas.size()),
          "largest_remainder: total incompatible with quotas");
  std::vector<std::size_t> order(quotas.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::int64_t k = 0; k < extra; ++k) ++out[order[static_cast<std::size_t>(k)]];
  return out;
}

}  // namespace fedssg
