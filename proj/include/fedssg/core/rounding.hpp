#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace fedssg {

/// Integerizes nonnegative real quotas to integers summing to `total`:
/// floors first, then one extra unit to each of the largest fractional
/// remainders, ties going to the lower index. `total` must lie between the
/// sum of floors and that sum plus the number of quotas.
std::vector<std::int64_t> largest_remainder(std::span<const double> quotas, std::int64_t total);

}  // namespace fedssg
