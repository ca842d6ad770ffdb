#pragma once

#include <cstdint>
#include <vector>

namespace qaug {

/// Largest-remainder apportionment of `total` units by non-negative weights.
/// Shares are floored, leftover units go to the largest fractional parts;
/// equal fractional parts (to 1e-9) go to the lower index first.
/// The result always sums to `total`. Zero total weight yields an even split.
std::vector<std::int64_t> largest_remainder(std::int64_t total, const std::vector<double>& weights);

/// Exact variant for integer weights (no rounding in the quotas).
std::vector<std::int64_t> largest_remainder(std::int64_t total, const std::vector<std::int64_t>& weights);

}  // namespace qaug
