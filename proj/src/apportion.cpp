#include "qaug/apportion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qaug/errors.hpp"

namespace qaug {
namespace {

// Hands out `left` units by descending key, ties broken by lower index.
void distribute(std::vector<std::int64_t>& counts, std::int64_t left, const std::vector<std::int64_t>& keys) {
  std::vector<std::size_t> order(counts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return keys[a] > keys[b]; });
  for (std::size_t k = 0; left > 0; k = (k + 1) % order.size(), --left) ++counts[order[k]];
}

}  // namespace

std::vector<std::int64_t> largest_remainder(std::int64_t total, const std::vector<double>& weights) {
  if (total < 0) throw ConfigError("cannot apportion a negative total");
  if (weights.empty()) throw ShapeError("no classes to apportion over");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw NumericError("apportionment weights must be finite and >= 0");
    sum += w;
  }
  if (sum <= 0.0) {
    return largest_remainder(total, std::vector<std::int64_t>(weights.size(), 1));
  }
  std::vector<std::int64_t> counts(weights.size());
  std::vector<std::int64_t> keys(weights.size());
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double quota = static_cast<double>(total) * weights[i] / sum;
    // Snap quotas within 1e-9 of an integer so that exact shares are not lost to rounding.
    const double snapped = std::abs(quota - std::round(quota)) < 1e-9 ? std::round(quota) : quota;
    const double fl = std::floor(snapped);
    counts[i] = static_cast<std::int64_t>(fl);
    keys[i] = std::llround((snapped - fl) * 1e9);
    assigned += counts[i];
  }
  distribute(counts, total - assigned, keys);
  return counts;
}

std::vector<std::int64_t> largest_remainder(std::int64_t total, const std::vector<std::int64_t>& weights) {
  if (total < 0) throw ConfigError("cannot apportion a negative total");
  if (weights.empty()) throw ShapeError("no classes to apportion over");
  std::int64_t sum = 0;
  for (auto w : weights) {
    if (w < 0) throw NumericError("apportionment weights must be >= 0");
    sum += w;
  }
  if (sum == 0) return largest_remainder(total, std::vector<std::int64_t>(weights.size(), 1));
  std::vector<std::int64_t> counts(weights.size()), keys(weights.size());
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    counts[i] = total * weights[i] / sum;
    keys[i] = total * weights[i] % sum;
    assigned += counts[i];
  }
  distribute(counts, total - assigned, keys);
  return counts;
}

}  // namespace qaug
