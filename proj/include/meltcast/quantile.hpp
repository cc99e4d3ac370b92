#pragma once

#include <cstddef>
#include <span>

namespace meltcast {

// One empirical quantile convention is used across the library: the inverse
// empirical CDF with lower interpolation. For a sample of size n the
// p-quantile is the k-th order statistic with k = ceil(p * n), clamped to
// [1, n]. Products p * n within 1e-9 of an integer are snapped to it so that
// 0.6 * 5 selects the 3rd order statistic despite binary rounding.

/// 1-based order-statistic index for level p in a sample of size n.
[[nodiscard]] std::size_t lower_quantile_rank(double p, std::size_t n);

/// p-quantile of `values` (any order). Throws DomainError when empty or
/// when p is outside [0, 1].
[[nodiscard]] double lower_quantile(std::span<const double> values, double p);

/// Same, but reorders `scratch` in place instead of copying.
[[nodiscard]] double lower_quantile_inplace(std::span<double> scratch, double p);

/// Slack used when comparing an accumulated weighted CDF against a level.
inline constexpr double kCdfSlack = 1e-12;

}  // namespace meltcast
