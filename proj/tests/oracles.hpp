#pragma once

// Reference implementations used only by the tests. Each one is written
// from the definition, independently of the library code it checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "meltcast/qrf.hpp"

namespace oracle {

inline double pinball(double y, double y_hat, double tau) {
    const double u = y - y_hat;
    if (u > 0) return tau * u;
    if (u < 0) return (tau - 1.0) * u;
    return 0.0;
}

/// Smallest sample value v with #{x <= v} / n >= p.
inline double inverse_ecdf(std::vector<double> xs, double p) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    for (double v : xs) {
        const auto le = std::count_if(xs.begin(), xs.end(), [&](double x) { return x <= v; });
        if (static_cast<double>(le) / n >= p - 1e-12) return v;
    }
    return xs.back();
}

/// Leftmost minimizer of the mean pinball loss over an integer grid, with
/// tau = num/den so the objective is evaluated in exact integer arithmetic.
inline long long grid_minimizer(std::span<const long long> ys, long long num, long long den) {
    const auto [lo, hi] = std::minmax_element(ys.begin(), ys.end());
    long long best_c = *lo;
    long long best = -1;
    for (long long c = *lo; c <= *hi; ++c) {
        long long total = 0;
        for (long long y : ys) total += y >= c ? num * (y - c) : (den - num) * (c - y);
        if (best < 0 || total < best) {
            best = total;
            best_c = c;
        }
    }
    return best_c;
}

struct Ar1Fit {
    double c = 0.0;
    double phi = 0.0;
};

/// Textbook OLS of x_t on (1, x_{t-1}) from raw sums.
inline Ar1Fit ols_ar1(std::span<const double> x) {
    const std::size_t m = x.size() - 1;
    long double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t t = 1; t < x.size(); ++t) {
        sx += x[t - 1];
        sy += x[t];
        sxx += static_cast<long double>(x[t - 1]) * x[t - 1];
        sxy += static_cast<long double>(x[t - 1]) * x[t];
    }
    const long double det = m * sxx - sx * sx;
    const long double phi = (m * sxy - sx * sy) / det;
    const long double c = (sy - phi * sx) / m;
    return {static_cast<double>(c), static_cast<double>(phi)};
}

/// Exact QRF weighted quantile. Weights are kept as integers over the
/// common denominator T * lcm(leaf sizes), so no rounding enters the CDF.
/// Returns false when p lies within 1e-9 of a CDF step, where a floating
/// point comparison is not meaningful.
inline bool qrf_quantile(const meltcast::qrf::QRFModel& m, std::span<const double> x, double p, double& out) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> leaves;  // [begin, end)
    for (const auto& tree : m.trees) {
        int k = 0;
        while (tree.nodes[static_cast<std::size_t>(k)].feature >= 0) {
            const auto& n = tree.nodes[static_cast<std::size_t>(k)];
            k = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
        }
        const auto& leaf = tree.nodes[static_cast<std::size_t>(k)];
        leaves.emplace_back(leaf.begin, leaf.end);
    }
    std::int64_t common = 1;
    for (const auto& [b, e] : leaves) common = std::lcm(common, static_cast<std::int64_t>(e - b));
    const std::int64_t denom = common * static_cast<std::int64_t>(m.trees.size());

    std::map<double, std::int64_t> mass;  // distinct score -> numerator
    for (std::size_t t = 0; t < m.trees.size(); ++t) {
        const auto [b, e] = leaves[t];
        const std::int64_t share = common / static_cast<std::int64_t>(e - b);
        for (auto k = b; k < e; ++k) mass[m.training_scores[m.trees[t].leaf_samples[k]]] += share;
    }
    std::int64_t cum = 0;
    bool found = false;
    for (const auto& [v, w] : mass) {
        cum += w;
        const long double frac = static_cast<long double>(cum) / static_cast<long double>(denom);
        if (std::fabs(static_cast<double>(frac - p)) < 1e-9) return false;
        if (!found && frac >= p) {
            out = v;
            found = true;
        }
    }
    return found;
}

/// Autocorrelation at lags 1..L with the 1/n denominator.
inline std::vector<double> acf(std::span<const double> x, std::size_t lags) {
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    long double c0 = 0;
    for (double v : x) c0 += (v - mean) * (v - mean);
    std::vector<double> r;
    for (std::size_t k = 1; k <= lags; ++k) {
        long double ck = 0;
        for (std::size_t t = k; t < x.size(); ++t) ck += (x[t] - mean) * (x[t - k] - mean);
        r.push_back(static_cast<double>(ck / c0));
    }
    return r;
}

}  // namespace oracle
