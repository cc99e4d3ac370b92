#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "meltcast/date.hpp"

namespace meltcast::whiten {

/// r_t = intercept_c + phi * r_{t-1} + e_t, fitted by conditional least squares.
struct AR1Model {
    double intercept_c = 0.0;
    double phi = 0.0;
    std::vector<double> innovations;
    /// Position in the input series of the r_t each innovation belongs to.
    std::vector<std::size_t> innovation_index;
    std::size_t n_used = 0;  // number of (r_{t-1}, r_t) pairs

    [[nodiscard]] bool stationary() const noexcept { return phi > -1.0 && phi < 1.0; }
};

/// Largest calendar gap (in days) still bridged by the AR(1) chain.
inline constexpr long kMaxBridgedGapDays = 3;

/// Fits on consecutive pairs. Throws InsufficientDataError below 10 points
/// and DegenerateError when the lagged regressor has zero variance.
[[nodiscard]] AR1Model fit_ar1(std::span<const double> residuals);

/// Date-aware variant: r_{t-1} is the previous available residual, but a
/// gap of more than kMaxBridgedGapDays breaks the chain and the first point
/// after it yields no innovation.
[[nodiscard]] AR1Model fit_ar1(std::span<const double> residuals, std::span<const Date> dates);

/// Sample autocorrelations at lags 1..max_lag with the biased (1/n)
/// denominator. DegenerateError for a constant series.
[[nodiscard]] std::vector<double> acf(std::span<const double> series, std::size_t max_lag);

struct WhitenessReport {
    std::vector<double> acf_values;  // lags 1..L
    double ljung_box_stat = 0.0;
    int ljung_box_df = 0;
    double ljung_box_pvalue = 1.0;
    double level = 0.05;
    bool passed = true;
};

/// Ljung-Box portmanteau test. `fitted_params` is subtracted from the lag
/// count for the chi-squared degrees of freedom (1 when testing AR(1)
/// innovations). Requires lags < n / 2.
[[nodiscard]] WhitenessReport ljung_box(std::span<const double> series, std::size_t lags = 20,
                                        int fitted_params = 0, double level = 0.05);

/// Upper tail of the chi-squared distribution.
[[nodiscard]] double chi_squared_sf(double x, double df);

}  // namespace meltcast::whiten
