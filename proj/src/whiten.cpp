#include "meltcast/whiten.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <string>

#include "meltcast/errors.hpp"

namespace meltcast::whiten {

namespace {

constexpr std::size_t kMinAr1Length = 10;

AR1Model fit_pairs(std::span<const double> r, const std::vector<std::size_t>& current) {
    const std::size_t m = current.size();
    if (m < 2) throw InsufficientDataError("AR(1) fit needs at least two lagged pairs");
    double mean_prev = 0.0, mean_cur = 0.0;
    for (std::size_t t : current) {
        mean_prev += r[t - 1];
        mean_cur += r[t];
    }
    mean_prev /= static_cast<double>(m);
    mean_cur /= static_cast<double>(m);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t t : current) {
        const double dx = r[t - 1] - mean_prev;
        sxx += dx * dx;
        sxy += dx * (r[t] - mean_cur);
    }
    double scale = 0.0;
    for (std::size_t t : current) scale += r[t - 1] * r[t - 1];
    if (!(sxx > 1e-24 * (scale + 1e-300))) {
        throw DegenerateError("AR(1) lagged regressor has zero variance");
    }
    AR1Model model;
    model.phi = sxy / sxx;
    model.intercept_c = mean_cur - model.phi * mean_prev;
    model.n_used = m;
    model.innovations.reserve(m);
    model.innovation_index = current;
    for (std::size_t t : current) {
        model.innovations.push_back(r[t] - model.intercept_c - model.phi * r[t - 1]);
    }
    return model;
}

void check_series(std::span<const double> r) {
    for (double v : r) {
        if (!std::isfinite(v)) throw DomainError("AR(1) input contains non-finite values");
    }
    if (r.size() < kMinAr1Length) {
        throw InsufficientDataError("AR(1) fit needs at least " + std::to_string(kMinAr1Length) +
                                    " residuals, got " + std::to_string(r.size()));
    }
}

}  // namespace

AR1Model fit_ar1(std::span<const double> residuals) {
    check_series(residuals);
    std::vector<std::size_t> current;
    current.reserve(residuals.size() - 1);
    for (std::size_t t = 1; t < residuals.size(); ++t) current.push_back(t);
    return fit_pairs(residuals, current);
}

AR1Model fit_ar1(std::span<const double> residuals, std::span<const Date> dates) {
    if (dates.size() != residuals.size()) throw ConfigError("AR(1) residuals and dates differ in length");
    check_series(residuals);
    std::vector<std::size_t> current;
    for (std::size_t t = 1; t < residuals.size(); ++t) {
        const long gap = days_between(dates[t - 1], dates[t]);
        if (gap <= 0) throw ConfigError("AR(1) dates must be strictly increasing");
        if (gap <= kMaxBridgedGapDays) current.push_back(t);
    }
    return fit_pairs(residuals, current);
}

std::vector<double> acf(std::span<const double> series, std::size_t max_lag) {
    const std::size_t n = series.size();
    if (max_lag >= n) throw ConfigError("acf: max_lag must be smaller than the series length");
    double mean = 0.0;
    for (double v : series) mean += v;
    mean /= static_cast<double>(n);
    double c0 = 0.0;
    for (double v : series) c0 += (v - mean) * (v - mean);
    double scale = 0.0;
    for (double v : series) scale += v * v;
    if (!(c0 > 1e-24 * (scale + 1e-300))) throw DegenerateError("autocorrelation of a constant series is undefined");
    std::vector<double> out(max_lag);
    for (std::size_t k = 1; k <= max_lag; ++k) {
        double ck = 0.0;
        for (std::size_t t = 0; t + k < n; ++t) ck += (series[t] - mean) * (series[t + k] - mean);
        out[k - 1] = ck / c0;
    }
    return out;
}

double chi_squared_sf(double x, double df) {
    if (!(df > 0.0)) throw DomainError("chi-squared degrees of freedom must be positive");
    if (x <= 0.0) return 1.0;
    return boost::math::gamma_q(df / 2.0, x / 2.0);
}

WhitenessReport ljung_box(std::span<const double> series, std::size_t lags, int fitted_params, double level) {
    const std::size_t n = series.size();
    if (lags == 0) throw ConfigError("Ljung-Box needs at least one lag");
    if (!(2 * lags < n)) {
        throw ConfigError("Ljung-Box lags (" + std::to_string(lags) + ") must be below half the series length (" +
                          std::to_string(n) + ")");
    }
    if (fitted_params < 0 || static_cast<std::size_t>(fitted_params) >= lags) {
        throw ConfigError("Ljung-Box fitted parameter count must be below the lag count");
    }
    WhitenessReport report;
    report.level = level;
    report.acf_values = acf(series, lags);
    const double nn = static_cast<double>(n);
    double sum = 0.0;
    for (std::size_t k = 1; k <= lags; ++k) {
        const double rho = report.acf_values[k - 1];
        sum += rho * rho / (nn - static_cast<double>(k));
    }
    report.ljung_box_stat = nn * (nn + 2.0) * sum;
    report.ljung_box_df = static_cast<int>(lags) - fitted_params;
    report.ljung_box_pvalue = chi_squared_sf(report.ljung_box_stat, report.ljung_box_df);
    report.passed = report.ljung_box_pvalue >= level;
    return report;
}

}  // namespace meltcast::whiten
