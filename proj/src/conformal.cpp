#include "meltcast/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "meltcast/errors.hpp"
#include "meltcast/model_io.hpp"
#include "meltcast/quantile.hpp"
#include "meltcast/text.hpp"

namespace meltcast::conformal {

Regime regime_of(double forecast) {
    if (std::isnan(forecast)) throw DomainError("cannot assign a regime to a NaN forecast");
    return forecast > 0.0 ? Regime::kWarm : Regime::kCool;
}

const char* to_string(Regime r) noexcept { return r == Regime::kWarm ? "warm" : "cool"; }

const char* to_string(IntervalMode m) noexcept { return m == IntervalMode::kAdaptive ? "adaptive" : "marginal"; }

IntervalMode parse_interval_mode(const std::string& text) {
    const auto t = text::lowercase(text::trim(text));
    if (t == "adaptive") return IntervalMode::kAdaptive;
    if (t == "marginal") return IntervalMode::kMarginal;
    throw ConfigError("unknown interval mode '" + text + "' (expected adaptive or marginal)");
}

namespace {

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 0.5)) throw ConfigError("alpha must lie in (0, 0.5)");
}

void check_schema(const std::vector<std::string>& expected, const std::vector<std::string>& got, const char* what) {
    if (expected != got) throw ConfigError(std::string(what) + " feature schema does not match the model");
}

std::vector<double> covariates_for(double forecast, std::span<const double> features) {
    std::vector<double> x;
    x.reserve(features.size() + 1);
    x.push_back(forecast);
    x.insert(x.end(), features.begin(), features.end());
    return x;
}

double centered_sumsq(std::span<const double> v) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return s;
}

}  // namespace

double marginal_halfwidth(std::span<const double> scores, double alpha) {
    check_alpha(alpha);
    const auto n = scores.size();
    const double target = static_cast<double>(n + 1) * (1.0 - alpha);
    double k = std::ceil(target);
    if (std::fabs(target - std::round(target)) < 1e-9) k = std::round(target);
    if (n == 0 || k > static_cast<double>(n)) return std::numeric_limits<double>::infinity();
    std::vector<double> abs_scores(scores.size());
    std::transform(scores.begin(), scores.end(), abs_scores.begin(), [](double s) { return std::fabs(s); });
    const auto rank = static_cast<std::size_t>(std::max(1.0, k));
    std::nth_element(abs_scores.begin(), abs_scores.begin() + static_cast<std::ptrdiff_t>(rank - 1), abs_scores.end());
    return abs_scores[rank - 1];
}

std::vector<std::string> covariate_names(const std::vector<std::string>& feature_names) {
    std::vector<std::string> names;
    names.reserve(feature_names.size() + 1);
    names.emplace_back("forecast");
    names.insert(names.end(), feature_names.begin(), feature_names.end());
    return names;
}

ConformalCalibrator calibrate(const gbm::TrainedBooster& booster, const Dataset& calibration, double alpha,
                              const qrf::QRFParams& qrf_params, const CalibrationOptions& options) {
    check_alpha(alpha);
    calibration.validate();
    check_schema(booster.feature_names, calibration.feature_names, "calibration");
    if (options.ljung_box_lags < 2) throw ConfigError("ljung_box_lags must be >= 2");

    ConformalCalibrator cal;
    cal.booster_identity = model_io::booster_identity(booster);
    cal.feature_names = booster.feature_names;
    cal.alpha = alpha;

    const auto fitted = gbm::predict(booster, calibration.features);
    std::vector<double> residuals(fitted.size());
    for (std::size_t i = 0; i < fitted.size(); ++i) residuals[i] = calibration.response[i] - fitted[i];

    cal.ar1 = whiten::fit_ar1(residuals, calibration.dates);
    const auto& innov = cal.ar1.innovations;
    if (options.recenter_scores) {
        cal.score_offset = std::accumulate(residuals.begin(), residuals.end(), 0.0) / static_cast<double>(residuals.size());
    }
    if (options.rescale_scores) {
        const double sd_e = std::sqrt(centered_sumsq(innov) / static_cast<double>(innov.size()));
        const double sd_r = std::sqrt(centered_sumsq(residuals) / static_cast<double>(residuals.size()));
        if (sd_e > 0.0) cal.score_scale = sd_r / sd_e;
    }

    const std::size_t lags = std::min(options.ljung_box_lags, (innov.size() - 1) / 2);
    if (lags < 2) throw InsufficientDataError("too few calibration innovations for a whiteness test");
    cal.whiteness = whiten::ljung_box(innov, lags, 1, options.whiteness_level);

    // Scores and QRF covariates per regime, by the sign of the fitted value.
    const auto n_cov = booster.feature_names.size() + 1;
    std::array<Matrix, 2> cov{Matrix(0, n_cov), Matrix(0, n_cov)};
    std::array<std::vector<double>, 2> scores;
    Matrix pooled_cov(0, n_cov);
    std::vector<double> pooled_scores;
    for (std::size_t k = 0; k < innov.size(); ++k) {
        const auto row = cal.ar1.innovation_index[k];
        const auto x = covariates_for(fitted[row], calibration.features.row(row));
        const double s = cal.score_offset + cal.score_scale * innov[k];
        const auto r = static_cast<std::size_t>(regime_of(fitted[row]));
        cov[r].append_row(x);
        scores[r].push_back(s);
        pooled_cov.append_row(x);
        pooled_scores.push_back(s);
    }

    cal.pooled_fallback = scores[0].size() < options.min_regime_innovations ||
                          scores[1].size() < options.min_regime_innovations;
    const auto names = covariate_names(booster.feature_names);
    if (cal.pooled_fallback) {
        cal.forests[0] = qrf::fit_qrf(pooled_cov, pooled_scores, names, qrf_params);
        const double h = marginal_halfwidth(pooled_scores, alpha);
        for (std::size_t r = 0; r < 2; ++r) cal.regimes[r] = {scores[r].size(), h};
    } else {
        for (std::size_t r = 0; r < 2; ++r) {
            auto params = qrf_params;
            params.seed = qrf_params.seed + r;
            cal.forests[r] = qrf::fit_qrf(cov[r], scores[r], names, params);
            cal.regimes[r] = {scores[r].size(), marginal_halfwidth(scores[r], alpha)};
        }
    }
    return cal;
}

std::vector<PredictionRegion> forecast_with_region(const ConformalCalibrator& calibrator,
                                                   const gbm::TrainedBooster& booster, const Dataset& rows,
                                                   IntervalMode mode) {
    return forecast_with_region(calibrator, booster, rows, mode, calibrator.alpha);
}

std::vector<PredictionRegion> forecast_with_region(const ConformalCalibrator& calibrator,
                                                   const gbm::TrainedBooster& booster, const Dataset& rows,
                                                   IntervalMode mode, double alpha) {
    check_alpha(alpha);
    rows.validate();
    check_schema(calibrator.feature_names, booster.feature_names, "booster");
    check_schema(calibrator.feature_names, rows.feature_names, "forecast");
    if (calibrator.booster_identity != model_io::booster_identity(booster)) {
        throw ConfigError("calibrator was built for a different booster");
    }

    std::array<double, 2> halfwidth{};
    if (mode == IntervalMode::kMarginal) {
        for (std::size_t r = 0; r < 2; ++r) {
            halfwidth[r] = marginal_halfwidth(calibrator.forest_for(static_cast<Regime>(r)).training_scores, alpha);
        }
    }

    const auto fitted = gbm::predict(booster, rows.features);
    const double levels[2] = {alpha / 2.0, 1.0 - alpha / 2.0};
    std::vector<PredictionRegion> out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto& reg = out[i];
        reg.date = rows.dates[i];
        reg.forecast = fitted[i];
        reg.regime = regime_of(fitted[i]);
        if (mode == IntervalMode::kMarginal) {
            reg.q_lo = -halfwidth[static_cast<std::size_t>(reg.regime)];
            reg.q_hi = halfwidth[static_cast<std::size_t>(reg.regime)];
        } else {
            const auto x = covariates_for(fitted[i], rows.features.row(i));
            const auto q = qrf::predict_quantiles(calibrator.forest_for(reg.regime), x, levels);
            reg.q_lo = q[0];
            reg.q_hi = q[1];
        }
        if (reg.q_lo > reg.q_hi) {
            std::swap(reg.q_lo, reg.q_hi);
            reg.swapped = true;
        }
        reg.lower = reg.forecast + reg.q_lo;
        reg.upper = reg.forecast + reg.q_hi;
    }
    return out;
}

bool covers(const PredictionRegion& region, double truth) noexcept {
    return region.lower <= truth && truth <= region.upper;
}

namespace {

struct Accumulator {
    std::size_t count = 0;
    std::size_t covered = 0;
    double sum_hw = 0.0;
    double min_hw = std::numeric_limits<double>::infinity();
    double max_hw = -std::numeric_limits<double>::infinity();

    void add(const PredictionRegion& reg, bool hit) {
        const double hw = (reg.upper - reg.lower) / 2.0;
        ++count;
        covered += hit ? 1 : 0;
        sum_hw += hw;
        min_hw = std::min(min_hw, hw);
        max_hw = std::max(max_hw, hw);
    }

    [[nodiscard]] CoverageStats finish() const {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        CoverageStats s;
        s.count = count;
        s.covered = covered;
        if (count == 0) {
            s.coverage = s.mean_halfwidth = s.min_halfwidth = s.max_halfwidth = nan;
            return s;
        }
        s.coverage = static_cast<double>(covered) / static_cast<double>(count);
        s.mean_halfwidth = sum_hw / static_cast<double>(count);
        s.min_halfwidth = min_hw;
        s.max_halfwidth = max_hw;
        return s;
    }
};

}  // namespace

CoverageSummary empirical_coverage(std::span<const PredictionRegion> regions, std::span<const double> truths) {
    if (regions.size() != truths.size()) throw ConfigError("regions and truths differ in length");
    Accumulator all;
    std::array<Accumulator, 2> per;
    for (std::size_t i = 0; i < regions.size(); ++i) {
        const bool hit = covers(regions[i], truths[i]);
        all.add(regions[i], hit);
        per[static_cast<std::size_t>(regions[i].regime)].add(regions[i], hit);
    }
    CoverageSummary out;
    out.overall = all.finish();
    for (std::size_t r = 0; r < 2; ++r) out.by_regime[r] = per[r].finish();
    return out;
}

std::optional<MeltingStatement> melting_confidence(const PredictionRegion& region, double alpha) {
    if (!(region.lower > 0.0)) return std::nullopt;
    MeltingStatement s;
    s.probability = 1.0 - alpha / 2.0;
    s.text = "future temperature > 0 degC with probability >= " + text::format_double(s.probability);
    return s;
}

}  // namespace meltcast::conformal
