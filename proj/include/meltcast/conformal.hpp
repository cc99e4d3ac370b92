#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "meltcast/dataset.hpp"
#include "meltcast/gbm.hpp"
#include "meltcast/qrf.hpp"
#include "meltcast/whiten.hpp"

namespace meltcast::conformal {

enum class Regime { kWarm = 0, kCool = 1 };

/// Warm iff the model output is strictly above 0 degC; -0.0 is Cool.
/// DomainError for NaN.
[[nodiscard]] Regime regime_of(double forecast);
[[nodiscard]] const char* to_string(Regime r) noexcept;

enum class IntervalMode {
    kAdaptive,  // per-regime QRF score quantiles
    kMarginal,  // rank-corrected split-conformal quantile of |score|
};
[[nodiscard]] const char* to_string(IntervalMode m) noexcept;
[[nodiscard]] IntervalMode parse_interval_mode(const std::string& text);

struct CalibrationOptions {
    std::size_t ljung_box_lags = 20;
    double whiteness_level = 0.05;
    std::size_t min_regime_innovations = 15;
    /// Shift innovations by the mean calibration residual so the scores
    /// keep the residual level (innovations themselves are mean zero).
    bool recenter_scores = true;
    /// Scale innovations to the residual standard deviation.
    bool rescale_scores = false;
};

struct RegimeCalibration {
    std::size_t score_count = 0;
    /// Rank-corrected quantile of |score| for the marginal mode; +inf when
    /// the regime has too few scores for the requested alpha.
    double marginal_halfwidth = 0.0;
};

struct ConformalCalibrator {
    std::string booster_identity;
    std::vector<std::string> feature_names;
    double alpha = 0.20;
    whiten::AR1Model ar1;
    whiten::WhitenessReport whiteness;
    // score = score_offset + score_scale * innovation
    double score_offset = 0.0;
    double score_scale = 1.0;
    bool pooled_fallback = false;
    /// Index by Regime. Under the pooled fallback both slots share one forest.
    std::array<RegimeCalibration, 2> regimes{};
    std::array<qrf::QRFModel, 2> forests{};

    [[nodiscard]] std::size_t score_count() const noexcept { return ar1.innovations.size(); }

    [[nodiscard]] const qrf::QRFModel& forest_for(Regime r) const {
        return forests[pooled_fallback ? 0 : static_cast<std::size_t>(r)];
    }
};

/// Rank-corrected split-conformal half-width: the ceil((n+1)(1-alpha))-th
/// smallest |score|, or +inf when that rank exceeds n.
[[nodiscard]] double marginal_halfwidth(std::span<const double> scores, double alpha);

/// QRF covariate names: the forecast followed by the model features.
[[nodiscard]] std::vector<std::string> covariate_names(const std::vector<std::string>& feature_names);

/// Residuals on the calibration set, one AR(1) over the full residual
/// sequence, innovations split by fitted-value sign, one QRF per regime.
/// A regime with fewer than min_regime_innovations scores switches both
/// regimes to a single pooled forest.
[[nodiscard]] ConformalCalibrator calibrate(const gbm::TrainedBooster& booster, const Dataset& calibration, double alpha,
                                            const qrf::QRFParams& qrf_params,
                                            const CalibrationOptions& options = {});

struct PredictionRegion {
    Date date;
    double forecast = 0.0;
    Regime regime = Regime::kCool;
    double lower = 0.0;
    double upper = 0.0;
    double q_lo = 0.0;
    double q_hi = 0.0;
    bool swapped = false;  // score quantiles came back inverted
};

/// Regions for `rows`. ConfigError if the calibrator was built for another
/// booster or feature schema.
[[nodiscard]] std::vector<PredictionRegion> forecast_with_region(const ConformalCalibrator& calibrator,
                                                                 const gbm::TrainedBooster& booster,
                                                                 const Dataset& rows,
                                                                 IntervalMode mode = IntervalMode::kAdaptive);

/// Same as forecast_with_region but at a different miscoverage level.
[[nodiscard]] std::vector<PredictionRegion> forecast_with_region(const ConformalCalibrator& calibrator,
                                                                 const gbm::TrainedBooster& booster,
                                                                 const Dataset& rows, IntervalMode mode,
                                                                 double alpha);

struct CoverageStats {
    std::size_t count = 0;
    std::size_t covered = 0;
    double coverage = 0.0;  // NaN when count == 0
    double mean_halfwidth = 0.0;
    double min_halfwidth = 0.0;
    double max_halfwidth = 0.0;
};

struct CoverageSummary {
    CoverageStats overall;
    std::array<CoverageStats, 2> by_regime{};  // index by Regime
};

[[nodiscard]] bool covers(const PredictionRegion& region, double truth) noexcept;
[[nodiscard]] CoverageSummary empirical_coverage(std::span<const PredictionRegion> regions,
                                                 std::span<const double> truths);

struct MeltingStatement {
    double probability = 0.0;
    std::string text;
};

/// When the whole region lies above 0 degC the one-sided bound holds with
/// probability at least 1 - alpha/2.
[[nodiscard]] std::optional<MeltingStatement> melting_confidence(const PredictionRegion& region, double alpha);

}  // namespace meltcast::conformal
