#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "meltcast/gbm.hpp"

namespace meltcast::report {

struct ImportanceEntry {
    std::string feature;
    double gain = 0.0;     // summed split gain over the first best_iter trees
    double percent = 0.0;  // share of the total, in percent
};

/// Relative influence from split gains. Percentages sum to 100 unless the
/// retained trees never split, in which case every entry is 0.
[[nodiscard]] std::vector<ImportanceEntry> variable_importance(const gbm::TrainedBooster& booster);

struct PartialDependenceCurve {
    std::string predictor;
    std::vector<double> grid;
    std::vector<double> values;
};

/// Model response over an even grid spanning the predictor's training range,
/// other predictors held at their training means. A predictor that was
/// constant in training yields a single grid point.
[[nodiscard]] PartialDependenceCurve partial_dependence(const gbm::TrainedBooster& booster,
                                                        const std::string& predictor, int grid_size = 50);

struct BinSummary {
    int index = 0;  // 1-based
    double lower_edge = 0.0;
    double upper_edge = 0.0;
    std::size_t count = 0;
    std::optional<double> mean_forecast;  // empty bins have none
    std::optional<double> pct_exceeding;
    bool filled = false;  // mean_forecast > threshold
};

struct BinExceedance {
    std::vector<BinSummary> bins;
    double min = 0.0;
    double max = 0.0;
    double width = 0.0;
    double threshold = 0.0;
    bool degenerate = false;  // all forecasts identical; one bin holds everything
};

/// Equal-width bins over [min, max] of the forecasts; a value on an inner
/// edge belongs to the upper bin and the maximum to the last bin.
[[nodiscard]] BinExceedance bin_exceedance(std::span<const double> forecasts, std::span<const double> truths,
                                           int n_bins = 20, double threshold = 0.0);

/// Local linear loess with tricube weights over the floor(span * n) nearest
/// neighbours, evaluated at each x. No robustness iterations.
[[nodiscard]] std::vector<double> loess_smooth(std::span<const double> x, std::span<const double> y,
                                               double span = 0.75);

}  // namespace meltcast::report
