#include "meltcast/report.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "meltcast/errors.hpp"

namespace meltcast::report {

std::vector<ImportanceEntry> variable_importance(const gbm::TrainedBooster& booster) {
    std::vector<ImportanceEntry> out(booster.feature_names.size());
    for (std::size_t f = 0; f < out.size(); ++f) out[f].feature = booster.feature_names[f];
    const auto n_trees = std::min(static_cast<std::size_t>(std::max(booster.best_iter, 0)), booster.trees.size());
    for (std::size_t t = 0; t < n_trees; ++t) {
        for (const auto& node : booster.trees[t].nodes()) {
            if (!node.is_leaf()) out[static_cast<std::size_t>(node.feature)].gain += node.gain;
        }
    }
    double total = 0.0;
    for (const auto& e : out) total += e.gain;
    if (total > 0.0) {
        for (auto& e : out) e.percent = 100.0 * e.gain / total;
    }
    return out;
}

PartialDependenceCurve partial_dependence(const gbm::TrainedBooster& booster, const std::string& predictor,
                                          int grid_size) {
    if (grid_size < 2) throw ConfigError("partial dependence grid needs at least 2 points");
    const auto it = std::find(booster.feature_names.begin(), booster.feature_names.end(), predictor);
    if (it == booster.feature_names.end()) throw ConfigError("unknown predictor '" + predictor + "'");
    const auto f = static_cast<std::size_t>(it - booster.feature_names.begin());
    if (booster.feature_stats.size() != booster.feature_names.size()) {
        throw ConfigError("booster carries no training feature summaries");
    }

    PartialDependenceCurve curve;
    curve.predictor = predictor;
    const auto& st = booster.feature_stats[f];
    if (!(st.max > st.min)) {
        curve.grid.push_back(st.min);
    } else {
        const double step = (st.max - st.min) / static_cast<double>(grid_size - 1);
        for (int k = 0; k < grid_size; ++k) curve.grid.push_back(st.min + step * k);
        curve.grid.back() = st.max;
    }

    std::vector<double> x(booster.feature_names.size());
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = booster.feature_stats[j].mean;
    for (double g : curve.grid) {
        x[f] = g;
        curve.values.push_back(booster.predict_row(x, booster.best_iter));
    }
    return curve;
}

BinExceedance bin_exceedance(std::span<const double> forecasts, std::span<const double> truths, int n_bins,
                             double threshold) {
    if (forecasts.size() != truths.size()) throw ConfigError("forecasts and truths differ in length");
    if (n_bins < 2) throw ConfigError("bin analysis needs at least 2 bins");
    if (forecasts.empty()) throw EmptyInputError("no forecasts to bin");
    for (double v : forecasts) {
        if (!std::isfinite(v)) throw DomainError("forecasts must be finite");
    }

    BinExceedance out;
    out.threshold = threshold;
    const auto [lo, hi] = std::minmax_element(forecasts.begin(), forecasts.end());
    out.min = *lo;
    out.max = *hi;
    out.degenerate = !(out.max > out.min);
    const int n = out.degenerate ? 1 : n_bins;
    out.width = out.degenerate ? 0.0 : (out.max - out.min) / n;

    std::vector<std::size_t> count(static_cast<std::size_t>(n), 0), above(static_cast<std::size_t>(n), 0);
    std::vector<double> sum(static_cast<std::size_t>(n), 0.0);
    for (std::size_t i = 0; i < forecasts.size(); ++i) {
        std::size_t b = 0;
        if (!out.degenerate) {
            const double pos = std::floor((forecasts[i] - out.min) / out.width);
            b = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(n - 1)));
        }
        ++count[b];
        sum[b] += forecasts[i];
        if (truths[i] > threshold) ++above[b];
    }

    for (int k = 0; k < n; ++k) {
        const auto b = static_cast<std::size_t>(k);
        BinSummary s;
        s.index = k + 1;
        s.lower_edge = out.min + out.width * k;
        s.upper_edge = out.min + out.width * (k + 1);
        s.count = count[b];
        if (count[b] > 0) {
            s.mean_forecast = sum[b] / static_cast<double>(count[b]);
            s.pct_exceeding = 100.0 * static_cast<double>(above[b]) / static_cast<double>(count[b]);
            s.filled = *s.mean_forecast > threshold;
        }
        out.bins.push_back(s);
    }
    return out;
}

std::vector<double> loess_smooth(std::span<const double> x, std::span<const double> y, double span) {
    if (x.size() != y.size()) throw ConfigError("loess inputs differ in length");
    if (x.size() < 5) throw InsufficientDataError("loess needs at least 5 points");
    if (!(span > 0.0 && span <= 1.0)) throw ConfigError("loess span must lie in (0, 1]");
    const auto n = x.size();
    const auto q = std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(span * static_cast<double>(n))));

    std::vector<double> out(n);
    std::vector<std::size_t> order(n);
    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) dist[j] = std::fabs(x[j] - x[i]);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(q), order.end(),
                          [&](std::size_t a, std::size_t b) { return dist[a] != dist[b] ? dist[a] < dist[b] : a < b; });
        const double dmax = dist[order[q - 1]];

        double sw = 0.0, swx = 0.0, swy = 0.0;
        std::vector<double> w(q);
        for (std::size_t k = 0; k < q; ++k) {
            const auto j = order[k];
            double wk = 1.0;
            if (dmax > 0.0) {
                const double u = dist[j] / dmax;
                wk = std::pow(1.0 - u * u * u, 3);
            }
            w[k] = wk;
            sw += wk;
            swx += wk * x[j];
            swy += wk * y[j];
        }
        const double xbar = swx / sw;
        const double ybar = swy / sw;
        double sxx = 0.0, sxy = 0.0;
        std::size_t distinct = 0;
        double first_x = 0.0;
        for (std::size_t k = 0; k < q; ++k) {
            if (w[k] <= 0.0) continue;
            const auto j = order[k];
            if (distinct == 0) {
                first_x = x[j];
                distinct = 1;
            } else if (x[j] != first_x) {
                distinct = 2;
            }
            sxx += w[k] * (x[j] - xbar) * (x[j] - xbar);
            sxy += w[k] * (x[j] - xbar) * (y[j] - ybar);
        }
        out[i] = (distinct < 2 || !(sxx > 0.0)) ? ybar : ybar + sxy / sxx * (x[i] - xbar);
    }
    return out;
}

}  // namespace meltcast::report
