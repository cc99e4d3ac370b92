#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "fixtures.hpp"
#include "meltcast/errors.hpp"
#include "meltcast/report.hpp"

using namespace meltcast;
using namespace meltcast::report;

namespace {

gbm::BoostParams params(int iterations = 150) {
    gbm::BoostParams p;
    p.shrinkage = 0.1;
    p.interaction_depth = 3;
    p.min_obs_in_node = 5;
    p.max_iterations = iterations;
    p.eval_stride = 10;
    return p;
}

/// y = f(x0) + small noise, with x1 and x2 pure noise.
Dataset one_signal(std::size_t n, std::uint64_t seed, double (*f)(double), int year) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::normal_distribution<double> z(0.0, 0.05);
    Dataset ds;
    ds.feature_names = fixture::names(3);
    ds.features = Matrix(0, 3);
    for (std::size_t i = 0; i < n; ++i) {
        const double row[3] = {u(rng), u(rng), u(rng)};
        ds.features.append_row(row);
        ds.response.push_back(f(row[0]) + z(rng));
        ds.dates.push_back(first_of_year(year).plus_days(static_cast<int>(i)));
    }
    return ds;
}

double square(double v) { return v * v; }
double linear(double v) { return 3.0 * v; }

Dataset permute_columns(const Dataset& ds, const std::vector<std::size_t>& perm) {
    Dataset out = ds;
    out.features = Matrix(0, perm.size());
    out.feature_names.clear();
    for (std::size_t k : perm) out.feature_names.push_back(ds.feature_names[k]);
    std::vector<double> row(perm.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (std::size_t k = 0; k < perm.size(); ++k) row[k] = ds.features(i, perm[k]);
        out.features.append_row(row);
    }
    return out;
}

}  // namespace

TEST_SUITE("report") {
    TEST_CASE("importance is the summed split gain, normalised to 100") {
        const auto model = gbm::train(fixture::linear(300, 1, 2021), fixture::linear(150, 2, 2022), {0.6}, params());
        const auto imp = variable_importance(model);
        REQUIRE(imp.size() == 3);
        std::vector<double> gain(3, 0.0);
        for (std::size_t t = 0; t < static_cast<std::size_t>(model.best_iter); ++t) {
            for (const auto& n : model.trees[t].nodes()) {
                if (!n.is_leaf()) gain[static_cast<std::size_t>(n.feature)] += n.gain;
            }
        }
        double pct = 0;
        for (std::size_t f = 0; f < 3; ++f) {
            CHECK(imp[f].feature == model.feature_names[f]);
            CHECK(imp[f].gain == doctest::Approx(gain[f]).epsilon(1e-12));
            pct += imp[f].percent;
        }
        CHECK(pct == doctest::Approx(100.0).epsilon(1e-12));
        CHECK(imp[0].percent > imp[1].percent);
        CHECK(imp[1].percent > imp[2].percent);
    }

    TEST_CASE("a single informative predictor takes nearly all importance") {
        const auto model = gbm::train(one_signal(400, 3, linear, 2021), one_signal(200, 4, linear, 2022), {0.6}, params());
        const auto imp = variable_importance(model);
        CHECK(imp[0].percent > 85.0);
        CHECK(imp[1].percent < 10.0);
        CHECK(imp[2].percent < 10.0);
    }

    // Gradients take two values, so equal-gain splits on different columns
    // are common and tie-breaking by column order can shift the fit slightly.
    TEST_CASE("property: importance follows a column permutation") {
        const auto train_set = fixture::linear(250, 5, 2021);
        const auto cal = fixture::linear(120, 6, 2022);
        const std::vector<std::size_t> perm = {2, 0, 1};
        const auto a = variable_importance(gbm::train(train_set, cal, {0.6}, params(60)));
        const auto b = variable_importance(
            gbm::train(permute_columns(train_set, perm), permute_columns(cal, perm), {0.6}, params(60)));
        for (std::size_t k = 0; k < 3; ++k) {
            CHECK(b[k].feature == a[perm[k]].feature);
            CHECK(std::fabs(b[k].percent - a[perm[k]].percent) < 5.0);
        }
        CHECK(b[1].percent > b[2].percent);
        CHECK(b[2].percent > b[0].percent);
    }

    TEST_CASE("no splits means zero importance everywhere") {
        auto train_set = fixture::linear(60, 1, 2021);
        std::fill(train_set.response.begin(), train_set.response.end(), 1.0);
        const auto model = gbm::train(train_set, train_set, {0.6}, params(20));
        for (const auto& e : variable_importance(model)) {
            CHECK(e.gain == 0.0);
            CHECK(e.percent == 0.0);
        }
    }

    TEST_CASE("partial dependence holds the other predictors at their means") {
        const auto model = gbm::train(fixture::linear(200, 7, 2021), fixture::linear(100, 8, 2022), {0.6}, params());
        const auto pd = partial_dependence(model, "x1", 11);
        REQUIRE(pd.grid.size() == 11);
        CHECK(pd.grid.front() == model.feature_stats[1].min);
        CHECK(pd.grid.back() == model.feature_stats[1].max);
        CHECK(std::is_sorted(pd.grid.begin(), pd.grid.end()));
        for (std::size_t k = 0; k < pd.grid.size(); ++k) {
            const double x[3] = {model.feature_stats[0].mean, pd.grid[k], model.feature_stats[2].mean};
            CHECK(pd.values[k] == model.predict_row(x, model.best_iter));
        }
        CHECK(pd.values.front() > pd.values.back());  // y falls with x1
    }

    TEST_CASE("partial dependence shapes") {
        const auto u = gbm::train(one_signal(500, 9, square, 2021), one_signal(250, 10, square, 2022), {0.5}, params(300));
        const auto pd = partial_dependence(u, "x0", 21);
        const auto mid = pd.values[10];
        CHECK(pd.values.front() > mid + 2.0);
        CHECK(pd.values.back() > mid + 2.0);
        const auto noise = partial_dependence(u, "x2", 21);
        const auto [lo, hi] = std::minmax_element(noise.values.begin(), noise.values.end());
        CHECK(*hi - *lo < 0.5);
    }

    TEST_CASE("a predictor constant in training yields one point") {
        auto train_set = fixture::linear(80, 1, 2021);
        for (std::size_t i = 0; i < train_set.size(); ++i) train_set.features(i, 2) = 4.0;
        const auto model = gbm::train(train_set, fixture::linear(40, 2, 2022), {0.6}, params(20));
        const auto pd = partial_dependence(model, "x2", 50);
        CHECK(pd.grid == std::vector<double>{4.0});
        CHECK(pd.values.size() == 1);
        CHECK_THROWS_AS((void)partial_dependence(model, "nope"), ConfigError);
        CHECK_THROWS_AS((void)partial_dependence(model, "x0", 1), ConfigError);
    }

    TEST_CASE("bins on a perfect forecast saturate at 0 and 100 percent") {
        std::vector<double> f;
        for (int i = 0; i <= 400; ++i) f.push_back((i - 200) / 20.0);
        const auto b = bin_exceedance(f, f, 20);
        REQUIRE(b.bins.size() == 20);
        CHECK(b.width == doctest::Approx(1.0));
        for (const auto& bin : b.bins) {
            REQUIRE(bin.pct_exceeding.has_value());
            if (bin.upper_edge <= 0.0) CHECK(*bin.pct_exceeding == 0.0);
            if (bin.lower_edge > 0.0) CHECK(*bin.pct_exceeding == 100.0);
            CHECK(bin.filled == (*bin.mean_forecast > 0.0));
        }
        std::size_t total = 0;
        for (const auto& bin : b.bins) total += bin.count;
        CHECK(total == f.size());
    }

    TEST_CASE("bin edges, empty bins and degenerate input") {
        const std::vector<double> f = {0.0, 1.0, 2.0, 4.0};
        const std::vector<double> y = {1.0, -1.0, 1.0, 1.0};
        const auto b = bin_exceedance(f, y, 4);
        CHECK(b.bins[0].count == 1);
        CHECK(b.bins[1].count == 1);  // 1.0 sits on the inner edge
        CHECK(b.bins[2].count == 1);
        CHECK(b.bins[3].count == 1);  // the maximum joins the last bin
        CHECK(*b.bins[1].pct_exceeding == 0.0);

        const std::vector<double> gap = {0.0, 0.1, 3.9, 4.0};
        const auto g = bin_exceedance(gap, gap, 4);
        CHECK(g.bins[1].count == 0);
        CHECK_FALSE(g.bins[1].mean_forecast.has_value());
        CHECK_FALSE(g.bins[1].pct_exceeding.has_value());

        const std::vector<double> same = {2.0, 2.0, 2.0};
        const auto d = bin_exceedance(same, same, 20);
        CHECK(d.degenerate);
        CHECK(d.bins.size() == 1);
        CHECK(d.bins[0].count == 3);

        CHECK_THROWS_AS((void)bin_exceedance(f, same, 4), ConfigError);
        CHECK_THROWS_AS((void)bin_exceedance(f, y, 1), ConfigError);
        CHECK_THROWS_AS((void)bin_exceedance(std::vector<double>{}, std::vector<double>{}, 4), EmptyInputError);
        const std::vector<double> bad = {0.0, NAN};
        CHECK_THROWS_AS((void)bin_exceedance(bad, bad, 4), DomainError);
    }

    TEST_CASE("loess reproduces lines and constants") {
        std::vector<double> x, line, flat;
        for (int i = 0; i < 30; ++i) {
            x.push_back(i * 0.5);
            line.push_back(2.0 - 0.3 * i * 0.5);
            flat.push_back(7.0);
        }
        const auto s = loess_smooth(x, line, 0.5);
        for (std::size_t i = 0; i < x.size(); ++i) CHECK(s[i] == doctest::Approx(line[i]).epsilon(1e-10));
        for (double v : loess_smooth(x, flat)) CHECK(v == doctest::Approx(7.0));
    }

    TEST_CASE("loess smooths noise toward the trend") {
        std::mt19937_64 rng(4);
        std::normal_distribution<double> z;
        std::vector<double> x, y;
        for (int i = 0; i < 200; ++i) {
            x.push_back(i / 20.0);
            y.push_back(std::sin(i / 20.0) + 0.3 * z(rng));
        }
        const auto s = loess_smooth(x, y, 0.3);
        double err_raw = 0, err_smooth = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            err_raw += std::pow(y[i] - std::sin(x[i]), 2);
            err_smooth += std::pow(s[i] - std::sin(x[i]), 2);
        }
        CHECK(err_smooth < 0.25 * err_raw);
        CHECK_THROWS_AS((void)loess_smooth(std::vector<double>(4, 1.0), std::vector<double>(4, 1.0)), InsufficientDataError);
        CHECK_THROWS_AS((void)loess_smooth(x, y, 0.0), ConfigError);
    }
}
