#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "fixtures.hpp"
#include "meltcast/conformal.hpp"
#include "meltcast/errors.hpp"

using namespace meltcast;
using namespace meltcast::conformal;

namespace {

gbm::BoostParams quick_boost() {
    gbm::BoostParams p;
    p.shrinkage = 0.05;
    p.interaction_depth = 3;
    p.min_obs_in_node = 6;
    p.max_iterations = 200;
    p.eval_stride = 20;
    return p;
}

qrf::QRFParams quick_qrf(std::uint64_t seed = 3) {
    qrf::QRFParams p;
    p.n_trees = 60;
    p.min_node_size = 5;
    p.seed = seed;
    return p;
}

struct World {
    Dataset train, cal, test;
    gbm::TrainedBooster booster;
    ConformalCalibrator calibrator;
};

World make_world(double level = -1.0, double sd = 1.0, std::uint64_t seed = 1) {
    World w;
    w.train = fixture::seasonal7(365, seed, 2021, sd, level);
    w.cal = fixture::seasonal7(365, seed + 100, 2022, sd, level);
    w.test = fixture::seasonal7(365, seed + 200, 2023, sd, level);
    w.booster = gbm::train(w.train, w.cal, {0.6}, quick_boost());
    w.calibrator = calibrate(w.booster, w.cal, 0.2, quick_qrf());
    return w;
}

const World& shared_world() {
    static const World w = make_world();
    return w;
}

PredictionRegion region(double lower, double upper) {
    PredictionRegion r;
    r.lower = lower;
    r.upper = upper;
    r.forecast = (lower + upper) / 2;
    r.regime = regime_of(r.forecast);
    return r;
}

}  // namespace

TEST_SUITE("conformal") {
    TEST_CASE("regime is decided by the forecast sign alone") {
        CHECK(regime_of(0.1) == Regime::kWarm);
        CHECK(regime_of(std::numeric_limits<double>::denorm_min()) == Regime::kWarm);
        CHECK(regime_of(0.0) == Regime::kCool);
        CHECK(regime_of(-0.0) == Regime::kCool);
        CHECK(regime_of(-3.0) == Regime::kCool);
        CHECK_THROWS_AS((void)regime_of(std::nan("")), DomainError);
        CHECK(std::string(to_string(Regime::kWarm)) == "warm");
    }

    TEST_CASE("calibration whitens the full residual sequence") {
        const auto& w = shared_world();
        const auto fitted = gbm::predict(w.booster, w.cal.features);
        std::vector<double> resid(fitted.size());
        double mean = 0;
        for (std::size_t i = 0; i < resid.size(); ++i) {
            resid[i] = w.cal.response[i] - fitted[i];
            mean += resid[i];
        }
        mean /= static_cast<double>(resid.size());
        const auto ar = whiten::fit_ar1(resid, w.cal.dates);
        CHECK(w.calibrator.ar1.phi == ar.phi);
        CHECK(w.calibrator.ar1.innovations == ar.innovations);
        CHECK(w.calibrator.score_offset == doctest::Approx(mean).epsilon(1e-12));
        CHECK_FALSE(w.calibrator.pooled_fallback);
        CHECK(w.calibrator.regimes[0].score_count + w.calibrator.regimes[1].score_count == ar.innovations.size());
        CHECK(w.calibrator.forest_for(Regime::kWarm).covariate_names.front() == "forecast");
        CHECK(w.calibrator.whiteness.ljung_box_df == 19);
    }

    TEST_CASE("regions are forecast plus score quantiles at alpha/2 and 1 - alpha/2") {
        const auto& w = shared_world();
        const auto regions = forecast_with_region(w.calibrator, w.booster, w.test);
        REQUIRE(regions.size() == w.test.size());
        const auto fitted = gbm::predict(w.booster, w.test.features);
        for (std::size_t i = 0; i < regions.size(); ++i) {
            const auto& r = regions[i];
            CHECK(r.forecast == fitted[i]);
            CHECK(r.lower == r.forecast + r.q_lo);
            CHECK(r.upper == r.forecast + r.q_hi);
            CHECK(r.lower <= r.upper);
            CHECK(r.date == w.test.dates[i]);
            if (i % 40 == 0) {
                std::vector<double> x{r.forecast};
                const auto row = w.test.features.row(i);
                x.insert(x.end(), row.begin(), row.end());
                CHECK(r.q_lo == qrf::predict_quantile(w.calibrator.forest_for(r.regime), x, 0.1));
                CHECK(r.q_hi == qrf::predict_quantile(w.calibrator.forest_for(r.regime), x, 0.9));
            }
        }
    }

    TEST_CASE("asymmetric regions are accepted as they are") {
        World w;
        w.train = fixture::seasonal7(365, 41, 2021);
        w.cal = fixture::seasonal7(365, 42, 2022);
        w.test = fixture::seasonal7(50, 43, 2023);
        std::mt19937_64 rng(44);
        std::exponential_distribution<double> skew(0.5);
        for (auto* ds : {&w.train, &w.cal}) {
            for (auto& y : ds->response) y += skew(rng);
        }
        w.booster = gbm::train(w.train, w.cal, {0.6}, quick_boost());
        w.calibrator = calibrate(w.booster, w.cal, 0.2, quick_qrf());
        const auto regions = forecast_with_region(w.calibrator, w.booster, w.test);
        std::size_t asymmetric = 0;
        for (const auto& r : regions) {
            asymmetric += std::fabs(r.q_lo + r.q_hi) > 0.1;
            CHECK_FALSE(r.swapped);
            CHECK(r.lower == r.forecast + r.q_lo);
        }
        CHECK(asymmetric > regions.size() / 2);
    }

    TEST_CASE("an empty regime switches to one pooled forest") {
        const auto w = make_world(20.0, 1.0, 5);
        CHECK(w.calibrator.pooled_fallback);
        CHECK(w.calibrator.regimes[static_cast<std::size_t>(Regime::kCool)].score_count == 0);
        CHECK(w.calibrator.forests[1].trees.empty());
        CHECK(&w.calibrator.forest_for(Regime::kCool) == &w.calibrator.forests[0]);
        const auto regions = forecast_with_region(w.calibrator, w.booster, w.test);
        for (const auto& r : regions) CHECK(r.regime == Regime::kWarm);
    }

    TEST_CASE("property: smaller alpha gives nested wider regions") {
        const auto& w = shared_world();
        for (auto mode : {IntervalMode::kAdaptive, IntervalMode::kMarginal}) {
            const auto wide = forecast_with_region(w.calibrator, w.booster, w.test, mode, 0.1);
            const auto mid = forecast_with_region(w.calibrator, w.booster, w.test, mode, 0.2);
            const auto narrow = forecast_with_region(w.calibrator, w.booster, w.test, mode, 0.4);
            for (std::size_t i = 0; i < wide.size(); ++i) {
                CHECK(wide[i].lower <= mid[i].lower);
                CHECK(mid[i].lower <= narrow[i].lower);
                CHECK(narrow[i].upper <= mid[i].upper);
                CHECK(mid[i].upper <= wide[i].upper);
            }
        }
    }

    TEST_CASE("property: regimes ignore the observed truth") {
        const auto& w = shared_world();
        const auto base = forecast_with_region(w.calibrator, w.booster, w.test);
        std::mt19937_64 rng(9);
        std::normal_distribution<double> z(0.0, 10.0);
        for (int trial = 0; trial < 20; ++trial) {
            auto perturbed = w.test;
            for (auto& y : perturbed.response) y += z(rng);
            const auto again = forecast_with_region(w.calibrator, w.booster, perturbed);
            for (std::size_t i = 0; i < base.size(); ++i) {
                CHECK(again[i].regime == base[i].regime);
                CHECK(again[i].regime == regime_of(again[i].forecast));
            }
        }
    }

    TEST_CASE("identical rows receive identical regions") {
        const auto& w = shared_world();
        Dataset twice = w.test;
        twice.features = Matrix(0, 7);
        twice.response.clear();
        twice.dates.clear();
        for (std::size_t i = 0; i < 10; ++i) {
            twice.features.append_row(w.test.features.row(3));
            twice.response.push_back(w.test.response[3]);
            twice.dates.push_back(w.test.dates[i]);
        }
        const auto regions = forecast_with_region(w.calibrator, w.booster, twice);
        for (const auto& r : regions) {
            CHECK(r.lower == regions[0].lower);
            CHECK(r.upper == regions[0].upper);
        }
    }

    TEST_CASE("a calibrator refuses a different booster or schema") {
        const auto& w = shared_world();
        auto other_params = quick_boost();
        other_params.max_iterations = 40;
        const auto other = gbm::train(w.train, w.cal, {0.6}, other_params);
        CHECK_THROWS_AS((void)forecast_with_region(w.calibrator, other, w.test), ConfigError);
        auto renamed = w.test;
        renamed.feature_names[2] = "other";
        CHECK_THROWS_AS((void)forecast_with_region(w.calibrator, w.booster, renamed), ConfigError);
        CHECK_THROWS_AS((void)forecast_with_region(w.calibrator, w.booster, w.test, IntervalMode::kAdaptive, 0.5),
                        ConfigError);
    }

    TEST_CASE("alpha must lie in (0, 0.5)") {
        const auto& w = shared_world();
        CHECK_THROWS_AS((void)calibrate(w.booster, w.cal, 0.0, quick_qrf()), ConfigError);
        CHECK_THROWS_AS((void)calibrate(w.booster, w.cal, 0.5, quick_qrf()), ConfigError);
        CHECK_THROWS_AS((void)calibrate(w.booster, w.cal, std::nan(""), quick_qrf()), ConfigError);
    }

    TEST_CASE("coverage bookkeeping") {
        const std::vector<PredictionRegion> regions = {region(2.4, 7.6), region(-3.0, -1.0), region(-1.0, 1.0)};
        const std::vector<double> inside = {7.6, -3.0, 0.0};
        const auto all = empirical_coverage(regions, inside);
        CHECK(all.overall.coverage == 1.0);
        CHECK(all.overall.count == 3);
        CHECK(all.by_regime[0].count == 1);
        CHECK(all.by_regime[0].mean_halfwidth == doctest::Approx(2.6));
        CHECK(all.by_regime[1].min_halfwidth == 1.0);
        CHECK_FALSE(covers(region(2.4, 7.6), 8.0));

        const std::vector<PredictionRegion> cool_only = {region(-3.0, -1.0)};
        const std::vector<double> truth = {0.0};
        const auto s = empirical_coverage(cool_only, truth);
        CHECK(s.overall.coverage == 0.0);
        CHECK(std::isnan(s.by_regime[0].coverage));
        CHECK_THROWS_AS((void)empirical_coverage(cool_only, inside), ConfigError);
    }

    TEST_CASE("melting statement needs a strictly positive lower bound") {
        const auto yes = melting_confidence(region(0.3, 4.0), 0.2);
        REQUIRE(yes.has_value());
        CHECK(yes->probability == doctest::Approx(0.9));
        CHECK(yes->text.find("0.9") != std::string::npos);
        CHECK_FALSE(melting_confidence(region(-0.1, 4.0), 0.2).has_value());
        CHECK_FALSE(melting_confidence(region(0.0, 4.0), 0.2).has_value());
    }

    TEST_CASE("rank-corrected marginal half-width") {
        const std::vector<double> scores = {-1, 2, -3, 4, -5, 6, -7, 8, -9};
        CHECK(marginal_halfwidth(scores, 0.2) == 8.0);   // ceil(10 * 0.8) = 8
        CHECK(marginal_halfwidth(scores, 0.1) == 9.0);   // ceil(10 * 0.9) = 9
        const std::vector<double> few = {1, 2, 3};
        CHECK(std::isinf(marginal_halfwidth(few, 0.2)));
        const auto& w = shared_world();
        const auto regions = forecast_with_region(w.calibrator, w.booster, w.test, IntervalMode::kMarginal);
        for (const auto& r : regions) {
            CHECK(r.q_hi == -r.q_lo);
            CHECK(r.q_hi == w.calibrator.regimes[static_cast<std::size_t>(r.regime)].marginal_halfwidth);
        }
    }

    TEST_CASE("interval mode parsing") {
        CHECK(parse_interval_mode(" Marginal ") == IntervalMode::kMarginal);
        CHECK(parse_interval_mode("adaptive") == IntervalMode::kAdaptive);
        CHECK_THROWS_AS((void)parse_interval_mode("both"), ConfigError);
    }
}
