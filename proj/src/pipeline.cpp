#include "meltcast/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "meltcast/conformal.hpp"
#include "meltcast/errors.hpp"
#include "meltcast/ingest.hpp"
#include "meltcast/model_io.hpp"
#include "meltcast/report.hpp"
#include "meltcast/svg.hpp"
#include "meltcast/synth.hpp"
#include "meltcast/tables.hpp"
#include "meltcast/text.hpp"

namespace meltcast::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kManifest = "manifest.json";
constexpr const char* kBooster = "booster.mcb";
constexpr const char* kCalibrator = "calibrator.mcc";
constexpr const char* kRegions = "regions.csv";
constexpr const char* kAlphaLock = "alpha.lock";

// Published Longyearbyen 2024 figures, shown beside computed values.
constexpr double kRefWarmHalfwidth = 2.6;
constexpr double kRefCoolHalfwidth = 4.7;
constexpr double kRefHalfwidthMin = 1.4;
constexpr double kRefHalfwidthMax = 6.2;
constexpr double kRefLagTempShare = 45.0;
constexpr double kRefDayCounterShare = 40.0;
constexpr int kRefIterations = 27000;

class Stage {
public:
    Stage(const PipelineConfig& cfg, const RunOptions& opt, std::string name)
        : cfg_(cfg), opt_(opt), name_(std::move(name)), start_(std::chrono::steady_clock::now()) {
        cfg_.validate();
        std::error_code ec;
        fs::create_directories(cfg_.out_dir, ec);
        if (ec) throw IoError("cannot create output directory '" + cfg_.out_dir + "': " + ec.message());
    }

    [[nodiscard]] std::string path(const std::string& file) const { return (fs::path(cfg_.out_dir) / file).string(); }

    [[nodiscard]] std::string require(const std::string& file, const char* producer) const {
        auto p = path(file);
        if (!fs::exists(p)) {
            throw MissingArtifactError("missing '" + p + "'; run `" + producer + "` first");
        }
        return p;
    }

    void info(const std::string& msg) const { log(LogLevel::kInfo, msg); }
    void warn(const std::string& msg) const { log(LogLevel::kWarning, msg); }

    void output(const std::string& file, const std::string& contents) {
        const auto p = path(file);
        tables::write_text_file(p, contents);
        section_["outputs"][file] = text::hex64(text::fnv1a64(contents));
    }

    json& section() { return section_; }
    json& flags() { return flags_; }

    /// Merges this stage into the manifest.
    void finish(unsigned warnings) {
        const auto p = path(kManifest);
        json m = json::object();
        if (fs::exists(p)) {
            try {
                m = json::parse(tables::read_text_file(p));
            } catch (const json::exception&) {
                warn("existing manifest is unreadable; starting a new one");
                m = json::object();
            }
        }
        m["software_version"] = MELTCAST_VERSION;
        json c = json::object();
        for (const auto& [k, v] : cfg_.entries()) c[k] = v;
        m["config"] = c;
        section_["warnings"] = warnings;
        section_["elapsed_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        m["stages"][name_] = section_;
        for (auto& [k, v] : flags_.items()) m["flags"][k] = v;
        tables::write_text_file(p, m.dump(2) + "\n");
    }

    [[nodiscard]] const PipelineConfig& config() const { return cfg_; }

private:
    void log(LogLevel level, const std::string& msg) const {
        if (opt_.log) opt_.log(level, name_ + ": " + msg);
    }

    const PipelineConfig& cfg_;
    const RunOptions& opt_;
    std::string name_;
    std::chrono::steady_clock::time_point start_;
    json section_ = json::object();
    json flags_ = json::object();
};

struct RoleSpec {
    ingest::YearRole role;
    int year;
    const char* file;
};

std::vector<RoleSpec> roles(const PipelineConfig& c) {
    return {{ingest::YearRole::kCalibration, c.calibration_year, "features_calibration.csv"},
            {ingest::YearRole::kTrain, c.train_year, "features_train.csv"},
            {ingest::YearRole::kTest, c.test_year, "features_test.csv"}};
}

ingest::FeatureTable load_table(const Stage& st, ingest::YearRole role) {
    for (const auto& r : roles(st.config())) {
        if (r.role != role) continue;
        std::ifstream in(st.require(r.file, "ingest"), std::ios::binary);
        return tables::read_feature_table(in, r.role, r.year, st.config().lag_days);
    }
    throw InternalError("unknown year role");
}

template <class Fn>
std::string render(Fn&& fn) {
    std::ostringstream out;
    fn(out);
    return out.str();
}

json whiteness_json(const whiten::WhitenessReport& w) {
    return {{"ljung_box_stat", w.ljung_box_stat}, {"df", w.ljung_box_df}, {"p_value", w.ljung_box_pvalue},
            {"level", w.level},                   {"passed", w.passed},   {"acf", w.acf_values}};
}

json stats_json(const conformal::CoverageStats& s) {
    auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    return {{"count", s.count},
            {"covered", s.covered},
            {"coverage", num(s.coverage)},
            {"mean_halfwidth", num(s.mean_halfwidth)},
            {"min_halfwidth", num(s.min_halfwidth)},
            {"max_halfwidth", num(s.max_halfwidth)}};
}

struct AlphaLock {
    double alpha = 0.0;
    std::string test_checksum;
};

std::optional<AlphaLock> read_lock(const std::string& path) {
    if (!fs::exists(path)) return std::nullopt;
    AlphaLock lock;
    const auto contents = tables::read_text_file(path);
    for (auto line : text::split(contents, '\n')) {
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) continue;
        const auto key = text::trim(line.substr(0, eq));
        const auto value = text::trim(line.substr(eq + 1));
        if (key == "alpha") {
            const auto a = text::parse_double(value);
            if (!a) throw FormatError("malformed alpha lock '" + path + "'");
            lock.alpha = *a;
        } else if (key == "test_checksum") {
            lock.test_checksum = std::string(value);
        }
    }
    return lock;
}

void guard_alpha(Stage& st, const RunOptions& opt, const std::string& test_checksum) {
    const auto lock = read_lock(st.path(kAlphaLock));
    if (!lock || lock->test_checksum != test_checksum || lock->alpha == st.config().alpha) return;
    const auto msg = "test set was already evaluated at alpha=" + text::format_double(lock->alpha) +
                     "; refusing alpha=" + text::format_double(st.config().alpha);
    if (!opt.override_alpha_change) throw AlphaChangeRefusedError(msg + " (pass --override-alpha-change to force)");
    st.warn(msg + " overridden");
    st.section()["alpha_change_overridden"] = true;
}

std::string figure(svg::Figure f) { return svg::render(f); }

}  // namespace

std::string file_checksum(const std::string& path) { return text::hex64(text::fnv1a64(tables::read_text_file(path))); }

unsigned run_ingest(const PipelineConfig& cfg, const RunOptions& opt) {
    Stage st(cfg, opt, "ingest");
    if (cfg.station_files.empty()) throw ConfigError("station_files is empty");

    std::vector<ingest::WeatherRecord> records;
    for (const auto& f : cfg.station_files) {
        const auto contents = tables::read_text_file(f);
        std::istringstream in(contents);
        auto part = ingest::parse_records(in);
        st.info("read " + std::to_string(part.size()) + " records from " + f);
        records.insert(records.end(), part.begin(), part.end());
        st.section()["inputs"][f] = text::hex64(text::fnv1a64(contents));
    }
    const auto daily = ingest::select_daily(records, cfg.target_hour, cfg.hour_tolerance);

    for (const auto& r : roles(cfg)) {
        const auto table = ingest::build_features(daily, r.year, r.role, cfg.lag_days);
        st.output(r.file, render([&](std::ostream& o) { tables::write_feature_table(table, o); }));
        json dates = json::array();
        for (const auto& d : table.excluded) dates.push_back(d.iso());
        st.section()["exclusions"][ingest::to_string(r.role)] = {
            {"year", r.year}, {"rows", table.rows.size()}, {"excluded", table.exclusion_tally()}, {"dates", dates}};
        st.info(std::string(ingest::to_string(r.role)) + " " + std::to_string(r.year) + ": " +
                std::to_string(table.rows.size()) + " rows, " + std::to_string(table.exclusion_tally()) + " excluded");
    }
    st.finish(0);
    return 0;
}

unsigned run_train(const PipelineConfig& cfg, const RunOptions& opt) {
    Stage st(cfg, opt, "train");
    const auto train = load_table(st, ingest::YearRole::kTrain).dataset();
    const auto calib = load_table(st, ingest::YearRole::kCalibration).dataset();
    const auto booster = gbm::train(train, calib, gbm::QuantileLossParams{cfg.tau}, cfg.boost);

    st.output(kBooster, render([&](std::ostream& o) { model_io::save_booster(booster, o); }));
    st.output("loss_curve.csv", render([&](std::ostream& o) { tables::write_loss_curve(booster, o); }));
    st.section()["best_iter"] = booster.best_iter;
    st.section()["iterations_run"] = booster.iterations_run;
    st.section()["trees_stored"] = booster.trees.size();
    st.info("best_iter " + std::to_string(booster.best_iter) + " of " + std::to_string(booster.iterations_run));

    unsigned warnings = 0;
    st.flags()["early_stopping_warning"] = booster.early_stopping_warning;
    if (booster.early_stopping_warning) {
        warnings |= kWarnEarlyStopping;
        st.warn("calibration loss was still falling at max_iterations; consider raising it");
    }
    st.finish(warnings);
    return warnings;
}

unsigned run_calibrate(const PipelineConfig& cfg, const RunOptions& opt) {
    Stage st(cfg, opt, "calibrate");
    const auto booster = model_io::load_booster_file(st.require(kBooster, "train"));
    const auto calib = load_table(st, ingest::YearRole::kCalibration).dataset();
    const auto cal = conformal::calibrate(booster, calib, cfg.alpha, cfg.qrf, cfg.calibration);

    st.output(kCalibrator, render([&](std::ostream& o) { model_io::save_calibrator(cal, o); }));
    const auto w = whiteness_json(cal.whiteness);
    st.output("whiteness.json", json(w).dump(2) + "\n");
    st.section()["whiteness"] = w;
    st.section()["ar1"] = {{"intercept", cal.ar1.intercept_c}, {"phi", cal.ar1.phi}, {"pairs", cal.ar1.n_used}};
    st.section()["score_offset"] = cal.score_offset;
    st.section()["score_scale"] = cal.score_scale;
    st.section()["regime_scores"] = {{"warm", cal.regimes[0].score_count}, {"cool", cal.regimes[1].score_count}};
    st.info("AR(1) phi " + text::format_double(cal.ar1.phi) + ", Ljung-Box p " +
            text::format_double(cal.whiteness.ljung_box_pvalue));

    unsigned warnings = 0;
    st.flags()["whiteness_failed"] = !cal.whiteness.passed;
    st.flags()["pooled_fallback"] = cal.pooled_fallback;
    if (!cal.whiteness.passed) {
        warnings |= kWarnWhiteness;
        st.warn("innovations fail the Ljung-Box whiteness test");
    }
    if (cal.pooled_fallback) {
        warnings |= kWarnDegenerateRegime;
        st.warn("a regime has fewer than " + std::to_string(cfg.calibration.min_regime_innovations) +
                " innovations; both regimes share one pooled forest");
    }
    st.finish(warnings);
    return warnings;
}

unsigned run_forecast(const PipelineConfig& cfg, const RunOptions& opt) {
    Stage st(cfg, opt, "forecast");
    const auto test_path = st.require("features_test.csv", "ingest");
    guard_alpha(st, opt, file_checksum(test_path));
    const auto booster = model_io::load_booster_file(st.require(kBooster, "train"));
    const auto cal = model_io::load_calibrator_file(st.require(kCalibrator, "calibrate"));
    const auto test = load_table(st, ingest::YearRole::kTest).dataset();
    const auto regions = conformal::forecast_with_region(cal, booster, test, cfg.interval_mode, cfg.alpha);

    st.output(kRegions, render([&](std::ostream& o) { tables::write_regions(regions, cfg.alpha, o); }));
    const auto swaps = std::count_if(regions.begin(), regions.end(), [](const auto& r) { return r.swapped; });
    st.section()["alpha"] = cfg.alpha;
    st.section()["interval_mode"] = conformal::to_string(cfg.interval_mode);
    st.section()["rows"] = regions.size();
    st.section()["swapped_intervals"] = swaps;
    st.info(std::to_string(regions.size()) + " regions at alpha " + text::format_double(cfg.alpha));

    unsigned warnings = 0;
    if (swaps > 0) {
        warnings |= kWarnIntervalSwap;
        st.warn(std::to_string(swaps) + " regions had inverted score quantiles and were swapped");
    }
    st.finish(warnings);
    return warnings;
}

unsigned run_evaluate(const PipelineConfig& cfg, const RunOptions& opt) {
    Stage st(cfg, opt, "evaluate");
    const auto test_path = st.require("features_test.csv", "ingest");
    const auto test_checksum = file_checksum(test_path);
    guard_alpha(st, opt, test_checksum);

    const auto booster = model_io::load_booster_file(st.require(kBooster, "train"));
    const auto cal = model_io::load_calibrator_file(st.require(kCalibrator, "calibrate"));
    const auto test = load_table(st, ingest::YearRole::kTest).dataset();
    std::vector<conformal::PredictionRegion> regions;
    {
        std::ifstream in(st.require(kRegions, "forecast"), std::ios::binary);
        regions = tables::read_regions(in);
    }
    if (regions.size() != test.size()) throw ConfigError("regions.csv does not match the test table; rerun forecast");
    for (std::size_t i = 0; i < regions.size(); ++i) {
        if (regions[i].date != test.dates[i]) throw ConfigError("regions.csv dates do not match the test table");
    }
    const auto manifest_path = st.path(kManifest);
    if (fs::exists(manifest_path)) {
        const auto m = json::parse(tables::read_text_file(manifest_path), nullptr, false);
        if (!m.is_discarded() && m.contains("stages") && m["stages"].contains("forecast") &&
            m["stages"]["forecast"].contains("alpha") && m["stages"]["forecast"]["alpha"].get<double>() != cfg.alpha) {
            throw ConfigError("regions were produced at alpha=" +
                              text::format_double(m["stages"]["forecast"]["alpha"].get<double>()) +
                              "; rerun forecast at alpha=" + text::format_double(cfg.alpha));
        }
    }

    std::vector<double> forecasts;
    forecasts.reserve(regions.size());
    for (const auto& r : regions) forecasts.push_back(r.forecast);

    const auto coverage = conformal::empirical_coverage(regions, test.response);
    st.output("coverage.csv", render([&](std::ostream& o) { tables::write_coverage(coverage, o); }));

    const auto bins = report::bin_exceedance(forecasts, test.response, cfg.n_bins, 0.0);
    st.output("bins.csv", render([&](std::ostream& o) { tables::write_bins(bins, o); }));
    {
        svg::Series s;
        s.label = "filled: mean forecast > 0";
        for (const auto& b : bins.bins) {
            if (!b.mean_forecast) continue;
            s.x.push_back(*b.mean_forecast);
            s.y.push_back(*b.pct_exceeding);
            s.filled.push_back(b.filled);
        }
        st.output("bins.svg", figure({"Exceedance of 0 degC by forecast bin", "mean forecast (degC)",
                                      "percent above 0 degC", {s}, 80.0, {}}));
    }

    const auto importance = report::variable_importance(booster);
    st.output("importance.csv", render([&](std::ostream& o) { tables::write_importance(importance, o); }));
    {
        svg::Series s;
        s.mark = svg::Mark::kBars;
        std::vector<std::string> labels;
        for (std::size_t i = 0; i < importance.size(); ++i) {
            s.x.push_back(static_cast<double>(i + 1));
            s.y.push_back(importance[i].percent);
            labels.push_back(importance[i].feature);
        }
        st.output("importance.svg", figure({"Relative influence", "", "percent of loss reduction", {s}, {}, labels}));
    }

    std::string pd_csv;
    for (const auto& name : booster.feature_names) {
        const auto curve = report::partial_dependence(booster, name, cfg.pd_grid_size);
        std::vector<double> smooth;
        if (curve.grid.size() >= 5) smooth = report::loess_smooth(curve.grid, curve.values, 0.75);
        auto block = render([&](std::ostream& o) { tables::write_partial_dependence(curve, smooth, o); });
        pd_csv += pd_csv.empty() ? block : block.substr(block.find('\n') + 1);
        svg::Series pts{curve.grid, curve.values, "partial dependence", svg::Mark::kPoints, {}};
        svg::Series line{curve.grid, smooth, "loess", svg::Mark::kLine, {}};
        st.output("pd_" + name + ".svg", figure({"Partial dependence: " + name, name, "fitted response (degC)",
                                                 {pts, line}, {}, {}}));
    }
    st.output("partial_dependence.csv", pd_csv);

    {
        std::vector<std::size_t> order(forecasts.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return forecasts[a] < forecasts[b]; });
        std::vector<double> fx, fy;
        for (auto i : order) {
            fx.push_back(forecasts[i]);
            fy.push_back(test.response[i]);
        }
        std::vector<double> smooth;
        if (fx.size() >= 5) smooth = report::loess_smooth(fx, fy, 0.75);
        std::string csv = "date,observed,forecast,loess\n";
        for (std::size_t k = 0; k < order.size(); ++k) {
            csv += test.dates[order[k]].iso() + "," + text::format_double(fy[k]) + "," + text::format_double(fx[k]) +
                   "," + (k < smooth.size() ? text::format_double(smooth[k]) : std::string()) + "\n";
        }
        st.output("fit.csv", csv);
        st.output("fit.svg", figure({"Observed versus forecast", "forecast (degC)", "observed (degC)",
                                     {{fx, fy, "observed", svg::Mark::kPoints, {}},
                                      {fx, smooth, "loess", svg::Mark::kLine, {}}},
                                     0.0,
                                     {}}));

        std::vector<double> day, lo, hi;
        for (std::size_t i = 0; i < regions.size(); ++i) {
            day.push_back(regions[i].date.day_of_year());
            lo.push_back(regions[i].lower);
            hi.push_back(regions[i].upper);
        }
        st.output("regions.svg", figure({"Prediction regions", "day of year", "degC",
                                         {{day, test.response, "observed", svg::Mark::kPoints, {}},
                                          {day, forecasts, "forecast", svg::Mark::kLine, {}},
                                          {day, lo, "lower", svg::Mark::kLine, {}},
                                          {day, hi, "upper", svg::Mark::kLine, {}}},
                                         0.0,
                                         {}}));
    }

    // Reference values from the published Longyearbyen run, for context only.
    const auto& warm = coverage.by_regime[static_cast<std::size_t>(conformal::Regime::kWarm)];
    const auto& cool = coverage.by_regime[static_cast<std::size_t>(conformal::Regime::kCool)];
    auto share = [&](const char* name) {
        for (const auto& e : importance) {
            if (e.feature == name) return e.percent;
        }
        return std::nan("");
    };
    auto fmt = [](double v) { return std::isfinite(v) ? text::format_double(std::round(v * 100) / 100) : "n/a"; };
    st.info("coverage " + fmt(coverage.overall.coverage) + " (target " + text::format_double(1.0 - cfg.alpha) + ")");
    st.info("warm half-width mean/min/max " + fmt(warm.mean_halfwidth) + "/" + fmt(warm.min_halfwidth) + "/" +
            fmt(warm.max_halfwidth) + "  reference " + text::format_double(kRefWarmHalfwidth));
    st.info("cool half-width mean/min/max " + fmt(cool.mean_halfwidth) + "/" + fmt(cool.min_halfwidth) + "/" +
            fmt(cool.max_halfwidth) + "  reference " + text::format_double(kRefCoolHalfwidth));
    st.info("half-width range reference " + text::format_double(kRefHalfwidthMin) + " to " +
            text::format_double(kRefHalfwidthMax));
    st.info("importance lag_temp " + fmt(share("lag_temp")) + "% (reference ~" + text::format_double(kRefLagTempShare) +
            "%), day_counter " + fmt(share("day_counter")) + "% (reference ~" +
            text::format_double(kRefDayCounterShare) + "%)");
    st.info("best_iter " + std::to_string(booster.best_iter) + " (reference ~" + std::to_string(kRefIterations) + ")");

    json ev;
    ev["alpha"] = cfg.alpha;
    ev["interval_mode"] = conformal::to_string(cfg.interval_mode);
    ev["coverage"] = {{"overall", stats_json(coverage.overall)}, {"warm", stats_json(warm)}, {"cool", stats_json(cool)}};
    json imp = json::object();
    for (const auto& e : importance) imp[e.feature] = e.percent;
    ev["importance_percent"] = imp;
    ev["best_iter"] = booster.best_iter;
    ev["whiteness"] = whiteness_json(cal.whiteness);
    ev["pooled_fallback"] = cal.pooled_fallback;
    ev["early_stopping_warning"] = booster.early_stopping_warning;
    ev["bins_degenerate"] = bins.degenerate;
    ev["reference"] = {{"warm_halfwidth", kRefWarmHalfwidth},
                       {"cool_halfwidth", kRefCoolHalfwidth},
                       {"halfwidth_range", {kRefHalfwidthMin, kRefHalfwidthMax}},
                       {"lag_temp_percent", kRefLagTempShare},
                       {"day_counter_percent", kRefDayCounterShare},
                       {"iterations", kRefIterations}};
    st.output("evaluation.json", ev.dump(2) + "\n");

    st.output(kAlphaLock, "alpha=" + text::format_double(cfg.alpha) + "\ntest_checksum=" + test_checksum + "\n");
    st.section()["alpha"] = cfg.alpha;

    unsigned warnings = 0;
    if (!cal.whiteness.passed) warnings |= kWarnWhiteness;
    if (cal.pooled_fallback) warnings |= kWarnDegenerateRegime;
    if (booster.early_stopping_warning) warnings |= kWarnEarlyStopping;
    if (cal.pooled_fallback) st.warn("regions use the pooled fallback forest");
    if (!cal.whiteness.passed) st.warn("calibration innovations failed the whiteness test");
    st.finish(warnings);
    return warnings;
}

unsigned run_simulate(const PipelineConfig& cfg, const RunOptions& opt) {
    Stage st(cfg, opt, "simulate");
    const int first = std::min({cfg.train_year, cfg.calibration_year, cfg.test_year}) - 1;
    const int last = std::max({cfg.train_year, cfg.calibration_year, cfg.test_year});
    synth::StationOptions so;
    so.first_year = first;
    so.last_year = last;
    so.seed = cfg.seed;
    const auto records = synth::simulate_station(so);

    std::string files;
    for (int y = first; y <= last; ++y) {
        std::vector<ingest::WeatherRecord> year;
        std::copy_if(records.begin(), records.end(), std::back_inserter(year),
                     [&](const auto& r) { return r.date.year() == y; });
        const auto name = "station_" + std::to_string(y) + ".csv";
        st.output(name, render([&](std::ostream& o) { synth::write_station_csv(year, o); }));
        files += (files.empty() ? "" : ",") + name;
    }
    st.output("meltcast.conf", "# synthetic station data\nschema_version=" + std::to_string(kConfigSchemaVersion) +
                                   "\nstation_files=" + files + "\ntrain_year=" + std::to_string(cfg.train_year) +
                                   "\ncalibration_year=" + std::to_string(cfg.calibration_year) +
                                   "\ntest_year=" + std::to_string(cfg.test_year) + "\nseed=" + std::to_string(cfg.seed) +
                                   "\nout_dir=run\n");
    st.info("wrote station files for " + std::to_string(first) + ".." + std::to_string(last));
    st.finish(0);
    return 0;
}

}  // namespace meltcast::pipeline
