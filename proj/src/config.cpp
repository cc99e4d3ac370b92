#include "meltcast/config.hpp"

#include <filesystem>
#include <set>

#include "meltcast/errors.hpp"
#include "meltcast/tables.hpp"
#include "meltcast/text.hpp"

namespace meltcast {

namespace {

double real(std::string_view key, std::string_view v) {
    const auto d = text::parse_double(v);
    if (!d) throw ConfigError("config key '" + std::string(key) + "' expects a number, got '" + std::string(v) + "'");
    return *d;
}

long long integer(std::string_view key, std::string_view v) {
    const auto i = text::parse_int(v);
    if (!i) throw ConfigError("config key '" + std::string(key) + "' expects an integer, got '" + std::string(v) + "'");
    return *i;
}

int small_int(std::string_view key, std::string_view v) {
    const auto i = integer(key, v);
    if (i < -1000000000LL || i > 1000000000LL) throw ConfigError("config key '" + std::string(key) + "' out of range");
    return static_cast<int>(i);
}

bool boolean(std::string_view key, std::string_view v) {
    const auto s = text::lowercase(v);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError("config key '" + std::string(key) + "' expects true or false");
}

std::string flag(bool b) { return b ? "true" : "false"; }

}  // namespace

void PipelineConfig::set(std::string_view key, std::string_view raw) {
    const auto v = text::trim(raw);
    if (key == "schema_version") {
        if (integer(key, v) != kConfigSchemaVersion) {
            throw ConfigError("unsupported config schema_version '" + std::string(v) + "'");
        }
    } else if (key == "station_files") {
        station_files.clear();
        for (auto part : text::split(v, ',')) {
            const auto p = text::trim(part);
            if (!p.empty()) station_files.emplace_back(p);
        }
    } else if (key == "train_year") {
        train_year = small_int(key, v);
    } else if (key == "calibration_year") {
        calibration_year = small_int(key, v);
    } else if (key == "test_year") {
        test_year = small_int(key, v);
    } else if (key == "tau") {
        tau = real(key, v);
    } else if (key == "alpha") {
        alpha = real(key, v);
    } else if (key == "lag_days") {
        lag_days = small_int(key, v);
    } else if (key == "target_hour") {
        target_hour = small_int(key, v);
    } else if (key == "hour_tolerance") {
        hour_tolerance = small_int(key, v);
    } else if (key == "shrinkage") {
        boost.shrinkage = real(key, v);
    } else if (key == "interaction_depth") {
        boost.interaction_depth = small_int(key, v);
    } else if (key == "min_obs_in_node") {
        boost.min_obs_in_node = small_int(key, v);
    } else if (key == "max_iterations") {
        boost.max_iterations = small_int(key, v);
    } else if (key == "eval_stride") {
        boost.eval_stride = small_int(key, v);
    } else if (key == "keep_all_trees") {
        boost.keep_all_trees = boolean(key, v);
    } else if (key == "qrf_trees") {
        qrf.n_trees = small_int(key, v);
    } else if (key == "qrf_min_node_size") {
        qrf.min_node_size = small_int(key, v);
    } else if (key == "qrf_features_per_split") {
        qrf.features_per_split = small_int(key, v);
    } else if (key == "qrf_bootstrap") {
        qrf.bootstrap = boolean(key, v);
    } else if (key == "seed") {
        const auto s = integer(key, v);
        if (s < 0) throw ConfigError("seed must be non-negative");
        seed = static_cast<std::uint64_t>(s);
        boost.seed = seed;
        qrf.seed = seed;
    } else if (key == "out_dir") {
        if (v.empty()) throw ConfigError("out_dir must not be empty");
        out_dir = std::string(v);
    } else if (key == "ljung_box_lags") {
        const auto l = small_int(key, v);
        if (l < 2) throw ConfigError("ljung_box_lags must be >= 2");
        calibration.ljung_box_lags = static_cast<std::size_t>(l);
    } else if (key == "whiteness_level") {
        calibration.whiteness_level = real(key, v);
    } else if (key == "min_regime_innovations") {
        const auto m = small_int(key, v);
        if (m < 1) throw ConfigError("min_regime_innovations must be >= 1");
        calibration.min_regime_innovations = static_cast<std::size_t>(m);
    } else if (key == "recenter_scores") {
        calibration.recenter_scores = boolean(key, v);
    } else if (key == "rescale_scores") {
        calibration.rescale_scores = boolean(key, v);
    } else if (key == "interval_mode") {
        interval_mode = conformal::parse_interval_mode(std::string(v));
    } else if (key == "n_bins") {
        n_bins = small_int(key, v);
    } else if (key == "pd_grid_size") {
        pd_grid_size = small_int(key, v);
    } else {
        throw ConfigError("unknown config key '" + std::string(key) + "'");
    }
}

void PipelineConfig::validate() const {
    if (train_year == calibration_year || train_year == test_year || calibration_year == test_year) {
        throw ConfigError("train, calibration and test years must be pairwise distinct");
    }
    if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("tau must lie in (0, 1)");
    if (!(alpha > 0.0 && alpha < 0.5)) throw ConfigError("alpha must lie in (0, 0.5)");
    if (lag_days < 1) throw ConfigError("lag_days must be >= 1");
    if (target_hour < 0 || target_hour > 23) throw ConfigError("target_hour must lie in 0..23");
    if (hour_tolerance < 0 || hour_tolerance > 12) throw ConfigError("hour_tolerance must lie in 0..12");
    boost.validate();
    qrf.validate(ingest::kFeatureCount + 1);
    if (!(calibration.whiteness_level > 0.0 && calibration.whiteness_level < 1.0)) {
        throw ConfigError("whiteness_level must lie in (0, 1)");
    }
    if (n_bins < 2) throw ConfigError("n_bins must be >= 2");
    if (pd_grid_size < 2) throw ConfigError("pd_grid_size must be >= 2");
}

std::vector<std::pair<std::string, std::string>> PipelineConfig::entries() const {
    std::string files;
    for (std::size_t i = 0; i < station_files.size(); ++i) files += (i ? "," : "") + station_files[i];
    auto r = [](double v) { return text::format_double(v); };
    auto i = [](long long v) { return std::to_string(v); };
    return {
        {"schema_version", i(kConfigSchemaVersion)},
        {"station_files", files},
        {"train_year", i(train_year)},
        {"calibration_year", i(calibration_year)},
        {"test_year", i(test_year)},
        {"tau", r(tau)},
        {"alpha", r(alpha)},
        {"lag_days", i(lag_days)},
        {"target_hour", i(target_hour)},
        {"hour_tolerance", i(hour_tolerance)},
        {"shrinkage", r(boost.shrinkage)},
        {"interaction_depth", i(boost.interaction_depth)},
        {"min_obs_in_node", i(boost.min_obs_in_node)},
        {"max_iterations", i(boost.max_iterations)},
        {"eval_stride", i(boost.eval_stride)},
        {"keep_all_trees", flag(boost.keep_all_trees)},
        {"qrf_trees", i(qrf.n_trees)},
        {"qrf_min_node_size", i(qrf.min_node_size)},
        {"qrf_features_per_split", i(qrf.features_per_split)},
        {"qrf_bootstrap", flag(qrf.bootstrap)},
        {"seed", std::to_string(seed)},
        {"out_dir", out_dir},
        {"ljung_box_lags", i(static_cast<long long>(calibration.ljung_box_lags))},
        {"whiteness_level", r(calibration.whiteness_level)},
        {"min_regime_innovations", i(static_cast<long long>(calibration.min_regime_innovations))},
        {"recenter_scores", flag(calibration.recenter_scores)},
        {"rescale_scores", flag(calibration.rescale_scores)},
        {"interval_mode", conformal::to_string(interval_mode)},
        {"n_bins", i(n_bins)},
        {"pd_grid_size", i(pd_grid_size)},
    };
}

std::string PipelineConfig::to_text() const {
    std::string out;
    for (const auto& [k, v] : entries()) out += k + "=" + v + "\n";
    return out;
}

PipelineConfig parse_config(std::string_view text, const std::string& base_dir) {
    PipelineConfig cfg;
    std::set<std::string, std::less<>> seen;
    std::size_t line_no = 0;
    for (auto raw : text::split(text, '\n')) {
        ++line_no;
        auto line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = text::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
        }
        const auto key = text::trim(line.substr(0, eq));
        if (!seen.insert(std::string(key)).second) throw ConfigError("config key '" + std::string(key) + "' repeated");
        cfg.set(key, line.substr(eq + 1));
    }
    if (!seen.contains("schema_version")) throw ConfigError("config must declare schema_version");
    if (!base_dir.empty()) {
        for (auto& f : cfg.station_files) {
            const std::filesystem::path p(f);
            if (p.is_relative()) f = (std::filesystem::path(base_dir) / p).lexically_normal().string();
        }
        const std::filesystem::path out(cfg.out_dir);
        if (out.is_relative()) cfg.out_dir = (std::filesystem::path(base_dir) / out).lexically_normal().string();
    }
    cfg.validate();
    return cfg;
}

PipelineConfig load_config(const std::string& path) {
    const auto text = tables::read_text_file(path);
    auto dir = std::filesystem::path(path).parent_path().string();
    if (dir.empty()) dir = ".";
    return parse_config(text, dir);
}

}  // namespace meltcast
