#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "meltcast/conformal.hpp"
#include "meltcast/gbm.hpp"
#include "meltcast/qrf.hpp"

namespace meltcast {

inline constexpr int kConfigSchemaVersion = 1;

/// Pipeline settings. With the defaults, a config
/// holding only `schema_version=1` and `station_files` runs the full workflow.
///
/// File format: one `key=value` per line, `#` starts a comment, blank lines
/// ignored, keys unique. `station_files` is a comma-separated list; relative
/// paths resolve against the config file's directory.
struct PipelineConfig {
    std::vector<std::string> station_files;
    int train_year = 2023;
    int calibration_year = 2022;
    int test_year = 2024;
    double tau = 0.60;
    double alpha = 0.20;
    int lag_days = 14;
    int target_hour = 14;
    int hour_tolerance = 1;
    gbm::BoostParams boost;
    qrf::QRFParams qrf;
    conformal::CalibrationOptions calibration;
    conformal::IntervalMode interval_mode = conformal::IntervalMode::kAdaptive;
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    int n_bins = 20;
    int pd_grid_size = 50;

    /// Throws ConfigError.
    void validate() const;

    /// Applies one `key=value` setting; ConfigError on unknown keys or bad values.
    void set(std::string_view key, std::string_view value);

    /// Canonical (key, value) pairs in a fixed order. Feeding them back
    /// through set() reproduces this config.
    [[nodiscard]] std::vector<std::pair<std::string, std::string>> entries() const;
    [[nodiscard]] std::string to_text() const;
};

[[nodiscard]] PipelineConfig parse_config(std::string_view text, const std::string& base_dir = "");
[[nodiscard]] PipelineConfig load_config(const std::string& path);

}  // namespace meltcast
