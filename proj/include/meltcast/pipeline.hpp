#pragma once

#include <functional>
#include <string>

#include "meltcast/config.hpp"

// Stage commands. Each reads its inputs from and writes its outputs to
// config.out_dir, then merges a section into out_dir/manifest.json.
//
//   ingest     -> features_train.csv features_calibration.csv features_test.csv
//   train      -> booster.mcb loss_curve.csv
//   calibrate  -> calibrator.mcc whiteness.json
//   forecast   -> regions.csv
//   evaluate   -> coverage.csv bins.csv importance.csv partial_dependence.csv
//                 fit.csv evaluation.json alpha.lock and *.svg figures
//   simulate   -> station_<year>.csv meltcast.conf

namespace meltcast::pipeline {

enum Warning : unsigned {
    kWarnWhiteness = 1u << 0,
    kWarnDegenerateRegime = 1u << 1,
    kWarnEarlyStopping = 1u << 2,
    kWarnIntervalSwap = 1u << 3,
};

enum class LogLevel { kInfo = 0, kWarning = 1, kError = 2 };
using Logger = std::function<void(LogLevel, const std::string&)>;

struct RunOptions {
    /// Allows evaluate/forecast at a new alpha on an already evaluated test set.
    bool override_alpha_change = false;
    Logger log;
};

/// Each returns a Warning bitmask; failures throw meltcast::Error.
unsigned run_ingest(const PipelineConfig& config, const RunOptions& options = {});
unsigned run_train(const PipelineConfig& config, const RunOptions& options = {});
unsigned run_calibrate(const PipelineConfig& config, const RunOptions& options = {});
unsigned run_forecast(const PipelineConfig& config, const RunOptions& options = {});
unsigned run_evaluate(const PipelineConfig& config, const RunOptions& options = {});
/// Writes synthetic station files for the years the config needs plus the
/// preceding year, and a config pointing at them.
unsigned run_simulate(const PipelineConfig& config, const RunOptions& options = {});

[[nodiscard]] std::string file_checksum(const std::string& path);

}  // namespace meltcast::pipeline
