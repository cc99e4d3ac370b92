#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "meltcast/conformal.hpp"
#include "meltcast/gbm.hpp"
#include "meltcast/ingest.hpp"
#include "meltcast/report.hpp"

// CSV artifacts. All files are UTF-8, comma separated, '\n' line endings,
// one header row. Reals use the shortest round-trip decimal form; a missing
// value is an empty cell.

namespace meltcast::tables {

/// date,day_counter,lag_temp,lag_wind_cos,lag_wind_sin,lag_wind_speed,
/// lag_dew_point,lag_rel_humidity,response
void write_feature_table(const ingest::FeatureTable& table, std::ostream& out);
[[nodiscard]] ingest::FeatureTable read_feature_table(std::istream& in, ingest::YearRole role, int year,
                                                      int lag_days);

/// date,forecast,regime,lower,upper,q_lo,q_hi,melting_confidence
void write_regions(std::span<const conformal::PredictionRegion> regions, double alpha, std::ostream& out);
[[nodiscard]] std::vector<conformal::PredictionRegion> read_regions(std::istream& in);

/// iteration,calibration_loss,training_loss
void write_loss_curve(const gbm::TrainedBooster& booster, std::ostream& out);

/// feature,gain,percent
void write_importance(std::span<const report::ImportanceEntry> rows, std::ostream& out);

/// predictor,value,response,loess
void write_partial_dependence(const report::PartialDependenceCurve& curve, std::span<const double> smooth,
                              std::ostream& out);

/// bin,lower_edge,upper_edge,count,mean_forecast,pct_exceeding,filled,degenerate
void write_bins(const report::BinExceedance& bins, std::ostream& out);

/// scope,count,covered,coverage,mean_halfwidth,min_halfwidth,max_halfwidth
void write_coverage(const conformal::CoverageSummary& summary, std::ostream& out);

/// Whole-file helpers; IoError on failure.
[[nodiscard]] std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& contents);

}  // namespace meltcast::tables
