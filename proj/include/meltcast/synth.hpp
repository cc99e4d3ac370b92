#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "meltcast/ingest.hpp"

namespace meltcast::synth {

/// Hourly station records for an Arctic-like climate: a seasonal 2 p.m.
/// temperature cycle plus an AR(1) weather anomaly, with wind, dew point
/// and humidity derived consistently. Pressure is mostly reported as `M`
/// and visibility is left blank, as in the real station export.
struct StationOptions {
    int first_year = 2021;
    int last_year = 2024;
    std::uint64_t seed = 0;
    double mean_temp = -6.0;
    double seasonal_amplitude = 10.0;
    double anomaly_phi = 0.8;
    double anomaly_sd = 2.0;  // innovation standard deviation, degC
    double missing_day_rate = 0.01;
    double missing_cell_rate = 0.01;
};

[[nodiscard]] std::vector<ingest::WeatherRecord> simulate_station(const StationOptions& options);

/// Writes records in the station CSV layout read by ingest::parse_records:
/// date,hour,air_temp,wind_dir,wind_speed,dew_point,rel_humidity,pressure,visibility
void write_station_csv(const std::vector<ingest::WeatherRecord>& records, std::ostream& out);

}  // namespace meltcast::synth
