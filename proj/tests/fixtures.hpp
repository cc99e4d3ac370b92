#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "meltcast/dataset.hpp"
#include "meltcast/ingest.hpp"

namespace fixture {

inline std::vector<std::string> names(std::size_t k) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < k; ++i) out.push_back("x" + std::to_string(i));
    return out;
}

inline std::vector<std::string> model_names() {
    return {meltcast::ingest::kFeatureNames.begin(), meltcast::ingest::kFeatureNames.end()};
}

/// y = 5 sin(2 pi t / 365) + N(0, sd); feature 0 is t, the rest is noise.
inline meltcast::Dataset sine(std::size_t n, std::uint64_t seed, double sd = 1.0, std::size_t extra = 2,
                              int year = 2023) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    meltcast::Dataset ds;
    ds.feature_names = names(1 + extra);
    ds.features = meltcast::Matrix(0, 1 + extra);
    const auto start = meltcast::first_of_year(year);
    std::vector<double> row(1 + extra);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i + 1);
        row[0] = t;
        for (std::size_t k = 1; k <= extra; ++k) row[k] = z(rng);
        ds.features.append_row(row);
        ds.response.push_back(5.0 * std::sin(2.0 * std::numbers::pi * t / 365.0) + sd * z(rng));
        ds.dates.push_back(start.plus_days(static_cast<int>(i)));
    }
    return ds;
}

/// y = 2 x0 - x1 + N(0, 0.5) with three uniform features.
inline meltcast::Dataset linear(std::size_t n, std::uint64_t seed, int year = 2023) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    std::normal_distribution<double> z(0.0, 0.5);
    meltcast::Dataset ds;
    ds.feature_names = names(3);
    ds.features = meltcast::Matrix(0, 3);
    const auto start = meltcast::first_of_year(year);
    for (std::size_t i = 0; i < n; ++i) {
        const double row[3] = {u(rng), u(rng), u(rng)};
        ds.features.append_row(row);
        ds.response.push_back(2.0 * row[0] - row[1] + z(rng));
        ds.dates.push_back(start.plus_days(static_cast<int>(i)));
    }
    return ds;
}

/// Seven model-named features with a seasonal signal and iid noise; the
/// signal crosses zero so both regimes are populated.
inline meltcast::Dataset seasonal7(std::size_t n, std::uint64_t seed, int year, double sd = 1.0,
                                   double level = -1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    meltcast::Dataset ds;
    ds.feature_names = model_names();
    ds.features = meltcast::Matrix(0, 7);
    const auto start = meltcast::first_of_year(year);
    for (std::size_t i = 0; i < n; ++i) {
        const double day = static_cast<double>(i % 365 + 1);
        const double season = std::sin(2.0 * std::numbers::pi * (day - 100.0) / 365.0);
        const double lag_temp = 6.0 * season + z(rng);
        const double row[7] = {day, lag_temp, z(rng), z(rng), std::fabs(z(rng)) * 3.0, lag_temp - 2.0, 80 + 5 * z(rng)};
        ds.features.append_row(row);
        ds.response.push_back(level + 6.0 * season + sd * z(rng));
        ds.dates.push_back(start.plus_days(static_cast<int>(i)));
    }
    return ds;
}

/// Fresh empty directory under the system temp dir.
inline std::string temp_dir(const std::string& tag) {
    const auto p = std::filesystem::temp_directory_path() / ("meltcast_test_" + tag);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p.string();
}

}  // namespace fixture
