#include "meltcast/synth.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

#include "meltcast/errors.hpp"
#include "meltcast/text.hpp"

namespace meltcast::synth {

namespace {

double round1(double v) { return std::round(v * 10.0) / 10.0; }

// Magnus-formula relative humidity (percent) from air and dew-point temperature.
double relative_humidity(double temp, double dew) {
    constexpr double a = 17.625, b = 243.04;
    return 100.0 * std::exp(a * dew / (b + dew) - a * temp / (b + temp));
}

}  // namespace

std::vector<ingest::WeatherRecord> simulate_station(const StationOptions& o) {
    if (o.last_year < o.first_year) throw ConfigError("simulation year range is empty");
    if (!(o.anomaly_phi > -1.0 && o.anomaly_phi < 1.0)) throw ConfigError("anomaly_phi must lie in (-1, 1)");
    std::mt19937_64 rng(o.seed);
    std::normal_distribution<double> z(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    std::vector<ingest::WeatherRecord> out;
    double anomaly = 0.0;
    double wind_heading = 120.0;
    const Date end = last_of_year(o.last_year);
    for (Date d = first_of_year(o.first_year); d <= end; d = d.plus_days(1)) {
        anomaly = o.anomaly_phi * anomaly + o.anomaly_sd * z(rng);
        const double phase = 2.0 * std::numbers::pi * (d.day_of_year() - 20) / days_in_year(d.year());
        const double t14 = o.mean_temp - o.seasonal_amplitude * std::cos(phase) + anomaly;
        wind_heading = std::fmod(wind_heading + 25.0 * z(rng) + 360.0, 360.0);
        const double speed_base = std::max(0.0, 4.5 + 0.15 * anomaly + 2.0 * z(rng));
        const double spread_base = std::fabs(2.5 + 1.2 * z(rng));
        const bool drop_afternoon = u(rng) < o.missing_day_rate;

        for (int h = 0; h < 24; ++h) {
            if (drop_afternoon && h >= 12 && h <= 16) continue;
            ingest::WeatherRecord r;
            r.date = d;
            r.hour = h;
            const double temp = t14 + 1.5 * std::cos(2.0 * std::numbers::pi * (h - 14) / 24.0) + 0.3 * z(rng);
            const double dew = temp - std::fabs(spread_base + 0.3 * z(rng));
            const double dir = std::fmod(wind_heading + 10.0 * z(rng) + 720.0, 360.0);
            const double speed = std::max(0.0, speed_base + 0.5 * z(rng));
            r.air_temp = round1(temp);
            r.dew_point = round1(dew);
            r.wind_dir = std::fmod(std::round(dir), 360.0);
            r.wind_speed = round1(speed);
            r.rel_humidity = std::min(100.0, std::round(relative_humidity(*r.air_temp, *r.dew_point)));
            if (u(rng) < 0.05) r.pressure = round1(1010.0 + 8.0 * z(rng));
            for (auto* cell : {&r.air_temp, &r.wind_dir, &r.wind_speed, &r.dew_point, &r.rel_humidity}) {
                if (u(rng) < o.missing_cell_rate) cell->reset();
            }
            out.push_back(r);
        }
    }
    return out;
}

void write_station_csv(const std::vector<ingest::WeatherRecord>& records, std::ostream& out) {
    out << "date,hour,air_temp,wind_dir,wind_speed,dew_point,rel_humidity,pressure,visibility\n";
    auto cell = [](const std::optional<double>& v) { return v ? text::format_double(*v) : std::string("M"); };
    for (const auto& r : records) {
        out << r.date.iso() << ',' << r.hour << ',' << cell(r.air_temp) << ',' << cell(r.wind_dir) << ','
            << cell(r.wind_speed) << ',' << cell(r.dew_point) << ',' << cell(r.rel_humidity) << ',' << cell(r.pressure)
            << ',' << (r.visibility ? text::format_double(*r.visibility) : std::string()) << '\n';
    }
}

}  // namespace meltcast::synth
