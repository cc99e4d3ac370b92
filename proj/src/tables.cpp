#include "meltcast/tables.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>

#include "meltcast/errors.hpp"
#include "meltcast/text.hpp"

namespace meltcast::tables {

namespace {

std::string cell(double v) { return std::isnan(v) ? std::string() : text::format_double(v); }

std::string cell(const std::optional<double>& v) { return v ? cell(*v) : std::string(); }

class CsvReader {
public:
    CsvReader(std::istream& in, std::string_view expected_header, const char* what) : in_(in), what_(what) {
        std::string header;
        if (!next_line(header)) throw EmptyInputError(std::string(what) + " file is empty");
        if (header != expected_header) {
            throw FormatError(std::string(what) + " header mismatch: expected '" + std::string(expected_header) + "'");
        }
        width_ = text::split(expected_header, ',').size();
    }

    bool next(std::vector<std::string_view>& cells) {
        if (!next_line(line_)) return false;
        cells = text::split(line_, ',');
        if (cells.size() != width_) fail("expected " + std::to_string(width_) + " columns");
        return true;
    }

    double real(std::string_view s) {
        const auto v = text::parse_double(s);
        if (!v) fail("bad number '" + std::string(s) + "'");
        return *v;
    }

    std::optional<double> optional_real(std::string_view s) {
        if (text::trim(s).empty()) return std::nullopt;
        return real(s);
    }

    Date date(std::string_view s) {
        const auto d = Date::parse_iso(text::trim(s));
        if (!d) fail("bad date '" + std::string(s) + "'");
        return *d;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw FormatError(std::string(what_) + " line " + std::to_string(line_no_) + ": " + msg);
    }

private:
    bool next_line(std::string& line) {
        while (std::getline(in_, line)) {
            ++line_no_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line_no_ == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
            if (!text::trim(line).empty()) return true;
        }
        return false;
    }

    std::istream& in_;
    const char* what_;
    std::string line_;
    std::size_t width_ = 0;
    std::size_t line_no_ = 0;
};

constexpr std::string_view kFeatureHeader =
    "date,day_counter,lag_temp,lag_wind_cos,lag_wind_sin,lag_wind_speed,lag_dew_point,lag_rel_humidity,response";
constexpr std::string_view kRegionHeader = "date,forecast,regime,lower,upper,q_lo,q_hi,melting_confidence";

}  // namespace

void write_feature_table(const ingest::FeatureTable& table, std::ostream& out) {
    out << kFeatureHeader << '\n';
    for (const auto& r : table.rows) {
        out << r.date.iso() << ',' << r.day_counter << ',' << cell(r.lag_temp) << ',' << cell(r.lag_wind_cos) << ','
            << cell(r.lag_wind_sin) << ',' << cell(r.lag_wind_speed) << ',' << cell(r.lag_dew_point) << ','
            << cell(r.lag_rel_humidity) << ',' << cell(r.response) << '\n';
    }
}

ingest::FeatureTable read_feature_table(std::istream& in, ingest::YearRole role, int year, int lag_days) {
    CsvReader csv(in, kFeatureHeader, "feature table");
    ingest::FeatureTable t;
    t.role = role;
    t.year = year;
    t.lag_days = lag_days;
    std::vector<std::string_view> c;
    while (csv.next(c)) {
        ingest::FeatureRow r;
        r.date = csv.date(c[0]);
        const auto dc = text::parse_int(text::trim(c[1]));
        if (!dc) csv.fail("bad day_counter '" + std::string(c[1]) + "'");
        r.day_counter = static_cast<int>(*dc);
        r.lag_temp = csv.real(c[2]);
        r.lag_wind_cos = csv.real(c[3]);
        r.lag_wind_sin = csv.real(c[4]);
        r.lag_wind_speed = csv.real(c[5]);
        r.lag_dew_point = csv.real(c[6]);
        r.lag_rel_humidity = csv.real(c[7]);
        r.response = csv.real(c[8]);
        t.rows.push_back(r);
    }
    return t;
}

void write_regions(std::span<const conformal::PredictionRegion> regions, double alpha, std::ostream& out) {
    out << kRegionHeader << '\n';
    for (const auto& r : regions) {
        const auto melt = conformal::melting_confidence(r, alpha);
        out << r.date.iso() << ',' << cell(r.forecast) << ',' << conformal::to_string(r.regime) << ','
            << cell(r.lower) << ',' << cell(r.upper) << ',' << cell(r.q_lo) << ',' << cell(r.q_hi) << ','
            << (melt ? cell(melt->probability) : std::string()) << '\n';
    }
}

std::vector<conformal::PredictionRegion> read_regions(std::istream& in) {
    CsvReader csv(in, kRegionHeader, "regions");
    std::vector<conformal::PredictionRegion> out;
    std::vector<std::string_view> c;
    while (csv.next(c)) {
        conformal::PredictionRegion r;
        r.date = csv.date(c[0]);
        r.forecast = csv.real(c[1]);
        const auto regime = text::trim(c[2]);
        if (regime == "warm") {
            r.regime = conformal::Regime::kWarm;
        } else if (regime == "cool") {
            r.regime = conformal::Regime::kCool;
        } else {
            csv.fail("bad regime '" + std::string(regime) + "'");
        }
        r.lower = csv.real(c[3]);
        r.upper = csv.real(c[4]);
        r.q_lo = csv.real(c[5]);
        r.q_hi = csv.real(c[6]);
        out.push_back(r);
    }
    return out;
}

void write_loss_curve(const gbm::TrainedBooster& booster, std::ostream& out) {
    out << "iteration,calibration_loss,training_loss\n";
    for (const auto& c : booster.loss_curve) {
        out << c.iteration << ',' << cell(c.calibration_loss) << ',' << cell(c.training_loss) << '\n';
    }
}

void write_importance(std::span<const report::ImportanceEntry> rows, std::ostream& out) {
    out << "feature,gain,percent\n";
    for (const auto& r : rows) out << r.feature << ',' << cell(r.gain) << ',' << cell(r.percent) << '\n';
}

void write_partial_dependence(const report::PartialDependenceCurve& curve, std::span<const double> smooth,
                              std::ostream& out) {
    out << "predictor,value,response,loess\n";
    for (std::size_t i = 0; i < curve.grid.size(); ++i) {
        out << curve.predictor << ',' << cell(curve.grid[i]) << ',' << cell(curve.values[i]) << ','
            << (i < smooth.size() ? cell(smooth[i]) : std::string()) << '\n';
    }
}

void write_bins(const report::BinExceedance& bins, std::ostream& out) {
    out << "bin,lower_edge,upper_edge,count,mean_forecast,pct_exceeding,filled,degenerate\n";
    for (const auto& b : bins.bins) {
        out << b.index << ',' << cell(b.lower_edge) << ',' << cell(b.upper_edge) << ',' << b.count << ','
            << cell(b.mean_forecast) << ',' << cell(b.pct_exceeding) << ',' << (b.filled ? 1 : 0) << ','
            << (bins.degenerate ? 1 : 0) << '\n';
    }
}

void write_coverage(const conformal::CoverageSummary& summary, std::ostream& out) {
    out << "scope,count,covered,coverage,mean_halfwidth,min_halfwidth,max_halfwidth\n";
    auto row = [&](const char* scope, const conformal::CoverageStats& s) {
        out << scope << ',' << s.count << ',' << s.covered << ',' << cell(s.coverage) << ',' << cell(s.mean_halfwidth)
            << ',' << cell(s.min_halfwidth) << ',' << cell(s.max_halfwidth) << '\n';
    };
    row("overall", summary.overall);
    row("warm", summary.by_regime[static_cast<std::size_t>(conformal::Regime::kWarm)]);
    row("cool", summary.by_regime[static_cast<std::size_t>(conformal::Regime::kCool)]);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << contents;
    out.flush();
    if (!out) throw IoError("failed while writing '" + path + "'");
}

}  // namespace meltcast::tables
