#include "meltcast/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <vector>

namespace meltcast::svg {

namespace {

constexpr double kWidth = 640, kHeight = 480;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 60;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", std::fabs(v) < 1e-12 ? 0.0 : v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void finish() {
        if (!std::isfinite(lo)) lo = 0, hi = 1;
        const double floor_span = 1e-6 * std::max({1.0, std::fabs(lo), std::fabs(hi)});
        if (!(hi - lo > floor_span)) {
            const double mid = lo + (hi - lo) / 2;
            lo = mid - floor_span / 2;
            hi = mid + floor_span / 2;
        }
        const double pad = (hi - lo) * 0.05;
        lo -= pad;
        hi += pad;
    }
};

/// Multiples of `step` inside [lo, hi].
std::vector<double> ticks(double lo, double hi, double step) {
    std::vector<double> out;
    const auto first = static_cast<long long>(std::ceil(lo / step));
    const auto last = static_cast<long long>(std::floor(hi / step));
    for (long long k = first; k <= last && out.size() < 50; ++k) out.push_back(static_cast<double>(k) * step);
    return out;
}

double nice_step(double span) {
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double r = raw / mag;
    return (r < 1.5 ? 1.0 : r < 3.0 ? 2.0 : r < 7.0 ? 5.0 : 10.0) * mag;
}

}  // namespace

std::string render(const Figure& fig) {
    Range rx, ry;
    for (const auto& s : fig.series) {
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            rx.add(s.x[i]);
            ry.add(s.y[i]);
            if (s.mark == Mark::kBars) ry.add(0.0);
        }
    }
    if (fig.hline) ry.add(*fig.hline);
    rx.finish();
    ry.finish();

    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    auto px = [&](double v) { return kLeft + (v - rx.lo) / (rx.hi - rx.lo) * pw; };
    auto py = [&](double v) { return kTop + (ry.hi - v) / (ry.hi - ry.lo) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" viewBox=\"0 0 640 480\" "
         "font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"640\" height=\"480\" fill=\"#ffffff\"/>\n";
    o << "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << escape(fig.title) << "</text>\n";
    o << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
      << "\" fill=\"none\" stroke=\"#333333\"/>\n";

    const double sx = nice_step(rx.hi - rx.lo), sy = nice_step(ry.hi - ry.lo);
    if (fig.category_labels.empty()) {
        for (double t : ticks(rx.lo, rx.hi, sx)) {
            o << "<line x1=\"" << num(px(t)) << "\" y1=\"" << num(kTop + ph) << "\" x2=\"" << num(px(t)) << "\" y2=\""
              << num(kTop + ph + 5) << "\" stroke=\"#333333\"/>\n";
            o << "<text x=\"" << num(px(t)) << "\" y=\"" << num(kTop + ph + 18) << "\" text-anchor=\"middle\">"
              << tick_label(t) << "</text>\n";
        }
    }
    for (double t : ticks(ry.lo, ry.hi, sy)) {
        o << "<line x1=\"" << num(kLeft - 5) << "\" y1=\"" << num(py(t)) << "\" x2=\"" << num(kLeft) << "\" y2=\""
          << num(py(t)) << "\" stroke=\"#333333\"/>\n";
        o << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(py(t) + 4) << "\" text-anchor=\"end\">"
          << tick_label(t) << "</text>\n";
    }
    o << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kHeight - 12) << "\" text-anchor=\"middle\">"
      << escape(fig.x_label) << "</text>\n";
    o << "<text x=\"16\" y=\"" << num(kTop + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << num(kTop + ph / 2) << ")\">" << escape(fig.y_label) << "</text>\n";

    if (fig.hline) {
        o << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(py(*fig.hline)) << "\" x2=\"" << num(kLeft + pw)
          << "\" y2=\"" << num(py(*fig.hline)) << "\" stroke=\"#888888\" stroke-dasharray=\"4 4\"/>\n";
    }

    std::size_t color = 0;
    for (const auto& s : fig.series) {
        const char* c = kPalette[color++ % std::size(kPalette)];
        const auto n = std::min(s.x.size(), s.y.size());
        if (s.mark == Mark::kLine) {
            o << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < n; ++i) {
                if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) o << num(px(s.x[i])) << ',' << num(py(s.y[i])) << ' ';
            }
            o << "\"/>\n";
        } else if (s.mark == Mark::kBars) {
            const double bw = n > 0 ? pw / static_cast<double>(n) * 0.7 : 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
                const double top = std::min(py(s.y[i]), py(0.0)), bottom = std::max(py(s.y[i]), py(0.0));
                o << "<rect x=\"" << num(px(s.x[i]) - bw / 2) << "\" y=\"" << num(top) << "\" width=\"" << num(bw)
                  << "\" height=\"" << num(bottom - top) << "\" fill=\"" << c << "\"/>\n";
                if (i < fig.category_labels.size()) {
                    o << "<text x=\"" << num(px(s.x[i])) << "\" y=\"" << num(kTop + ph + 18)
                      << "\" text-anchor=\"middle\" font-size=\"10\">" << escape(fig.category_labels[i]) << "</text>\n";
                }
            }
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
                const bool fill = s.filled.empty() || (i < s.filled.size() && s.filled[i]);
                o << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\"" << num(py(s.y[i])) << "\" r=\"3\" stroke=\"" << c
                  << "\" fill=\"" << (fill ? c : "none") << "\"/>\n";
            }
        }
        if (!s.label.empty()) {
            const double ly = kTop + 14 + 16 * static_cast<double>(color - 1);
            o << "<text x=\"" << num(kLeft + pw - 6) << "\" y=\"" << num(ly) << "\" text-anchor=\"end\" fill=\"" << c
              << "\">" << escape(s.label) << "</text>\n";
        }
    }
    o << "</svg>\n";
    return o.str();
}

}  // namespace meltcast::svg
