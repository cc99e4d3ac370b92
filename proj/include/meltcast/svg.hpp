#pragma once

#include <optional>
#include <string>
#include <vector>

// Minimal standalone SVG charts. Fixed styling: 640x480 canvas, white
// background, generic "sans-serif" font, 12px labels, palette below.

namespace meltcast::svg {

enum class Mark { kPoints, kLine, kBars };

struct Series {
    std::vector<double> x;
    std::vector<double> y;
    std::string label;
    Mark mark = Mark::kPoints;
    /// Per-point fill for kPoints; hollow when false. Empty means all filled.
    std::vector<bool> filled;
};

struct Figure {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
    std::optional<double> hline;  // dashed horizontal reference
    std::vector<std::string> category_labels;  // kBars: one label per x
};

inline constexpr const char* kPalette[] = {"#1f4e79", "#c0392b", "#2e7d32", "#6a1b9a", "#e67e22"};

/// Non-finite points are skipped.
[[nodiscard]] std::string render(const Figure& figure);

}  // namespace meltcast::svg
