#pragma once

#include <string>
#include <vector>

namespace c2f {

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

// Trailing moving average over the last `window` finite values; non-finite
// entries pass through untouched so they can be skipped downstream.
std::vector<double> moving_average(const std::vector<double>& y, int window);

// Self-contained SVG line chart: axes, ticks, one polyline per series and a
// legend. Non-finite points break the line. Deterministic output.
std::string line_chart_svg(const std::vector<Series>& series, const std::string& title,
                           const std::string& x_label, const std::string& y_label);

// Reads a headered CSV and extracts (first column, named column) pairs.
Series load_curve_csv(const std::string& path, const std::string& column);

void write_plot(const std::string& out_path, const std::vector<std::string>& curve_paths,
                const std::string& column, int window, const std::string& title);

}  // namespace c2f
