#include "c2f/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "c2f/common.hpp"

namespace c2f {
namespace {

constexpr double kWidth = 800, kHeight = 480;
constexpr double kLeft = 70, kRight = 30, kTop = 50, kBottom = 55;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

std::string xml_escape(const std::string& s) {
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

}  // namespace

std::vector<double> moving_average(const std::vector<double>& y, int window) {
    if (window < 1) throw ConfigError("plot: window must be >= 1");
    std::vector<double> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (!std::isfinite(y[i])) {
            out[i] = y[i];
            continue;
        }
        double acc = 0.0;
        int n = 0;
        for (std::size_t j = i >= static_cast<std::size_t>(window) ? i - window + 1 : 0;
             j <= i; ++j) {
            if (!std::isfinite(y[j])) continue;
            acc += y[j];
            ++n;
        }
        out[i] = acc / n;
    }
    return out;
}

std::string line_chart_svg(const std::vector<Series>& series, const std::string& title,
                           const std::string& x_label, const std::string& y_label) {
    if (series.empty()) throw EmptyError("plot: no series");
    double xmin = HUGE_VAL, xmax = -HUGE_VAL, ymin = HUGE_VAL, ymax = -HUGE_VAL;
    for (const Series& s : series) {
        if (s.x.size() != s.y.size())
            throw DimensionError("plot: series " + s.name + " has ragged columns");
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    }
    if (!(xmin <= xmax)) throw EmptyError("plot: no finite points");
    if (xmax == xmin) xmax = xmin + 1.0;
    if (ymax == ymin) {
        ymax += 0.5;
        ymin -= 0.5;
    }
    const double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    auto px = [&](double v) { return kLeft + (v - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double v) { return kTop + ph - (v - ymin) / (ymax - ymin) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
       << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight
       << "\">\n";
    os << "<rect width=\"" << kWidth << "\" height=\"" << kHeight
       << "\" fill=\"white\"/>\n";
    os << "<text x=\"" << kWidth / 2 << "\" y=\"28\" text-anchor=\"middle\" "
          "font-family=\"sans-serif\" font-size=\"17\">"
       << xml_escape(title) << "</text>\n";

    // frame and ticks
    os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw
       << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"#333\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double fx = xmin + (xmax - xmin) * i / 5.0;
        const double fy = ymin + (ymax - ymin) * i / 5.0;
        os << "<line x1=\"" << num(px(fx)) << "\" y1=\"" << kTop + ph << "\" x2=\""
           << num(px(fx)) << "\" y2=\"" << kTop + ph + 5 << "\" stroke=\"#333\"/>\n";
        os << "<text x=\"" << num(px(fx)) << "\" y=\"" << kTop + ph + 20
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
           << tick_label(fx) << "</text>\n";
        os << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << num(py(fy)) << "\" x2=\""
           << kLeft << "\" y2=\"" << num(py(fy)) << "\" stroke=\"#333\"/>\n";
        os << "<text x=\"" << kLeft - 9 << "\" y=\"" << num(py(fy) + 4)
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">"
           << tick_label(fy) << "</text>\n";
    }
    os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 12
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
       << xml_escape(x_label) << "</text>\n";
    os << "<text x=\"18\" y=\"" << kTop + ph / 2
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
          "transform=\"rotate(-90 18 "
       << kTop + ph / 2 << ")\">" << xml_escape(y_label) << "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const Series& s = series[si];
        const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
        std::string points;
        bool open = false;
        auto flush = [&] {
            if (open && !points.empty())
                os << "<polyline fill=\"none\" stroke=\"" << color
                   << "\" stroke-width=\"1.8\" points=\"" << points << "\"/>\n";
            points.clear();
            open = false;
        };
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
                flush();
                continue;
            }
            points += num(px(s.x[i])) + "," + num(py(s.y[i])) + " ";
            open = true;
        }
        flush();
        // legend entry
        const double ly = kTop + 16 + 18 * static_cast<double>(si);
        os << "<line x1=\"" << kLeft + pw - 150 << "\" y1=\"" << ly << "\" x2=\""
           << kLeft + pw - 122 << "\" y2=\"" << ly << "\" stroke=\"" << color
           << "\" stroke-width=\"2.5\"/>\n";
        os << "<text x=\"" << kLeft + pw - 115 << "\" y=\"" << ly + 4
           << "\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(s.name)
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

Series load_curve_csv(const std::string& path, const std::string& column) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError(path + ": empty curve file");
    std::vector<std::string> headers;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) headers.push_back(cell);
    }
    int col = -1;
    for (std::size_t i = 0; i < headers.size(); ++i)
        if (headers[i] == column) col = static_cast<int>(i);
    if (col < 0) throw ConfigError(path + ": no column named " + column);

    Series s;
    s.name = std::filesystem::path(path).stem().string();
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (static_cast<int>(cells.size()) <= col)
            throw IoError(path + ": short row in curve file");
        s.x.push_back(std::strtod(cells[0].c_str(), nullptr));
        s.y.push_back(std::strtod(cells[col].c_str(), nullptr));
    }
    return s;
}

void write_plot(const std::string& out_path, const std::vector<std::string>& curve_paths,
                const std::string& column, int window, const std::string& title) {
    if (curve_paths.empty()) throw EmptyError("plot: no curve files");
    std::vector<Series> series;
    for (const std::string& p : curve_paths) {
        Series s = load_curve_csv(p, column);
        s.y = moving_average(s.y, window);
        series.push_back(std::move(s));
    }
    const std::string svg =
        line_chart_svg(series, title.empty() ? column : title, "step", column);
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw IoError("cannot write " + out_path);
    out << svg;
    if (!out.good()) throw IoError("short write to " + out_path);
}

}  // namespace c2f
