#include "nsl/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace nsl {

std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

CsvBuilder::CsvBuilder(const FileStamp& stamp, const std::vector<std::string>& header)
    : n_cols_(header.size()) {
    body_ += "# tool: ";
    body_ += kToolVersion;
    body_ += "\n# config: ";
    body_ += stamp.config_hash;
    body_ += "\n";
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i > 0) {
            body_ += ",";
        }
        body_ += header[i];
    }
    body_ += "\n";
}

void CsvBuilder::add_row(const std::vector<std::string>& cells) {
    if (cells.size() != n_cols_) {
        throw std::invalid_argument("CsvBuilder: row width does not match header");
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i > 0) {
            body_ += ",";
        }
        body_ += cells[i];
    }
    body_ += "\n";
}

namespace {

constexpr double kWidth = 960.0;
constexpr double kHeight = 540.0;
constexpr double kLeft = 72.0;
constexpr double kRight = 24.0;
constexpr double kTop = 44.0;
constexpr double kBottom = 56.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

struct AxisTicks {
    double lo = 0.0;
    double hi = 1.0;
    std::vector<double> ticks;
};

// Expands [lo, hi] to multiples of a 1-2-5 step so the labels stay short.
AxisTicks nice_axis(double lo, double hi) {
    if (!(hi > lo)) {
        lo -= 1.0;
        hi += 1.0;
    }
    const double raw_step = (hi - lo) / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw_step)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (mag * m >= raw_step) {
            step = mag * m;
            break;
        }
    }
    AxisTicks out;
    out.lo = std::floor(lo / step) * step;
    out.hi = std::ceil(hi / step) * step;
    for (double v = out.lo; v <= out.hi + 0.5 * step; v += step) {
        // Snap near-zero accumulation error so labels print as exact zeros.
        out.ticks.push_back(std::abs(v) < 1e-9 * step ? 0.0 : v);
    }
    return out;
}

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string line_chart_svg(const FileStamp& stamp, const std::string& title,
                           const std::string& x_label, const std::string& y_label,
                           const std::vector<Series>& series) {
    double xlo = 0.0, xhi = 1.0, ylo = 0.0, yhi = 1.0;
    bool first = true;
    for (const Series& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (first) {
                xlo = xhi = s.x[i];
                ylo = yhi = s.y[i];
                first = false;
            }
            xlo = std::min(xlo, s.x[i]);
            xhi = std::max(xhi, s.x[i]);
            ylo = std::min(ylo, s.y[i]);
            yhi = std::max(yhi, s.y[i]);
        }
    }
    const AxisTicks xa = nice_axis(xlo, xhi);
    const AxisTicks ya = nice_axis(ylo, yhi);
    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    auto px = [&](double v) { return kLeft + (v - xa.lo) / (xa.hi - xa.lo) * plot_w; };
    auto py = [&](double v) { return kTop + (1.0 - (v - ya.lo) / (ya.hi - ya.lo)) * plot_h; };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 960 540\">\n";
    svg += "<!-- tool: ";
    svg += kToolVersion;
    svg += " | config: " + stamp.config_hash + " -->\n";
    svg += "<rect width=\"960\" height=\"540\" fill=\"white\"/>\n";
    svg += "<text x=\"480\" y=\"26\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"17\">" +
           escape_xml(title) + "</text>\n";

    for (double t : xa.ticks) {
        const double x = px(t);
        svg += "<line x1=\"" + format_number(x) + "\" y1=\"" + format_number(kTop) + "\" x2=\"" +
               format_number(x) + "\" y2=\"" + format_number(kTop + plot_h) +
               "\" stroke=\"#e0e0e0\"/>\n";
        svg += "<text x=\"" + format_number(x) + "\" y=\"" + format_number(kTop + plot_h + 20) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
               format_number(t) + "</text>\n";
    }
    for (double t : ya.ticks) {
        const double y = py(t);
        svg += "<line x1=\"" + format_number(kLeft) + "\" y1=\"" + format_number(y) + "\" x2=\"" +
               format_number(kLeft + plot_w) + "\" y2=\"" + format_number(y) +
               "\" stroke=\"#e0e0e0\"/>\n";
        svg += "<text x=\"" + format_number(kLeft - 8) + "\" y=\"" + format_number(y + 4) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" +
               format_number(t) + "</text>\n";
    }
    svg += "<rect x=\"" + format_number(kLeft) + "\" y=\"" + format_number(kTop) + "\" width=\"" +
           format_number(plot_w) + "\" height=\"" + format_number(plot_h) +
           "\" fill=\"none\" stroke=\"#404040\"/>\n";
    svg += "<text x=\"" + format_number(kLeft + plot_w / 2) + "\" y=\"" +
           format_number(kHeight - 14) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" +
           escape_xml(x_label) + "</text>\n";
    svg += "<text x=\"20\" y=\"" + format_number(kTop + plot_h / 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
           "transform=\"rotate(-90 20 " +
           format_number(kTop + plot_h / 2) + ")\">" + escape_xml(y_label) + "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const Series& s = series[si];
        const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
        std::string points;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (i > 0) {
                points += " ";
            }
            points += format_number(px(s.x[i])) + "," + format_number(py(s.y[i]));
        }
        svg += "<polyline fill=\"none\" stroke=\"";
        svg += color;
        svg += "\" stroke-width=\"1.8\" points=\"" + points + "\"/>\n";
        const double ly = kTop + 16 + 18 * static_cast<double>(si);
        svg += "<line x1=\"" + format_number(kLeft + plot_w - 150) + "\" y1=\"" +
               format_number(ly - 4) + "\" x2=\"" + format_number(kLeft + plot_w - 126) +
               "\" y2=\"" + format_number(ly - 4) + "\" stroke=\"";
        svg += color;
        svg += "\" stroke-width=\"3\"/>\n";
        svg += "<text x=\"" + format_number(kLeft + plot_w - 120) + "\" y=\"" + format_number(ly) +
               "\" font-family=\"sans-serif\" font-size=\"12\">" + escape_xml(s.name) +
               "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

void write_text_file(const std::string& path, const std::string& content) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::filesystem::create_directories(p.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path);
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

bool file_exists(const std::string& path) { return std::filesystem::exists(path); }

}  // namespace nsl
