#pragma once

#include <string>
#include <vector>

#include "nsl/linalg.hpp"

namespace nsl {

inline constexpr const char* kToolVersion = "nsl 0.1.0";

// Shortest decimal representation that round-trips the exact double.
std::string format_number(double v);

// Identification stamp leading every emitted file: tool version plus the
// hash of the effective run configuration.
struct FileStamp {
    std::string config_hash;
};

class CsvBuilder {
public:
    CsvBuilder(const FileStamp& stamp, const std::vector<std::string>& header);
    void add_row(const std::vector<std::string>& cells);
    const std::string& str() const { return body_; }

private:
    std::string body_;
    std::size_t n_cols_;
};

struct Series {
    std::string name;
    Vector x;
    Vector y;
};

// Fixed-size 960x540 line chart with niced axis ticks and a small legend.
std::string line_chart_svg(const FileStamp& stamp, const std::string& title,
                           const std::string& x_label, const std::string& y_label,
                           const std::vector<Series>& series);

// Atomic-enough single-writer file emission: writes the whole content, throws
// on any stream failure.
void write_text_file(const std::string& path, const std::string& content);

bool file_exists(const std::string& path);

}  // namespace nsl
