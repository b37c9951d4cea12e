#pragma once

#include "gclaim/errors.hpp"

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

namespace gclaim {

/// Fixed numeric formatting for data files: %.12g, '.' decimal separator,
/// locale independent. Identical inputs give byte-identical output.
inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

/// CSV writer, schema versioned through '#' comment lines, LF line endings,
/// no timestamps. Rows are written as given; callers pre-format cells.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& metadata,
              const std::vector<std::string>& columns)
        : out_(path, std::ios::binary) {
        if (!out_) throw ConfigError("cannot open output file '" + path + "'");
        out_ << "# schema=1\n";
        for (const auto& m : metadata) out_ << "# " << m << "\n";
        for (std::size_t i = 0; i < columns.size(); ++i)
            out_ << columns[i] << (i + 1 < columns.size() ? "," : "");
        out_ << "\n";
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i)
            out_ << cells[i] << (i + 1 < cells.size() ? "," : "");
        out_ << "\n";
    }

    void comment(const std::string& line) { out_ << "# " << line << "\n"; }

private:
    std::ofstream out_;
};

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file '" + path + "'");
    out << content;
}

} // namespace gclaim
