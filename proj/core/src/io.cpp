#include "blayer/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace blayer {

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void CsvWriter::row(const std::vector<double>& values) {
    if (values.size() != columns_.size())
        throw ConfigError("CsvWriter: column count mismatch");
    std::string line;
    for (size_t k = 0; k < values.size(); ++k) {
        if (k) line += ',';
        line += format_g17(values[k]);
    }
    lines_.push_back(std::move(line));
}

void CsvWriter::row_mixed(const std::vector<std::string>& values) {
    if (values.size() != columns_.size())
        throw ConfigError("CsvWriter: column count mismatch");
    std::string line;
    for (size_t k = 0; k < values.size(); ++k) {
        if (k) line += ',';
        line += values[k];
    }
    lines_.push_back(std::move(line));
}

std::string CsvWriter::str() const {
    std::ostringstream os;
    for (size_t k = 0; k < columns_.size(); ++k) {
        if (k) os << ',';
        os << columns_[k];
    }
    os << '\n';
    for (const auto& l : lines_) os << l << '\n';
    return os.str();
}

void CsvWriter::write(const std::filesystem::path& path) const {
    write_text(path, str());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path.string());
    os << text;
    if (!os) throw IoError("write failed: " + path.string());
}

void write_field_csv(const std::filesystem::path& path, const Field2D& f) {
    if (f.centering != Centering::Node)
        throw ConfigError("write_field_csv: node centering expected");
    CsvWriter csv({"x", "y", "value"});
    for (int i = 0; i < f.rows; ++i)
        for (int j = 0; j < f.cols; ++j)
            csv.row({f.grid->x[i], f.grid->y[j], f(i, j)});
    csv.write(path);
}

}  // namespace blayer
