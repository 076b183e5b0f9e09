// CSV/JSON emission with a fixed schema: floats at 17 significant digits so
// identical configs reproduce byte-identical files.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "blayer/grid.hpp"

namespace blayer {

inline constexpr int kSchemaVersion = 1;

std::string format_g17(double v);

struct CsvWriter {
    explicit CsvWriter(std::vector<std::string> columns);
    void row(const std::vector<double>& values);
    void row_mixed(const std::vector<std::string>& values);
    /// Throws with exit-code-2 semantics (I/O) when the path is unwritable.
    void write(const std::filesystem::path& path) const;
    std::string str() const;

  private:
    std::vector<std::string> columns_;
    std::vector<std::string> lines_;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Long-format dump of a node field: columns x,y,value.
void write_field_csv(const std::filesystem::path& path, const Field2D& f);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace blayer
