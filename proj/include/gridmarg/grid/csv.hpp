#pragma once

#include <filesystem>
#include <string>

#include "gridmarg/grid/model.hpp"

namespace gridmarg {

/// Reads an hourly series from a CSV file with header `hour,value`.
/// Hours must be consecutive and 0-based. Throws MissingSeries or ParseError.
Series read_series_csv(const std::filesystem::path& path);

void write_series_csv(const std::filesystem::path& path, const Series& series);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

/// Writes `contents` to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace gridmarg
