#pragma once

#include <filesystem>
#include <string>

#include "gridmarg/grid/model.hpp"

namespace gridmarg {

/// Loads and validates a scenario JSON document. Hourly series are either CSV
/// paths (relative to the document), inline arrays, or a scalar constant.
/// Throws ParseError, ValidationError, or MissingSeries.
GridModel load_scenario(const std::filesystem::path& path);

/// Parses scenario JSON text; `base_dir` resolves relative CSV paths.
GridModel parse_scenario(const std::string& json_text, const std::filesystem::path& base_dir);

/// Writes `scenario.json` plus one CSV per hourly series into `dir`.
/// Returns the path of the JSON document.
std::filesystem::path write_scenario(const GridModel& grid, const std::filesystem::path& dir);

}  // namespace gridmarg
