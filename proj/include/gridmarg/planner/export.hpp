#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gridmarg/planner/expansion.hpp"

namespace gridmarg {

/// Writes dispatch.csv, capacity.csv, emissions.csv, prices.csv and summary.json
/// into `dir`. Returns the file names written.
std::vector<std::string> write_dispatch_result(const GridModel& grid, const DispatchResult& result,
                                               const std::filesystem::path& dir);

/// The summary.json document as text.
std::string dispatch_summary_json(const GridModel& grid, const DispatchResult& result);

}  // namespace gridmarg
