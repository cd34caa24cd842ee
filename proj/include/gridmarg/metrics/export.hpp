#pragma once

#include <filesystem>
#include <string>

#include "gridmarg/metrics/emissions.hpp"

namespace gridmarg {

/// srme.csv text: hour, zone, method, rate, the total-load basis rate (uniform
/// method only) and a 0/1 flag for hours whose base basis is degenerate.
std::string rates_csv(const EmissionRateSeries& rates);
void write_rates_csv(const EmissionRateSeries& rates, const std::filesystem::path& path);

/// Reads rates_csv output back. Rows of one method only.
EmissionRateSeries read_rates_csv(const std::filesystem::path& path);

std::string consequential_json(const ConsequentialReport& report);
void write_consequential_json(const ConsequentialReport& report, const std::filesystem::path& path);

}  // namespace gridmarg
