#pragma once

#include <filesystem>
#include <string>

#include "gridmarg/flex/scheduler.hpp"

namespace gridmarg {

/// schedule.csv: hour, zone, load, source, served_mw.
std::string schedule_csv(const ChargingSchedule& schedule);
void write_schedule_csv(const ChargingSchedule& schedule, const std::filesystem::path& path);
ChargingSchedule read_schedule_csv(const std::filesystem::path& path);

/// iteration_trace.csv: iteration, consequential_tco2, rel_change,
/// schedule_delta_norm, proxy_before, proxy_after. rel_change is empty for
/// the starting schedule.
std::string iteration_trace_csv(const IterationTrace& trace);
void write_iteration_trace_csv(const IterationTrace& trace, const std::filesystem::path& path);

}  // namespace gridmarg
