#include "gridmarg/cli/commands.hpp"

#include <spdlog/spdlog.h>

#include <limits>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "gridmarg/flex/export.hpp"
#include "gridmarg/flex/scheduler.hpp"
#include "gridmarg/grid/csv.hpp"
#include "gridmarg/grid/scenario_io.hpp"
#include "gridmarg/metrics/export.hpp"
#include "gridmarg/planner/export.hpp"

namespace gridmarg::cli {

using ordered_json = nlohmann::ordered_json;

int guarded(std::ostream& err, const std::function<int()>& body) {
    try {
        return body();
    } catch (const SolveFailed& e) {
        err << "error: " << e.what() << '\n';
        switch (e.status()) {
            case lp::Status::Infeasible: return kInfeasible;
            case lp::Status::Unbounded: return kUnbounded;
            default: return kComputationError;
        }
    } catch (const InfeasiblePerturbation& e) {
        err << "error: " << e.what() << '\n';
        return kInfeasible;
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kComputationError;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    }
}

std::vector<std::set<std::string>> target_sets(const GridModel& grid, const std::string& zone) {
    if (zone == "all") return {{}};
    if (zone == "each-separately") {
        std::vector<std::set<std::string>> out;
        for (const auto& z : grid.zones) out.push_back({z.id});
        return out;
    }
    if (grid.zone_index(zone) < 0) throw UnknownZone("unknown zone '" + zone + "'");
    return {{zone}};
}

std::string target_label(const std::set<std::string>& targets) {
    if (targets.empty()) return "all";
    std::string out;
    for (const auto& z : targets) out += (out.empty() ? "" : "+") + z;
    return out;
}

namespace {

DispatchResult solve_expansion(const GridModel& grid) { return solve_model(build_expansion_lp(grid)); }

std::string method_label(MetricMethod m) {
    switch (m) {
        case MetricMethod::Aer: return "aer";
        case MetricMethod::Srme1: return "srme1";
        case MetricMethod::Srme2: return "srme2";
        case MetricMethod::LrMer: return "lrmer";
    }
    return "?";
}

// Keeps only the rows of `zone` (or everything for "all" / "each-separately").
EmissionRateSeries select_zone(const EmissionRateSeries& rates, const std::string& zone) {
    if (zone == "all" || zone == "each-separately") return rates;
    const Index row = rates.zone_row(zone);
    if (row < 0) throw UnknownZone("unknown zone '" + zone + "'");
    EmissionRateSeries out = rates;
    out.zone_ids = {zone};
    out.rates = rates.rates.row(row);
    if (rates.rates_total_load_basis.size() > 0) out.rates_total_load_basis = rates.rates_total_load_basis.row(row);
    return out;
}

int metrics_aer(const MetricsArgs& a, const GridModel& grid, std::ostream& out) {
    const auto plan = solve_expansion(grid);
    ordered_json doc;
    doc["method"] = "aer";
    doc["system"] = average_emission_rate(grid, plan);
    ordered_json zones = ordered_json::object();
    for (const auto& z : grid.zones) {
        if (a.zone != "all" && a.zone != "each-separately" && a.zone != z.id) continue;
        try {
            zones[z.id] = average_emission_rate(grid, plan, z.id);
        } catch (const ZeroDemand&) {
            zones[z.id] = nullptr;
        }
    }
    if (zones.empty()) throw UnknownZone("unknown zone '" + a.zone + "'");
    doc["zones"] = zones;
    write_file_atomic(a.out / "aer.json", doc.dump(2) + "\n");
    out << "aer system " << format_double(doc["system"].get<double>()) << '\n';
    for (const auto& [id, v] : zones.items())
        out << "aer " << id << ' ' << (v.is_null() ? std::string("n/a") : format_double(v.get<double>())) << '\n';
    return kOk;
}

int metrics_srme(const MetricsArgs& a, const GridModel& grid, std::ostream& out) {
    const auto plan = solve_expansion(grid);
    spdlog::info("base expansion solved, cost {}", plan.total_cost);
    EmissionRateSeries rates;
    if (a.method == MetricMethod::Srme1) {
        std::vector<std::string> zones;
        if (a.zone != "all" && a.zone != "each-separately") zones.push_back(a.zone);
        rates = srme_uniform(grid, plan.capacity, zones);
    } else {
        rates = select_zone(srme_dual(grid, plan.capacity), a.zone);
    }
    write_file_atomic(a.out / "srme.csv", rates_csv(rates));
    for (std::size_t z = 0; z < rates.zone_ids.size(); ++z) {
        const auto row = rates.rates.row(static_cast<Index>(z));
        out << method_label(a.method) << ' ' << rates.zone_ids[z] << " mean " << format_double(row.mean()) << " min "
            << format_double(row.minCoeff()) << " max " << format_double(row.maxCoeff()) << '\n';
    }
    return kOk;
}

int metrics_lrmer(const MetricsArgs& a, const GridModel& grid, std::ostream& out) {
    const auto sets = target_sets(grid, a.zone);
    const ScaleEV perturbation{grid.config.perturbation_fraction};
    int done = 0;
    for (const auto& targets : sets) {
        LongRunOptions opts;
        opts.target_zones = targets;
        ConsequentialReport report;
        try {
            report = long_run_mer(grid, perturbation, opts);
        } catch (const DegenerateDelta& e) {
            // A zone without EV load has nothing to perturb; others may still.
            if (sets.size() == 1) throw;
            out << "lrmer " << target_label(targets) << " n/a\n";
            spdlog::warn("zone {}: {}", target_label(targets), e.what());
            continue;
        }
        ++done;
        const std::string name =
            a.zone == "each-separately" ? "consequential_" + target_label(targets) + ".json" : "consequential.json";
        write_file_atomic(a.out / name, consequential_json(report));
        out << "lrmer " << target_label(targets) << ' ' << format_double(report.lr_mer) << '\n';
    }
    if (done == 0) throw DegenerateDelta("no zone has enough EV load for a long-run rate");
    return kOk;
}

ordered_json comparison_rows(const ConsequentialReport& cost, const ConsequentialReport& chosen,
                             std::ostringstream& csv) {
    csv << "metric,cost_signal,selected_signal,delta\n";
    auto row = [&](const std::string& metric, double a, double b) {
        csv << metric << ',' << format_double(a) << ',' << format_double(b) << ',' << format_double(b - a) << '\n';
    };
    row("consequential_emissions_tco2", cost.consequential_emissions(), chosen.consequential_emissions());
    row("lr_mer", cost.lr_mer, chosen.lr_mer);
    row("delta_demand_mwh", cost.delta_demand_mwh, chosen.delta_demand_mwh);
    row("base_total_cost", cost.base_total_cost, chosen.base_total_cost);
    row("base_total_emissions_tco2", cost.base_total_emissions, chosen.base_total_emissions);
    row("pert_total_cost", cost.pert_total_cost, chosen.pert_total_cost);
    row("pert_total_emissions_tco2", cost.pert_total_emissions, chosen.pert_total_emissions);
    // Both reports come from the same grid, so the technology lists line up.
    for (std::size_t i = 0; i < cost.capacity_deltas.size() && i < chosen.capacity_deltas.size(); ++i) {
        row("new_mw:" + cost.capacity_deltas[i].technology, cost.capacity_deltas[i].new_mw,
            chosen.capacity_deltas[i].new_mw);
        row("retired_mw:" + cost.capacity_deltas[i].technology, cost.capacity_deltas[i].retired_mw,
            chosen.capacity_deltas[i].retired_mw);
    }
    for (std::size_t i = 0; i < cost.generation_deltas.size() && i < chosen.generation_deltas.size(); ++i)
        row("generation_mwh:" + cost.generation_deltas[i].first, cost.generation_deltas[i].second,
            chosen.generation_deltas[i].second);
    if (cost.per_ev && chosen.per_ev)
        row("tco2_per_1000_ev", cost.per_ev->tco2_per_1000_ev, chosen.per_ev->tco2_per_1000_ev);

    ordered_json summary;
    summary["consequential_emissions_delta_tco2"] = chosen.consequential_emissions() - cost.consequential_emissions();
    summary["lr_mer_delta"] = chosen.lr_mer - cost.lr_mer;
    if (cost.per_ev && chosen.per_ev)
        summary["tco2_per_1000_ev_delta"] = chosen.per_ev->tco2_per_1000_ev - cost.per_ev->tco2_per_1000_ev;
    else
        summary["tco2_per_1000_ev_delta"] = nullptr;
    return summary;
}

}  // namespace

MetricMethod metric_method_from_string(const std::string& s) {
    if (s == "aer") return MetricMethod::Aer;
    if (s == "srme1") return MetricMethod::Srme1;
    if (s == "srme2") return MetricMethod::Srme2;
    if (s == "lrmer") return MetricMethod::LrMer;
    throw ValidationError("unknown metric '" + s + "' (expected aer, srme1, srme2, lrmer)");
}

int cmd_solve(const SolveArgs& a, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const GridModel grid = load_scenario(a.scenario);
        spdlog::info("loaded {}: {} zones, {} hours", a.scenario.string(), grid.zones.size(), grid.horizon());
        const ExpansionModel model = a.mode == PlanningMode::CapacityExpansion
                                         ? build_expansion_lp(grid)
                                         : build_operational_lp(grid, CapacityDecisions::none(grid));
        spdlog::debug("model has {} variables", model.problem.num_variables());
        const DispatchResult result = solve_model(model);
        fs::create_directories(a.out);
        for (const auto& f : write_dispatch_result(grid, result, a.out)) spdlog::info("wrote {}", (a.out / f).string());
        out << "Optimal total_cost " << format_double(result.total_cost) << " total_emissions_tco2 "
            << format_double(result.total_emissions()) << '\n';
        return static_cast<int>(kOk);
    });
}

int cmd_metrics(const MetricsArgs& a, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const GridModel grid = load_scenario(a.scenario);
        fs::create_directories(a.out);
        switch (a.method) {
            case MetricMethod::Aer: return metrics_aer(a, grid, out);
            case MetricMethod::Srme1:
            case MetricMethod::Srme2: return metrics_srme(a, grid, out);
            case MetricMethod::LrMer: return metrics_lrmer(a, grid, out);
        }
        return static_cast<int>(kInputError);
    });
}

int cmd_schedule(const ScheduleArgs& a, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const GridModel grid = with_flex_mode(load_scenario(a.scenario), a.flex);
        const ScheduleSource source = schedule_source_from_string(a.signal);
        if (source == ScheduleSource::Fixed) throw ValidationError("signal must be cost, srme1 or srme2");

        const auto plan = solve_expansion(grid);
        const ChargingSchedule cost = schedule_from(grid, plan, ScheduleSource::CostMin);
        ScheduleResult chosen;
        if (source == ScheduleSource::CostMin) {
            chosen.schedule = cost;
            chosen.trace.records.push_back({0, operational_consequential(grid, plan.capacity, cost),
                                            std::numeric_limits<double>::quiet_NaN(), 0.0, 0.0, 0.0});
            chosen.trace.converged = true;
        } else {
            const SrmeMethod method =
                source == ScheduleSource::MinimizeSRME1 ? SrmeMethod::Uniform : SrmeMethod::Dual;
            chosen = schedule_min_srme(grid, plan.capacity, method);
            if (!chosen.trace.converged)
                spdlog::warn("no convergence after {} iterations", chosen.trace.iterations_used);
        }

        const ConsequentialReport chosen_report = evaluate_fixed_schedule(grid, chosen.schedule);
        const ConsequentialReport cost_report =
            source == ScheduleSource::CostMin ? chosen_report : evaluate_fixed_schedule(grid, cost);

        fs::create_directories(a.out);
        write_file_atomic(a.out / "schedule.csv", schedule_csv(chosen.schedule));
        write_file_atomic(a.out / "iteration_trace.csv", iteration_trace_csv(chosen.trace));
        write_file_atomic(a.out / "consequential.json", consequential_json(chosen_report));
        std::ostringstream csv;
        ordered_json summary;
        summary["signal"] = a.signal;
        summary["flex"] = a.flex.label();
        summary["converged"] = chosen.trace.converged;
        summary["iterations"] = chosen.trace.iterations_used;
        summary["comparison_vs_cost"] = comparison_rows(cost_report, chosen_report, csv);
        write_file_atomic(a.out / "comparison.csv", csv.str());
        write_file_atomic(a.out / "schedule_summary.json", summary.dump(2) + "\n");

        out << "schedule " << a.signal << ' ' << a.flex.label() << " converged "
            << (chosen.trace.converged ? "true" : "false") << " iterations " << chosen.trace.iterations_used
            << " consequential_tco2 " << format_double(chosen_report.consequential_emissions()) << " delta_vs_cost "
            << format_double(chosen_report.consequential_emissions() - cost_report.consequential_emissions()) << '\n';
        return static_cast<int>(kOk);
    });
}

int cmd_validate(const fs::path& scenario, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const GridModel grid = load_scenario(scenario);
        // Building the model checks every flexibility window against its rate cap.
        const ExpansionModel model = build_expansion_lp(grid);
        out << "ok " << grid.zones.size() << " zones, " << grid.generators.size() << " generators, "
            << grid.storage_units.size() << " storage units, " << grid.lines.size() << " lines, "
            << grid.flexible_loads.size() << " flexible loads, " << grid.horizon() << " hours, "
            << model.problem.num_variables() << " variables\n";
        return static_cast<int>(kOk);
    });
}

}  // namespace gridmarg::cli
