// gridmarg: capacity expansion, marginal emission rates and EV charging
// experiments from the command line.

#include <spdlog/spdlog.h>
#include <spdlog/sinks/stdout_color_sinks.h>

#include <iostream>

#include "CLI11.hpp"

#include "gridmarg/cli/commands.hpp"
#include "gridmarg/cli/sweep.hpp"

using namespace gridmarg;

int main(int argc, char** argv) {
    CLI::App app{"Capacity expansion and marginal emissions of EV charging"};
    app.require_subcommand(1);

    std::string out_dir = ".";
    std::string log_level = "warn";
    app.add_option("--out", out_dir, "Output directory")->capture_default_str();
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}))
        ->capture_default_str();

    std::string scenario;
    auto add_scenario = [&](CLI::App* sub) {
        sub->add_option("scenario", scenario, "Scenario JSON")->required();
        sub->fallthrough();
    };

    auto* solve = app.add_subcommand("solve", "Solve the planning model and write dispatch results");
    add_scenario(solve);
    std::string mode = "expansion";
    solve->add_option("--mode", mode)->check(CLI::IsMember({"expansion", "operational"}))->capture_default_str();

    auto* metrics = app.add_subcommand("metrics", "Emission rate metrics");
    add_scenario(metrics);
    std::string method = "aer", zone = "all";
    metrics->add_option("--method", method)->check(CLI::IsMember({"aer", "srme1", "srme2", "lrmer"}))
        ->capture_default_str();
    metrics->add_option("--zone", zone, "Zone id, all, or each-separately")->capture_default_str();

    auto* schedule = app.add_subcommand("schedule", "Schedule flexible charging against a signal");
    add_scenario(schedule);
    std::string signal = "cost", flex = "none";
    schedule->add_option("--signal", signal)->check(CLI::IsMember({"cost", "srme1", "srme2"}))->capture_default_str();
    schedule->add_option("--flex", flex, "none, delay<D>, window<N> or window<A>,<D>")->capture_default_str();

    auto* sweep = app.add_subcommand("sweep", "Run a scenario sweep");
    add_scenario(sweep);
    std::string spec;
    int parallel = cli::default_parallelism();
    sweep->add_option("spec", spec, "Sweep spec JSON")->required();
    sweep->add_option("--parallel", parallel, "Worker threads (default GRIDMARG_THREADS or 1)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    auto* validate = app.add_subcommand("validate", "Load and check a scenario");
    add_scenario(validate);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::kInputError;
    }

    auto logger = spdlog::stderr_color_mt("gridmarg");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::from_str(log_level));

    const std::filesystem::path out = out_dir;
    if (solve->parsed()) {
        return cli::cmd_solve({scenario,
                               mode == "expansion" ? PlanningMode::CapacityExpansion : PlanningMode::OperationalFixed,
                               out},
                              std::cout, std::cerr);
    }
    if (metrics->parsed())
        return cli::cmd_metrics({scenario, cli::metric_method_from_string(method), zone, out}, std::cout, std::cerr);
    if (schedule->parsed()) {
        FlexMode mode_flex;
        try {
            mode_flex = FlexMode::parse(flex);
        } catch (const InputError& e) {
            std::cerr << "error: " << e.what() << '\n';
            return cli::kInputError;
        }
        return cli::cmd_schedule({scenario, signal, mode_flex, out}, std::cout, std::cerr);
    }
    if (sweep->parsed()) return cli::cmd_sweep({scenario, spec, parallel, out}, std::cout, std::cerr);
    return cli::cmd_validate(scenario, std::cout, std::cerr);
}
