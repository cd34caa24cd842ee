#include "gridmarg/cli/sweep.hpp"

#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "gridmarg/cli/commands.hpp"
#include "gridmarg/grid/csv.hpp"
#include "gridmarg/grid/scenario_io.hpp"
#include "gridmarg/metrics/export.hpp"

namespace gridmarg::cli {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

void SweepSpec::validate() const {
    auto positive = [](const std::vector<double>& v, const char* name) {
        if (v.empty()) throw ValidationError(std::string("sweep spec: '") + name + "' is empty");
        for (double x : v)
            if (!(x > 0.0)) throw ValidationError(std::string("sweep spec: '") + name + "' has a non-positive entry");
    };
    positive(ev_multipliers, "ev_multipliers");
    positive(renewable_capex_multipliers, "renewable_capex_multipliers");
    positive(gas_price_multipliers, "gas_price_multipliers");
    if (flexibility_modes.empty()) throw ValidationError("sweep spec: 'flexibility_modes' is empty");
    for (const auto& m : flexibility_modes)
        if (m != "scenario") FlexMode::parse(m);
}

SweepSpec parse_sweep_spec(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        // Byte offset to line number.
        const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
        const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n'));
        throw ParseError(std::string("sweep spec: ") + e.what(), line);
    }
    if (!doc.is_object()) throw ValidationError("sweep spec must be a JSON object");

    SweepSpec spec;
    try {
        for (const auto& [key, value] : doc.items()) {
            if (key == "ev_multipliers") spec.ev_multipliers = value.get<std::vector<double>>();
            else if (key == "renewable_capex_multipliers") spec.renewable_capex_multipliers = value.get<std::vector<double>>();
            else if (key == "gas_price_multipliers") spec.gas_price_multipliers = value.get<std::vector<double>>();
            else if (key == "flexibility_modes") spec.flexibility_modes = value.get<std::vector<std::string>>();
            else if (key == "target_zones") {
                if (value.is_string()) spec.target_zones = value.get<std::string>();
                else spec.target_zone_list = value.get<std::vector<std::string>>();
            } else throw ValidationError("sweep spec: unknown field '" + key + "'");
        }
    } catch (const json::type_error& e) {
        throw ValidationError(std::string("sweep spec: ") + e.what());
    }
    if (doc.contains("target_zones") && doc["target_zones"].is_array() && spec.target_zone_list.empty())
        throw ValidationError("sweep spec: 'target_zones' is empty");
    spec.validate();
    return spec;
}

std::vector<SweepRun> expand(const SweepSpec& spec, const std::vector<std::string>& zone_ids) {
    std::vector<std::string> targets = spec.target_zone_list;
    if (targets.empty()) {
        if (spec.target_zones == "each-separately") targets = zone_ids;
        else targets = {spec.target_zones};
    }
    std::vector<SweepRun> runs;
    for (double ev : spec.ev_multipliers)
        for (double capex : spec.renewable_capex_multipliers)
            for (double gas : spec.gas_price_multipliers)
                for (const auto& flex : spec.flexibility_modes)
                    for (const auto& target : targets) {
                        std::ostringstream id;
                        id << "run_" << std::setw(4) << std::setfill('0') << runs.size();
                        runs.push_back({id.str(), ev, capex, gas, flex, target});
                    }
    return runs;
}

int default_parallelism() {
    if (const char* env = std::getenv("GRIDMARG_THREADS")) {
        char* end = nullptr;
        const long n = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && n > 0) return static_cast<int>(n);
        spdlog::warn("ignoring GRIDMARG_THREADS='{}'", env);
    }
    return 1;
}

namespace {

std::string sha256_hex(const std::string& text) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return os.str();
}

std::string read_text(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot read '" + path.string() + "'");
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

struct RunOutcome {
    bool ok = false;
    std::string error;
    int exit_code = kOk;
    std::vector<std::string> outputs;
    std::string rows;  // long-format result lines
    double seconds = 0.0;
};

GridModel run_grid(const GridModel& base, const SweepRun& run) {
    GridModel g = apply_sensitivity(base, CostMultipliers{run.renewable_capex_multiplier, run.gas_price_multiplier});
    g.config.ev_penetration_multiplier *= run.ev_multiplier;
    if (run.flex != "scenario") g = with_flex_mode(g, FlexMode::parse(run.flex));
    return g;
}

std::string result_rows(const SweepRun& run, const ConsequentialReport& r) {
    std::ostringstream os;
    const std::string prefix = run.id + ',' + format_double(run.ev_multiplier) + ',' +
                               format_double(run.renewable_capex_multiplier) + ',' +
                               format_double(run.gas_price_multiplier) + ',' + run.flex + ',' + run.target + ',';
    auto row = [&](const std::string& metric, double v) { os << prefix << metric << ',' << format_double(v) << '\n'; };
    row("lr_mer", r.lr_mer);
    row("consequential_emissions_tco2", r.consequential_emissions());
    row("delta_demand_mwh", r.delta_demand_mwh);
    row("base_total_cost", r.base_total_cost);
    row("base_total_emissions_tco2", r.base_total_emissions);
    row("pert_total_cost", r.pert_total_cost);
    row("pert_total_emissions_tco2", r.pert_total_emissions);
    if (r.sr_attributed) {
        row("sr_attributed_tco2", *r.sr_attributed);
        row("sr_rate", *r.sr_attributed / r.delta_demand_mwh);
    }
    if (r.aer_attributed) {
        row("aer_attributed_tco2", *r.aer_attributed);
        row("aer_rate", *r.aer_attributed / r.delta_demand_mwh);
    }
    for (const auto& d : r.capacity_deltas) {
        row("new_mw:" + d.technology, d.new_mw);
        row("retired_mw:" + d.technology, d.retired_mw);
    }
    for (const auto& [tech, mwh] : r.generation_deltas) row("generation_mwh:" + tech, mwh);
    if (r.per_ev) {
        row("tco2_per_1000_ev", r.per_ev->tco2_per_1000_ev);
        row("pct_reduction_vs_icev", r.per_ev->icev.pct_reduction);
    }
    return os.str();
}

RunOutcome execute(const GridModel& base, const SweepRun& run, const fs::path& out) {
    RunOutcome o;
    const auto start = std::chrono::steady_clock::now();
    std::ostringstream err;
    o.exit_code = guarded(err, [&] {
        const GridModel g = run_grid(base, run);
        LongRunOptions opts;
        if (run.target != "all") {
            if (g.zone_index(run.target) < 0) throw UnknownZone("unknown zone '" + run.target + "'");
            opts.target_zones = {run.target};
        }
        const auto report = long_run_mer(g, ScaleEV{g.config.perturbation_fraction}, opts);
        const std::string file = "runs/" + run.id + "/consequential.json";
        write_file_atomic(out / file, consequential_json(report));
        o.outputs.push_back(file);
        o.rows = result_rows(run, report);
        return static_cast<int>(kOk);
    });
    o.ok = o.exit_code == kOk;
    o.error = err.str();
    while (!o.error.empty() && o.error.back() == '\n') o.error.pop_back();
    o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return o;
}

}  // namespace

int cmd_sweep(const SweepArgs& a, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const GridModel base = load_scenario(a.scenario);
        const std::string spec_text = read_text(a.spec);
        const SweepSpec spec = parse_sweep_spec(spec_text);
        std::vector<std::string> zone_ids;
        for (const auto& z : base.zones) zone_ids.push_back(z.id);
        const auto runs = expand(spec, zone_ids);
        const int workers = std::max(1, std::min<int>(a.parallel, static_cast<int>(runs.size())));
        spdlog::info("sweep: {} runs on {} worker(s)", runs.size(), workers);
        fs::create_directories(a.out);

        // Each worker claims the next run index; results land in run order.
        std::vector<RunOutcome> outcomes(runs.size());
        std::atomic<std::size_t> next{0};
        auto work = [&] {
            for (std::size_t i = next++; i < runs.size(); i = next++) {
                outcomes[i] = execute(base, runs[i], a.out);
                if (outcomes[i].ok) spdlog::debug("{} done in {:.3f} s", runs[i].id, outcomes[i].seconds);
                else spdlog::warn("{} failed: {}", runs[i].id, outcomes[i].error);
            }
        };
        if (workers == 1) {
            work();
        } else {
            std::vector<std::jthread> pool;
            for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        }

        std::string csv = "run_id,ev_multiplier,renewable_capex_multiplier,gas_price_multiplier,flex,target,metric,value\n";
        for (const auto& o : outcomes) csv += o.rows;
        write_file_atomic(a.out / "sweep_results.csv", csv);

        ordered_json manifest;
        manifest["scenario"] = a.scenario.string();
        manifest["spec"] = a.spec.string();
        manifest["spec_hash"] = "sha256:" + sha256_hex(spec_text);
        manifest["outputs"] = {"sweep_results.csv"};
        ordered_json list = ordered_json::array();
        int failed = 0;
        for (std::size_t i = 0; i < runs.size(); ++i) {
            const auto& r = runs[i];
            const auto& o = outcomes[i];
            failed += o.ok ? 0 : 1;
            ordered_json entry;
            entry["id"] = r.id;
            entry["ev_multiplier"] = r.ev_multiplier;
            entry["renewable_capex_multiplier"] = r.renewable_capex_multiplier;
            entry["gas_price_multiplier"] = r.gas_price_multiplier;
            entry["flex"] = r.flex;
            entry["target"] = r.target;
            entry["status"] = o.ok ? "success" : "failed";
            entry["exit_code"] = o.exit_code;
            entry["error"] = o.ok ? nullptr : ordered_json(o.error);
            entry["outputs"] = o.outputs;
            entry["wall_seconds"] = o.seconds;
            list.push_back(entry);
        }
        manifest["runs"] = list;
        write_file_atomic(a.out / "manifest.json", manifest.dump(2) + "\n");

        out << "sweep " << runs.size() << " runs, " << runs.size() - failed << " succeeded, " << failed
            << " failed\n";
        return static_cast<int>(kOk);
    });
}

}  // namespace gridmarg::cli
