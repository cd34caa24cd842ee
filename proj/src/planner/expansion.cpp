#include "gridmarg/planner/expansion.hpp"

#include <algorithm>
#include <cmath>

#include "gridmarg/lp/simplex.hpp"

namespace gridmarg {

const char* to_string(PlanningMode mode) {
    return mode == PlanningMode::CapacityExpansion ? "capacity-expansion" : "operational-fixed";
}

SolveFailed::SolveFailed(lp::Status status, PlanningMode mode, const std::string& context)
    : Error(std::string(to_string(mode)) + " model is " + lp::to_string(status) +
            (context.empty() ? std::string() : " (" + context + ")")),
      status_(status),
      mode_(mode) {}

CapacityDecisions CapacityDecisions::none(const GridModel& g) {
    CapacityDecisions c;
    c.generator_new = Eigen::VectorXd::Zero(static_cast<Index>(g.generators.size()));
    c.generator_retired = Eigen::VectorXd::Zero(static_cast<Index>(g.generators.size()));
    c.storage_power_new = Eigen::VectorXd::Zero(static_cast<Index>(g.storage_units.size()));
    c.storage_energy_new = Eigen::VectorXd::Zero(static_cast<Index>(g.storage_units.size()));
    c.line_new = Eigen::VectorXd::Zero(static_cast<Index>(g.lines.size()));
    return c;
}

namespace {

constexpr double kInf = lp::LpProblem::infinity();
using Term = lp::LpBuilder::Term;

class ModelAssembler {
public:
    ModelAssembler(const GridModel& grid, PlanningMode mode, const CapacityDecisions* fixed)
        : g_(grid), mode_(mode), fixed_(fixed), h_(grid.horizon()) {}

    ExpansionModel build() {
        check_lengths();
        ExpansionModel m;
        m.mode = mode_;
        m.grid = g_;
        m.fixed = fixed_ ? *fixed_ : CapacityDecisions::none(g_);
        auto& ix = m.index;
        const std::size_t nz = g_.zones.size();
        balance_terms_.assign(nz, std::vector<std::vector<Term>>(static_cast<std::size_t>(h_)));

        add_generators(ix);
        add_storage(ix);
        add_lines(ix);
        add_flexible_loads(m);
        add_non_served(ix);

        ix.balance_row.assign(nz, std::vector<Index>(static_cast<std::size_t>(h_), -1));
        for (std::size_t z = 0; z < nz; ++z)
            for (int t = 0; t < h_; ++t)
                ix.balance_row[z][static_cast<std::size_t>(t)] =
                    b_.add_eq(balance_terms_[z][static_cast<std::size_t>(t)], g_.zones[z].demand[t]);

        add_policies(m);

        m.problem = b_.build();
        m.emissions = Eigen::Map<const Eigen::VectorXd>(emissions_.data(), static_cast<Index>(emissions_.size()));
        m.cost_constant = cost_constant_;
        ix.variable_hour = hours_;
        return m;
    }

private:
    const GridModel& g_;
    PlanningMode mode_;
    const CapacityDecisions* fixed_;
    int h_;
    lp::LpBuilder b_;
    std::vector<int> hours_;
    std::vector<double> emissions_;
    std::vector<std::vector<std::vector<Term>>> balance_terms_;  // [zone][hour]
    double cost_constant_ = 0.0;

    bool expansion() const { return mode_ == PlanningMode::CapacityExpansion; }

    Index var(double cost, double lo, double hi, int hour, double emissions = 0.0) {
        const Index j = b_.add_variable(cost, lo, hi);
        hours_.push_back(hour);
        emissions_.push_back(emissions);
        return j;
    }

    void balance(const std::string& zone, int t, Index j, double coef) {
        balance_terms_[static_cast<std::size_t>(g_.zone_index(zone))][static_cast<std::size_t>(t)].emplace_back(j, coef);
    }

    // Investment variable: free within [0, inf) when expanding, pinned otherwise.
    Index capacity_var(bool allowed, double cost, double upper, double pinned) {
        if (expansion()) return allowed ? var(cost, 0.0, upper, -1) : Index{-1};
        if (!allowed && pinned == 0.0) return -1;
        return var(0.0, pinned, pinned, -1);
    }

    static void require(const Eigen::VectorXd& v, std::size_t n, const char* what) {
        if (static_cast<std::size_t>(v.size()) != n)
            throw MissingCapacity(std::string("fixed capacities do not cover every ") + what + " (" +
                                  std::to_string(v.size()) + " of " + std::to_string(n) + ")");
    }

    void check_lengths() const {
        auto bad = [&](const std::string& what, Index n) {
            if (n != h_)
                throw ModelBuildError(what + " has length " + std::to_string(n) + ", horizon is " + std::to_string(h_));
        };
        for (const auto& z : g_.zones) bad("demand of zone '" + z.id + "'", z.demand.size());
        for (const auto& x : g_.generators)
            if (x.capacity_factor_profile.size() > 0)
                bad("capacity factor of generator '" + x.id + "'", x.capacity_factor_profile.size());
        for (const auto& f : g_.flexible_loads) bad("baseline of flexible load '" + f.id + "'", f.baseline_profile.size());
        if (!expansion()) {
            if (!fixed_) throw MissingCapacity("operational model needs fixed capacities");
            require(fixed_->generator_new, g_.generators.size(), "generator");
            require(fixed_->generator_retired, g_.generators.size(), "generator");
            require(fixed_->storage_power_new, g_.storage_units.size(), "storage unit");
            require(fixed_->storage_energy_new, g_.storage_units.size(), "storage unit");
            require(fixed_->line_new, g_.lines.size(), "line");
        }
    }

    void add_generators(ModelIndex& ix) {
        const std::size_t n = g_.generators.size();
        ix.generation.assign(n, {});
        ix.commitment.assign(n, {});
        ix.startup.assign(n, {});
        ix.generator_new.assign(n, -1);
        ix.generator_retired.assign(n, -1);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& gen = g_.generators[i];
            const double pinned_new = fixed_ ? fixed_->generator_new[static_cast<Index>(i)] : 0.0;
            const double pinned_ret = fixed_ ? fixed_->generator_retired[static_cast<Index>(i)] : 0.0;
            const Index nv = capacity_var(gen.buildable, gen.inv_cost_annual + gen.fixed_om, kInf, pinned_new);
            const Index rv = capacity_var(gen.retirable, -gen.fixed_om, gen.existing_cap_mw, pinned_ret);
            ix.generator_new[i] = nv;
            ix.generator_retired[i] = rv;
            if (expansion()) cost_constant_ += gen.fixed_om * gen.existing_cap_mw;
            const bool capacity_vars = nv >= 0 || rv >= 0;

            // Terms for "x <= availability * (existing - retired + new)" as x + a*r - a*n <= a*existing.
            auto capacity_row = [&](Index x, double avail) {
                std::vector<Term> row{{x, 1.0}};
                if (rv >= 0) row.emplace_back(rv, avail);
                if (nv >= 0) row.emplace_back(nv, -avail);
                b_.add_le(row, avail * gen.existing_cap_mw);
            };

            const bool commit = gen.has_commitment();
            for (int t = 0; t < h_; ++t) {
                const double avail = commit ? 1.0 : gen.availability(t);
                const double upper = capacity_vars || commit ? kInf : avail * gen.existing_cap_mw;
                const Index gv = var(gen.marginal_cost(), 0.0, upper, t, gen.emissions_factor);
                ix.generation[i].push_back(gv);
                balance(gen.zone_id, t, gv, 1.0);
                if (!commit && capacity_vars) capacity_row(gv, avail);
            }
            if (!commit) continue;
            for (int t = 0; t < h_; ++t) {
                ix.commitment[i].push_back(var(0.0, 0.0, kInf, t));
                ix.startup[i].push_back(var(gen.startup_cost, 0.0, kInf, t));
            }
            for (int t = 0; t < h_; ++t) {
                const std::size_t ts = static_cast<std::size_t>(t);
                const Index gv = ix.generation[i][ts], uv = ix.commitment[i][ts], sv = ix.startup[i][ts];
                b_.add_le({{gv, 1.0}, {uv, -1.0}}, 0.0);
                if (gen.min_stable_fraction > 0) b_.add_le({{uv, gen.min_stable_fraction}, {gv, -1.0}}, 0.0);
                capacity_row(uv, 1.0);
                const Index prev = ix.commitment[i][static_cast<std::size_t>((t + h_ - 1) % h_)];
                if (prev != uv) b_.add_le({{uv, 1.0}, {prev, -1.0}, {sv, -1.0}}, 0.0);
            }
        }
    }

    void add_storage(ModelIndex& ix) {
        const std::size_t n = g_.storage_units.size();
        ix.charge.assign(n, {});
        ix.discharge.assign(n, {});
        ix.soc.assign(n, {});
        ix.storage_power_new.assign(n, -1);
        ix.storage_energy_new.assign(n, -1);
        for (std::size_t k = 0; k < n; ++k) {
            const auto& s = g_.storage_units[k];
            const Index np = capacity_var(s.buildable, s.inv_cost_power, kInf,
                                          fixed_ ? fixed_->storage_power_new[static_cast<Index>(k)] : 0.0);
            const Index ne = capacity_var(s.buildable, s.inv_cost_energy, kInf,
                                          fixed_ ? fixed_->storage_energy_new[static_cast<Index>(k)] : 0.0);
            ix.storage_power_new[k] = np;
            ix.storage_energy_new[k] = ne;
            const double pmax = np >= 0 ? kInf : s.existing_power_mw;
            const double emax = ne >= 0 ? kInf : s.existing_energy_mwh;
            for (int t = 0; t < h_; ++t) {
                const Index ch = var(0.0, 0.0, pmax, t);
                const Index dis = var(s.var_om, 0.0, pmax, t);
                const Index soc = var(0.0, 0.0, emax, t);
                ix.charge[k].push_back(ch);
                ix.discharge[k].push_back(dis);
                ix.soc[k].push_back(soc);
                balance(s.zone_id, t, dis, 1.0);
                balance(s.zone_id, t, ch, -1.0);
                if (np >= 0) {
                    b_.add_le({{ch, 1.0}, {np, -1.0}}, s.existing_power_mw);
                    b_.add_le({{dis, 1.0}, {np, -1.0}}, s.existing_power_mw);
                }
                if (ne >= 0) b_.add_le({{soc, 1.0}, {ne, -1.0}}, s.existing_energy_mwh);
            }
            for (int t = 0; t < h_; ++t) {
                const std::size_t ts = static_cast<std::size_t>(t);
                const Index prev = ix.soc[k][static_cast<std::size_t>((t + h_ - 1) % h_)];
                std::vector<Term> row{{ix.soc[k][ts], 1.0},
                                      {ix.charge[k][ts], -s.charge_efficiency},
                                      {ix.discharge[k][ts], 1.0 / s.discharge_efficiency}};
                if (prev != ix.soc[k][ts]) row.emplace_back(prev, -1.0);
                else row[0].second = 0.0;  // one-hour horizon: soc cancels
                b_.add_eq(row, 0.0);
            }
        }
    }

    void add_lines(ModelIndex& ix) {
        const std::size_t n = g_.lines.size();
        ix.flow_forward.assign(n, {});
        ix.flow_reverse.assign(n, {});
        ix.line_new.assign(n, -1);
        for (std::size_t l = 0; l < n; ++l) {
            const auto& line = g_.lines[l];
            const Index nl = capacity_var(line.expandable, line.expansion_cost, kInf,
                                          fixed_ ? fixed_->line_new[static_cast<Index>(l)] : 0.0);
            ix.line_new[l] = nl;
            const double fmax = nl >= 0 ? kInf : line.capacity_mw;
            const double delivered = 1.0 - line.loss_fraction;
            for (int t = 0; t < h_; ++t) {
                const Index fwd = var(0.0, 0.0, fmax, t);
                const Index rev = var(0.0, 0.0, fmax, t);
                ix.flow_forward[l].push_back(fwd);
                ix.flow_reverse[l].push_back(rev);
                balance(line.from_zone, t, fwd, -1.0);
                balance(line.to_zone, t, fwd, delivered);
                balance(line.to_zone, t, rev, -1.0);
                balance(line.from_zone, t, rev, delivered);
                if (nl >= 0) {
                    b_.add_le({{fwd, 1.0}, {nl, -1.0}}, line.capacity_mw);
                    b_.add_le({{rev, 1.0}, {nl, -1.0}}, line.capacity_mw);
                }
            }
        }
    }

    void add_flexible_loads(ExpansionModel& m) {
        auto& ix = m.index;
        ix.flex_served.assign(g_.flexible_loads.size(), {});
        for (std::size_t f = 0; f < g_.flexible_loads.size(); ++f) {
            const auto& load = g_.flexible_loads[f];
            auto set = build_flex_constraints(load, g_.config, FlexMode::from_load(load));
            const Index first = b_.num_variables();
            const FlexVariables vars = set.add_to(b_);
            for (Index j = first; j < b_.num_variables(); ++j) {
                hours_.push_back(-1);
                emissions_.push_back(0.0);
            }
            for (int t = 0; t < h_; ++t) {
                hours_[static_cast<std::size_t>(vars.served[static_cast<std::size_t>(t)])] = t;
                if (!vars.cumulative.empty()) hours_[static_cast<std::size_t>(vars.cumulative[static_cast<std::size_t>(t)])] = t;
                balance(load.zone_id, t, vars.served[static_cast<std::size_t>(t)], -1.0);
            }
            ix.flex_served[f] = vars.served;
            m.flex.push_back(std::move(set));
        }
    }

    void add_non_served(ModelIndex& ix) {
        ix.non_served.assign(g_.zones.size(), {});
        if (!g_.config.nse_penalty) return;
        for (std::size_t z = 0; z < g_.zones.size(); ++z)
            for (int t = 0; t < h_; ++t) {
                const Index v = var(*g_.config.nse_penalty, 0.0, kInf, t);
                ix.non_served[z].push_back(v);
                balance(g_.zones[z].id, t, v, 1.0);
            }
    }

    void add_policies(ExpansionModel& m) {
        auto& ix = m.index;
        ix.clean_share_row.assign(g_.zones.size(), -1);
        for (std::size_t z = 0; z < g_.zones.size(); ++z) {
            const auto& zone = g_.zones[z];
            if (zone.clean_share_min <= 0) continue;
            double consumption = zone.demand.sum();
            for (const auto& set : m.flex)
                if (set.zone_id == zone.id) consumption += set.total_energy();
            std::vector<Term> row;
            for (std::size_t i = 0; i < g_.generators.size(); ++i)
                if (g_.generators[i].is_clean && g_.generators[i].zone_id == zone.id)
                    for (Index v : ix.generation[i]) row.emplace_back(v, 1.0);
            ix.clean_share_row[z] = b_.add_ge(row, zone.clean_share_min * consumption);
        }
        if (g_.config.co2_cap_tons) {
            std::vector<Term> row;
            for (std::size_t i = 0; i < g_.generators.size(); ++i)
                if (g_.generators[i].emissions_factor > 0)
                    for (Index v : ix.generation[i]) row.emplace_back(v, g_.generators[i].emissions_factor);
            ix.co2_cap_row = b_.add_le(row, *g_.config.co2_cap_tons);
        }
    }
};

Eigen::MatrixXd gather(const ModelIndex::Grid& idx, const Eigen::VectorXd& x, int h) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Index>(idx.size()), h);
    for (std::size_t e = 0; e < idx.size(); ++e)
        for (std::size_t t = 0; t < idx[e].size(); ++t) out(static_cast<Index>(e), static_cast<Index>(t)) = x[idx[e][t]];
    return out;
}

double value_or(const Eigen::VectorXd& x, Index j, double fallback) { return j >= 0 ? x[j] : fallback; }

}  // namespace

ExpansionModel build_expansion_lp(const GridModel& grid) {
    return ModelAssembler(grid, PlanningMode::CapacityExpansion, nullptr).build();
}

ExpansionModel build_operational_lp(const GridModel& grid, const CapacityDecisions& fixed) {
    return ModelAssembler(grid, PlanningMode::OperationalFixed, &fixed).build();
}

double lp_cost(const ExpansionModel& model, const Eigen::VectorXd& x) {
    return model.problem.objective.dot(x);
}

double lp_emissions(const ExpansionModel& model, const Eigen::VectorXd& x) {
    return model.emissions.dot(x.head(model.emissions.size()));
}

DispatchResult decode(const ExpansionModel& m, const lp::LpSolution& s) {
    const auto& g = m.grid;
    const auto& ix = m.index;
    const int h = g.horizon();
    const Eigen::VectorXd& x = s.x;
    DispatchResult r;
    r.mode = m.mode;

    r.capacity = CapacityDecisions::none(g);
    for (std::size_t i = 0; i < g.generators.size(); ++i) {
        r.capacity.generator_new[static_cast<Index>(i)] = value_or(x, ix.generator_new[i], 0.0);
        r.capacity.generator_retired[static_cast<Index>(i)] = value_or(x, ix.generator_retired[i], 0.0);
    }
    for (std::size_t k = 0; k < g.storage_units.size(); ++k) {
        r.capacity.storage_power_new[static_cast<Index>(k)] = value_or(x, ix.storage_power_new[k], 0.0);
        r.capacity.storage_energy_new[static_cast<Index>(k)] = value_or(x, ix.storage_energy_new[k], 0.0);
    }
    for (std::size_t l = 0; l < g.lines.size(); ++l)
        r.capacity.line_new[static_cast<Index>(l)] = value_or(x, ix.line_new[l], 0.0);

    r.generation = gather(ix.generation, x, h);
    r.charge = gather(ix.charge, x, h);
    r.discharge = gather(ix.discharge, x, h);
    r.soc = gather(ix.soc, x, h);
    r.flex_served = gather(ix.flex_served, x, h);
    r.flow = gather(ix.flow_forward, x, h) - gather(ix.flow_reverse, x, h);

    const Index nz = static_cast<Index>(g.zones.size());
    r.non_served = Eigen::MatrixXd::Zero(nz, h);
    if (!ix.non_served.empty() && !ix.non_served[0].empty()) r.non_served = gather(ix.non_served, x, h);

    r.curtailment = Eigen::MatrixXd::Zero(static_cast<Index>(g.generators.size()), h);
    r.emissions = Eigen::MatrixXd::Zero(nz, h);
    for (std::size_t i = 0; i < g.generators.size(); ++i) {
        const auto& gen = g.generators[i];
        const Index gi = static_cast<Index>(i);
        const Index z = g.zone_index(gen.zone_id);
        r.emissions.row(z) += gen.emissions_factor * r.generation.row(gi);
        if (gen.kind == GeneratorKind::Thermal) continue;
        const double cap = gen.existing_cap_mw - r.capacity.generator_retired[gi] + r.capacity.generator_new[gi];
        for (int t = 0; t < h; ++t)
            r.curtailment(gi, t) = std::max(0.0, gen.availability(t) * cap - r.generation(gi, t));
    }

    r.served_demand = Eigen::MatrixXd::Zero(nz, h);
    r.price = Eigen::MatrixXd::Zero(nz, h);
    for (Index z = 0; z < nz; ++z) {
        r.served_demand.row(z) = g.zones[static_cast<std::size_t>(z)].demand.transpose() - r.non_served.row(z);
        for (int t = 0; t < h; ++t)
            r.price(z, t) = s.eq_duals[ix.balance_row[static_cast<std::size_t>(z)][static_cast<std::size_t>(t)]];
    }
    for (std::size_t f = 0; f < g.flexible_loads.size(); ++f)
        r.served_demand.row(g.zone_index(g.flexible_loads[f].zone_id)) += r.flex_served.row(static_cast<Index>(f));

    r.degenerate_hours.assign(static_cast<std::size_t>(h), false);
    for (std::size_t j = 0; j < s.degenerate_basic.size() && j < ix.variable_hour.size(); ++j)
        if (s.degenerate_basic[j] && ix.variable_hour[j] >= 0)
            r.degenerate_hours[static_cast<std::size_t>(ix.variable_hour[j])] = true;

    // Split the objective into investment (capacity variables) and operations.
    double invest = 0.0;
    for (Index j = 0; j < static_cast<Index>(ix.variable_hour.size()); ++j)
        if (ix.variable_hour[static_cast<std::size_t>(j)] < 0) invest += m.problem.objective[j] * x[j];
    const double objective = m.problem.objective.dot(x);
    r.investment_cost = invest + m.cost_constant;
    r.operational_cost = objective - invest;
    r.total_cost = objective + m.cost_constant;
    r.solution = s;
    return r;
}

DispatchResult solve_model(const ExpansionModel& model) {
    const auto s = lp::solve(model.problem);
    if (s.status != lp::Status::Optimal) throw SolveFailed(s.status, model.mode);
    return decode(model, s);
}

GridModel perturb_demand(const GridModel& grid, const std::set<std::string>& targets, const Perturbation& p) {
    for (const auto& z : targets)
        if (grid.zone_index(z) < 0) throw UnknownZone("unknown zone '" + z + "'");
    auto targeted = [&](const std::string& z) { return targets.empty() || targets.count(z) > 0; };
    GridModel out = grid;
    if (const auto* ev = std::get_if<ScaleEV>(&p)) {
        if (!(ev->fraction > -1.0)) throw ValidationError("perturbation fraction must be > -1");
        for (auto& f : out.flexible_loads)
            if (targeted(f.zone_id)) {
                f.baseline_profile *= 1.0 + ev->fraction;
                if (f.max_charge_rate_mw) *f.max_charge_rate_mw *= 1.0 + ev->fraction;
            }
    } else if (const auto* uni = std::get_if<UniformAll>(&p)) {
        if (!(uni->fraction > -1.0)) throw ValidationError("perturbation fraction must be > -1");
        for (auto& z : out.zones)
            if (targeted(z.id)) z.demand *= 1.0 + uni->fraction;
    } else {
        const auto& one = std::get<SingleHour>(p);
        const int z = out.zone_index(one.zone);
        if (z < 0) throw UnknownZone("unknown zone '" + one.zone + "'");
        if (one.hour < 0 || one.hour >= out.horizon())
            throw ValidationError("perturbation hour " + std::to_string(one.hour) + " outside the horizon");
        out.zones[static_cast<std::size_t>(z)].demand[one.hour] += one.mw;
    }
    return out;
}

}  // namespace gridmarg
