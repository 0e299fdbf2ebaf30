#include "ehet/ehet.h"

#include "ehet/bounds.hpp"
#include "ehet/errors.hpp"
#include "ehet/heuristics.hpp"
#include "ehet/offline.hpp"
#include "ehet/online_mdp.hpp"
#include "ehet/scenario.hpp"
#include "ehet/simulator.hpp"

#include <json.hpp>

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <optional>
#include <string>

struct ehet_scenario {
    ehet::Scenario scenario;
};

struct ehet_policy {
    ehet::OnlinePolicy table;
    std::string name;
    std::optional<double> target_power;
    int iterations = 0;
};

struct ehet_plan {
    ehet::OfflinePlan plan;
};

struct ehet_sim {
    ehet::SimulationResult result;
};

namespace {

thread_local std::string g_last_error;

ehet_status fail(ehet_status code, const std::string& msg) {
    g_last_error = msg;
    return code;
}

template <class F>
ehet_status guarded(F&& body) {
    try {
        body();
        g_last_error.clear();
        return EHET_OK;
    } catch (const ehet::ParseError& e) {
        return fail(EHET_PARSE, e.what());
    } catch (const ehet::IoError& e) {
        return fail(EHET_IO, e.what());
    } catch (const ehet::DomainError& e) {
        return fail(EHET_DOMAIN, e.what());
    } catch (const ehet::ConstructionError& e) {
        return fail(EHET_CONSTRUCTION, e.what());
    } catch (const ehet::ConvergenceError& e) {
        return fail(EHET_CONVERGENCE, e.what());
    } catch (const ehet::InfeasiblePlan& e) {
        return fail(EHET_INFEASIBLE, e.what());
    } catch (const ehet::ContractViolation& e) {
        return fail(EHET_INFEASIBLE, e.what());
    } catch (const std::invalid_argument& e) {
        return fail(EHET_INVALID_ARGUMENT, e.what());
    } catch (const std::bad_alloc&) {
        return fail(EHET_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(EHET_INTERNAL, e.what());
    } catch (...) {
        return fail(EHET_INTERNAL, "unknown error");
    }
}

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

ehet::HeuristicKind to_kind(ehet_heuristic k) {
    switch (k) {
    case EHET_GREEDY: return ehet::HeuristicKind::Greedy;
    case EHET_BALANCED: return ehet::HeuristicKind::Balanced;
    case EHET_LOW_COMPLEXITY: return ehet::HeuristicKind::LowComplexity;
    case EHET_COROLLARY: return ehet::HeuristicKind::Corollary;
    }
    throw std::invalid_argument("unknown heuristic kind");
}

const char* kind_name(ehet_heuristic k) {
    switch (k) {
    case EHET_GREEDY: return "gp";
    case EHET_BALANCED: return "bp";
    case EHET_LOW_COMPLEXITY: return "lcp";
    case EHET_COROLLARY: return "corollary";
    }
    return "unknown";
}

void require_match(const ehet_policy* p, const ehet::SystemConfig& cfg) {
    require(p->table.e_max_tx() == cfg.e_max_tx && p->table.e_max_rc() == cfg.e_max_rc,
            "policy grid does not match the scenario batteries");
}

void fill_bounds(const ehet::BoundInput& in, double no_et, const ehet::EtBound& et, ehet_bounds_result* out) {
    *out = ehet_bounds_result{};
    out->rho_max = in.psi_tx.rho_max();
    out->no_et = no_et;
    out->et = et.value;
    out->xi_star = et.xi_star;
    out->c_tx = et.c_tx;
    out->c_rc = et.c_rc;
    if (const auto* c = in.psi_tx.first_chord()) {
        out->tx_has_chord = 1;
        out->tx_chord_x = c->x_hi;
        out->tx_chord_m = c->chord_slope();
    }
}

ehet::SimulationOptions initial_state(const ehet::Scenario& sc) {
    ehet::SimulationOptions opts;
    opts.initial = {ehet::quantum_floor(sc.initial_tx), ehet::quantum_floor(sc.initial_rc)};
    return opts;
}

// Applies a change and rolls it back if the scenario no longer validates.
template <class F>
ehet_status modify(ehet_scenario* s, F&& change) {
    return guarded([&] {
        require(s, "null scenario");
        ehet::Scenario next = s->scenario;
        change(next);
        next.validate();
        s->scenario = std::move(next);
    });
}

} // namespace

extern "C" {

const char* ehet_last_error(void) { return g_last_error.c_str(); }

const char* ehet_version(void) { return "1.0.0"; }

void ehet_string_free(char* s) { std::free(s); }

ehet_status ehet_scenario_from_json(const char* text, const char* base_dir, ehet_scenario** out) {
    return guarded([&] {
        require(text && out, "null argument");
        auto sc = ehet::parse_scenario(text, base_dir ? base_dir : "");
        sc.validate();
        *out = new ehet_scenario{std::move(sc)};
    });
}

ehet_status ehet_scenario_from_file(const char* path, ehet_scenario** out) {
    return guarded([&] {
        require(path && out, "null argument");
        auto sc = ehet::load_scenario(path);
        sc.validate();
        *out = new ehet_scenario{std::move(sc)};
    });
}

void ehet_scenario_free(ehet_scenario* s) { delete s; }

ehet_status ehet_scenario_to_json(const ehet_scenario* s, char** out) {
    return guarded([&] {
        require(s && out, "null argument");
        *out = dup_string(s->scenario.to_json());
    });
}


ehet_status ehet_scenario_set_beta(ehet_scenario* s, double beta) {
    return modify(s, [&](ehet::Scenario& sc) { sc.beta = beta; });
}

ehet_status ehet_scenario_set_lambda(ehet_scenario* s, double lambda) {
    return modify(s, [&](ehet::Scenario& sc) { sc.lambda = lambda; });
}

ehet_status ehet_scenario_set_battery(ehet_scenario* s, ehet_device dev, long quanta) {
    return modify(s, [&](ehet::Scenario& sc) {
        require(dev == EHET_TX || dev == EHET_RC, "unknown device");
        auto& d = dev == EHET_TX ? sc.tx : sc.rc;
        // Keep the Joule size of a quantum fixed when the capacity changes.
        if (d.battery_joule) *d.battery_joule *= static_cast<double>(quanta) / static_cast<double>(d.battery);
        d.battery = quanta;
        // A fixed rho_max may no longer be supportable; fall back to the derived one.
        sc.rho_max.reset();
    });
}

ehet_status ehet_scenario_set_horizon(ehet_scenario* s, long slots) {
    return modify(s, [&](ehet::Scenario& sc) { sc.horizon = slots; });
}

ehet_status ehet_scenario_set_seed(ehet_scenario* s, uint64_t seed) {
    return modify(s, [&](ehet::Scenario& sc) { sc.seed = seed; });
}

ehet_status ehet_scenario_set_transfer(ehet_scenario* s, int enabled) {
    return modify(s, [&](ehet::Scenario& sc) { sc.transfer = enabled != 0; });
}

ehet_status ehet_scenario_get_horizon(const ehet_scenario* s, long* out) {
    return guarded([&] {
        require(s && out, "null argument");
        *out = s->scenario.horizon;
    });
}

ehet_status ehet_scenario_get_transfer(const ehet_scenario* s, int* out) {
    return guarded([&] {
        require(s && out, "null argument");
        *out = s->scenario.transfer ? 1 : 0;
    });
}

ehet_status ehet_scenario_arrival_mean(const ehet_scenario* s, ehet_device dev, double* out) {
    return guarded([&] {
        require(s && out, "null argument");
        const auto cfg = s->scenario.system();
        *out = dev == EHET_TX ? cfg.arr_tx.mean() : cfg.arr_rc.mean();
    });
}

ehet_status ehet_scenario_quantum_joule(const ehet_scenario* s, double* out) {
    return guarded([&] {
        require(s && out, "null argument");
        *out = s->scenario.quantum_joule().value_or(0.0);
    });
}

ehet_status ehet_bounds(const ehet_scenario* s, ehet_bounds_result* out) {
    return guarded([&] {
        require(s && out, "null argument");
        const auto in = s->scenario.bound_input();
        fill_bounds(in, ehet::upper_bound_no_et(in), ehet::upper_bound_et(in), out);
    });
}

ehet_status ehet_bounds_finite(const ehet_scenario* s, ehet_bounds_result* out) {
    return guarded([&] {
        require(s && out, "null argument");
        const auto in = s->scenario.bound_input();
        const auto [tx, rc] = s->scenario.traces();
        const auto fh = ehet::finite_horizon_bounds(in, tx, rc);
        fill_bounds(in, fh.no_et, fh.et, out);
    });
}

ehet_status ehet_solve_online(const ehet_scenario* s, ehet_policy** out) {
    return guarded([&] {
        require(s && out, "null argument");
        const auto cfg = s->scenario.system();
        auto sol = ehet::policy_iteration(cfg);
        *out = new ehet_policy{std::move(sol.policy), cfg.transfer_enabled ? "op-on" : "op-on-no-et", std::nullopt,
                               sol.iterations};
    });
}

ehet_status ehet_heuristic_policy(const ehet_scenario* s, ehet_heuristic kind, ehet_policy** out) {
    return guarded([&] {
        require(s && out, "null argument");
        const auto cfg = s->scenario.system();
        const auto k = to_kind(kind);
        auto table = ehet::tabulate(ehet::heuristic(k, cfg), cfg);
        *out = new ehet_policy{std::move(table), kind_name(kind), ehet::heuristic_target(k, cfg), 0};
    });
}

void ehet_policy_free(ehet_policy* p) { delete p; }

ehet_status ehet_policy_evaluate(const ehet_policy* p, const ehet_scenario* s, double* gain) {
    return guarded([&] {
        require(p && s && gain, "null argument");
        const auto cfg = s->scenario.system();
        require_match(p, cfg);
        p->table.check_feasible(cfg);
        *gain = ehet::evaluate_policy(p->table, cfg).gain;
    });
}

ehet_status ehet_policy_iterations(const ehet_policy* p, int* out) {
    return guarded([&] {
        require(p && out, "null argument");
        *out = p->iterations;
    });
}

ehet_status ehet_policy_action(const ehet_policy* p, long e_tx, long e_rc, double* rho, long* d) {
    return guarded([&] {
        require(p && rho && d, "null argument");
        if (e_tx < 0 || e_rc < 0 || e_tx > p->table.e_max_tx() || e_rc > p->table.e_max_rc())
            throw ehet::DomainError("state outside the battery grid");
        const auto& a = p->table({e_tx, e_rc});
        *rho = a.rho;
        *d = a.d;
    });
}

ehet_status ehet_policy_name(const ehet_policy* p, char** out) {
    return guarded([&] {
        require(p && out, "null argument");
        *out = dup_string(p->name);
    });
}

ehet_status ehet_policy_to_json(const ehet_policy* p, char** out) {
    return guarded([&] {
        require(p && out, "null argument");
        nlohmann::json j;
        j["name"] = p->name;
        j["e_max_tx"] = p->table.e_max_tx();
        j["e_max_rc"] = p->table.e_max_rc();
        auto rows = nlohmann::json::array();
        for (long et = 0; et <= p->table.e_max_tx(); ++et) {
            auto row = nlohmann::json::array();
            for (long er = 0; er <= p->table.e_max_rc(); ++er) {
                const auto& a = p->table({et, er});
                row.push_back({a.rho, a.d});
            }
            rows.push_back(std::move(row));
        }
        j["actions"] = std::move(rows);
        *out = dup_string(j.dump());
    });
}

ehet_status ehet_solve_offline(const ehet_scenario* s, ehet_plan** out) {
    return guarded([&] {
        require(s && out, "null argument");
        const auto [tx, rc] = s->scenario.traces();
        const auto inst = s->scenario.offline_instance(tx, rc);
        auto plan = s->scenario.finite_batteries ? ehet::solve_offline_finite(inst) : ehet::solve_offline_infinite(inst);
        *out = new ehet_plan{std::move(plan)};
    });
}

void ehet_plan_free(ehet_plan* p) { delete p; }

ehet_status ehet_plan_summary_get(const ehet_plan* p, ehet_plan_summary* out) {
    return guarded([&] {
        require(p && out, "null argument");
        const auto& pl = p->plan;
        *out = ehet_plan_summary{static_cast<int>(pl.power.size()), pl.objective, pl.residual, pl.upper_bound,
                                 pl.duality_gap, pl.certified ? 1 : 0, pl.convexified ? 1 : 0,
                                 pl.newton_steps};
    });
}

ehet_status ehet_plan_step(const ehet_plan* p, int slot, double* power, double* transfer) {
    return guarded([&] {
        require(p && power && transfer, "null argument");
        require(slot >= 1 && static_cast<std::size_t>(slot) <= p->plan.power.size(), "slot out of range");
        *power = p->plan.power[static_cast<std::size_t>(slot - 1)];
        *transfer = p->plan.transfer[static_cast<std::size_t>(slot - 1)];
    });
}

ehet_status ehet_plan_write(const ehet_plan* p, const char* path) {
    return guarded([&] {
        require(p && path, "null argument");
        std::ofstream os(path);
        if (!os) throw ehet::IoError(std::string("cannot write '") + path + "'");
        ehet::write_plan(os, p->plan);
    });
}

ehet_status ehet_simulate_policy(const ehet_scenario* s, const ehet_policy* p, ehet_sim** out) {
    return guarded([&] {
        require(s && p && out, "null argument");
        const auto cfg = s->scenario.system();
        require_match(p, cfg);
        const auto [tx, rc] = s->scenario.traces();
        auto view = ehet::view_of(p->table, p->name);
        view.target_power = p->target_power;
        *out = new ehet_sim{ehet::simulate(view, tx, rc, cfg, initial_state(s->scenario))};
    });
}

ehet_status ehet_simulate_plan(const ehet_scenario* s, const ehet_plan* p, ehet_sim** out) {
    return guarded([&] {
        require(s && p && out, "null argument");
        const auto cfg = s->scenario.system();
        const auto [tx, rc] = s->scenario.traces();
        require(p->plan.power.size() == tx.quanta.size(), "plan length does not match the scenario horizon");
        const ehet::PlanActions actions{p->plan.power, p->plan.transfer};
        *out = new ehet_sim{
            ehet::simulate_plan(actions, tx, rc, cfg, ehet::PlanReplay::Clamp, initial_state(s->scenario))};
    });
}

void ehet_sim_free(ehet_sim* sim) { delete sim; }

ehet_status ehet_sim_summary_get(const ehet_sim* sim, ehet_sim_summary* out) {
    return guarded([&] {
        require(sim && out, "null argument");
        const auto& r = sim->result;
        *out = ehet_sim_summary{r.reward,       static_cast<long>(r.slots.size()), r.outage_slots, r.outage_tx,
                                r.outage_rc,    r.overflow_tx,                     r.overflow_rc};
    });
}

ehet_status ehet_sim_slot(const ehet_sim* sim, long index, ehet_slot* out) {
    return guarded([&] {
        require(sim && out, "null argument");
        require(index >= 0 && static_cast<std::size_t>(index) < sim->result.slots.size(), "slot out of range");
        const auto& r = sim->result.slots[static_cast<std::size_t>(index)];
        *out = ehet_slot{r.e_tx, r.e_rc, r.rho, r.d, r.b_tx, r.b_rc};
    });
}

ehet_status ehet_sim_write_csv(const ehet_sim* sim, const char* path) {
    return guarded([&] {
        require(sim && path, "null argument");
        std::ofstream os(path);
        if (!os) throw ehet::IoError(std::string("cannot write '") + path + "'");
        os.precision(17);
        os << "slot,e_tx,e_rc,rho,d,b_tx,b_rc\n";
        for (std::size_t k = 0; k < sim->result.slots.size(); ++k) {
            const auto& r = sim->result.slots[k];
            os << k + 1 << ',' << r.e_tx << ',' << r.e_rc << ',' << r.rho << ',' << r.d << ',' << r.b_tx << ','
               << r.b_rc << '\n';
        }
    });
}

} // extern "C"
