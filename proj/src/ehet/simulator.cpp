#include "ehet/simulator.hpp"

#include "ehet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ehet {

namespace {

void check_traces(const ArrivalTrace& tx, const ArrivalTrace& rc) {
    if (tx.quanta.empty() || tx.quanta.size() != rc.quanta.size())
        throw DomainError("arrival traces must be nonempty and of equal length");
}

// Applies one slot; returns the reward.
double step(State& s, const Action& a, long b_tx, long b_rc, const SystemConfig& cfg,
            SimulationResult& out, bool keep) {
    const long ctx = cfg.cost_tx()(a.rho);
    const long crc = cfg.cost_rc()(a.rho);
    const long received = cfg.transferred(a.d);
    const long raw_tx = s.e_tx - ctx + received + b_tx;
    const long raw_rc = s.e_rc - crc - a.d + b_rc;
    const long of_tx = std::max(0L, raw_tx - cfg.e_max_tx);
    const long of_rc = std::max(0L, raw_rc - cfg.e_max_rc);
    if (keep) out.slots.push_back({s.e_tx, s.e_rc, a.rho, a.d, b_tx, b_rc, ctx, crc, received, of_tx, of_rc});
    out.overflow_tx += of_tx;
    out.overflow_rc += of_rc;
    s = {raw_tx - of_tx, raw_rc - of_rc};
    if (s.e_tx < 0 || s.e_rc < 0) throw ContractViolation("battery went negative");
    return cfg.g(a.rho);
}

} // namespace

PolicyView view_of(const OnlinePolicy& policy, std::string name) {
    return {[policy](const State& s) { return policy(s); }, std::nullopt, std::move(name)};
}

SimulationResult simulate(const PolicyView& policy, const ArrivalTrace& arr_tx,
                          const ArrivalTrace& arr_rc, const SystemConfig& cfg,
                          const SimulationOptions& opts) {
    check_traces(arr_tx, arr_rc);
    SimulationResult out;
    State s = opts.initial;
    if (!feasible(s, {0.0, 0}, cfg)) throw DomainError("initial state outside the battery grid");
    const std::size_t k = arr_tx.quanta.size();
    if (opts.keep_slots) out.slots.reserve(k);
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const Action a = policy.act(s);
        if (!feasible(s, a, cfg))
            throw ContractViolation("policy '" + policy.name + "' chose an infeasible action at slot " +
                                    std::to_string(i + 1));
        const bool empty_tx = s.e_tx == 0, empty_rc = s.e_rc == 0;
        out.outage_tx += empty_tx;
        out.outage_rc += empty_rc;
        if (policy.target_power ? (*policy.target_power > 0.0 && a.rho == 0.0) : (empty_tx || empty_rc))
            ++out.outage_slots;
        total += step(s, a, arr_tx.quanta[i], arr_rc.quanta[i], cfg, out, opts.keep_slots);
    }
    out.reward = total / static_cast<double>(k);
    out.final_state = s;
    return out;
}

SimulationResult simulate_plan(const PlanActions& plan, const ArrivalTrace& arr_tx,
                               const ArrivalTrace& arr_rc, const SystemConfig& cfg, PlanReplay mode,
                               const SimulationOptions& opts) {
    check_traces(arr_tx, arr_rc);
    const std::size_t k = arr_tx.quanta.size();
    if (plan.power.size() != k || plan.transfer.size() != k)
        throw DomainError("plan length does not match the traces");
    SimulationResult out;
    State s = opts.initial;
    double total = 0.0;
    const auto ctx = cfg.cost_tx();
    const auto crc = cfg.cost_rc();
    for (std::size_t i = 0; i < k; ++i) {
        const int slot = static_cast<int>(i + 1);
        double rho = std::clamp(plan.power[i], 0.0, cfg.rho_max);
        long d = cfg.transfer_enabled
                     ? static_cast<long>(std::floor(std::max(plan.transfer[i], 0.0) + 1e-9))
                     : 0;
        if (mode == PlanReplay::Strict) {
            if (plan.power[i] > cfg.rho_max * (1.0 + 1e-12))
                throw InfeasiblePlan(slot, "power exceeds rho_max");
            if (ctx(rho) > s.e_tx) throw InfeasiblePlan(slot, "transmitter energy constraint violated");
            if (crc(rho) + d > s.e_rc) throw InfeasiblePlan(slot, "receiver energy constraint violated");
        } else {
            rho = std::min({rho, ctx.inverse(s.e_tx, cfg.rho_max), crc.inverse(s.e_rc, cfg.rho_max)});
            d = std::min(d, s.e_rc - crc(rho));
        }
        out.outage_tx += s.e_tx == 0;
        out.outage_rc += s.e_rc == 0;
        if (plan.power[i] > 0.0 && rho == 0.0) ++out.outage_slots;
        total += step(s, {rho, d}, arr_tx.quanta[i], arr_rc.quanta[i], cfg, out, opts.keep_slots);
    }
    out.reward = total / static_cast<double>(k);
    out.final_state = s;
    return out;
}

std::vector<ComparisonRow> compare(const std::vector<PolicyView>& policies, const ArrivalTrace& arr_tx,
                                   const ArrivalTrace& arr_rc, const SystemConfig& cfg,
                                   std::optional<double> bound) {
    std::vector<ComparisonRow> rows;
    SimulationOptions opts;
    opts.keep_slots = false;
    for (const auto& p : policies) {
        const auto r = simulate(p, arr_tx, arr_rc, cfg, opts);
        rows.push_back({p.name, r.reward, 0.0,
                        bound ? (*bound - r.reward) / *bound : std::numeric_limits<double>::quiet_NaN(),
                        r.outage_slots, r.overflow_tx, r.overflow_rc});
    }
    double best = 0.0;
    for (const auto& r : rows) best = std::max(best, r.reward);
    for (auto& r : rows) r.ratio_to_best = best > 0.0 ? r.reward / best : 0.0;
    return rows;
}

double improvement(double with_et, double without_et) {
    if (!(without_et > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return (with_et - without_et) / without_et;
}

} // namespace ehet
