#pragma once

#include "ehet/arrivals.hpp"
#include "ehet/online_mdp.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ehet {

/// A causal policy as seen by the simulator.
struct PolicyView {
    std::function<Action(const State&)> act;
    /// State-independent power the policy aims for (corollary/LCP policies); outage is then a
    /// slot where it transmits nothing. Without a target, outage is a slot starting with an
    /// empty battery.
    std::optional<double> target_power;
    std::string name;
};

PolicyView view_of(const OnlinePolicy& policy, std::string name = "table");

/// Per-slot record; the battery identity e' = e - consumed - sent + received + harvested - overflow
/// holds exactly for each device.
struct SlotRecord {
    long e_tx, e_rc;          ///< levels at the start of the slot
    double rho;
    long d;
    long b_tx, b_rc;          ///< arrivals during the slot
    long cost_tx, cost_rc;    ///< quantized consumption
    long received;            ///< floor(beta d) at the transmitter
    long overflow_tx, overflow_rc;
};

struct SimulationResult {
    double reward = 0.0;      ///< (1/K) sum g(rho_k)
    std::vector<SlotRecord> slots;
    long outage_slots = 0;
    long outage_tx = 0;       ///< slots starting with an empty transmitter battery
    long outage_rc = 0;
    long overflow_tx = 0;     ///< quanta lost to the capacity clamp
    long overflow_rc = 0;
    State final_state;
};

struct SimulationOptions {
    State initial{0, 0};
    bool keep_slots = true;
};

/// Runs the policy over equal-length traces. Infeasible actions raise ContractViolation.
SimulationResult simulate(const PolicyView& policy, const ArrivalTrace& arr_tx,
                          const ArrivalTrace& arr_rc, const SystemConfig& cfg,
                          const SimulationOptions& opts = {});

struct PlanActions {
    std::vector<double> power;
    std::vector<double> transfer;
};

enum class PlanReplay {
    Strict, ///< an unaffordable slot raises InfeasiblePlan
    Clamp,  ///< unaffordable actions are cut down to what the batteries hold
};

/// Quantized replay of an offline plan: the slot uses rho = P_k and d = floor(D_k).
SimulationResult simulate_plan(const PlanActions& plan, const ArrivalTrace& arr_tx,
                               const ArrivalTrace& arr_rc, const SystemConfig& cfg,
                               PlanReplay mode = PlanReplay::Strict,
                               const SimulationOptions& opts = {});

struct ComparisonRow {
    std::string name;
    double reward;
    double ratio_to_best;
    double gap_to_bound; ///< (bound - reward) / bound; NaN without a bound
    long outage_slots;
    long overflow_tx, overflow_rc;
};

/// Simulates each policy on identical traces.
std::vector<ComparisonRow> compare(const std::vector<PolicyView>& policies, const ArrivalTrace& arr_tx,
                                   const ArrivalTrace& arr_rc, const SystemConfig& cfg,
                                   std::optional<double> bound = std::nullopt);

/// (with - without) / without.
double improvement(double with_et, double without_et);

} // namespace ehet
