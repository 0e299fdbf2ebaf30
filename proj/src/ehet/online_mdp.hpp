#pragma once

#include "ehet/arrivals.hpp"
#include "ehet/consumption.hpp"

#include <cstddef>
#include <vector>

namespace ehet {

struct SystemConfig {
    long e_max_tx = 1;
    long e_max_rc = 1;
    ConsumptionModel q_tx = ConsumptionModel::linear(1.0);
    ConsumptionModel q_rc = ConsumptionModel::linear(1.0);
    ArrivalProcess arr_tx = make_deterministic(1);
    ArrivalProcess arr_rc = make_deterministic(1);
    double beta = 0.0;
    RewardFunction g{1.0};
    double rho_max = 1.0;
    Quantization quantization = Quantization::Lower;
    /// When false every action has d = 0.
    bool transfer_enabled = true;

    /// Throws DomainError when a field is out of range or rho_max is not supportable.
    void validate() const;

    QuantizedCost cost_tx() const { return {q_tx, quantization}; }
    QuantizedCost cost_rc() const { return {q_rc, quantization}; }
    long transferred(long d) const { return transferred_quanta(beta, d, quantization); }
};

/// Largest rho with q_d^i(rho) <= e_max^i for both devices.
double max_supported_power(const ConsumptionModel& q_tx, const ConsumptionModel& q_rc,
                           long e_max_tx, long e_max_rc,
                           Quantization mode = Quantization::Lower);

struct State {
    long e_tx = 0;
    long e_rc = 0;
    bool operator==(const State&) const = default;
};

struct Action {
    double rho = 0.0;
    long d = 0;
    bool operator==(const Action&) const = default;
};

/// True if (rho, d) respects both battery budgets in state s.
bool feasible(const State& s, const Action& a, const SystemConfig& cfg);

struct Successor {
    State state;
    double probability;
};

/// One-slot transition law; throws ContractViolation for an infeasible action.
std::vector<Successor> transition(const State& s, const Action& a, const SystemConfig& cfg);

/// Candidate actions: per-budget power suprema crossed with every affordable d.
std::vector<Action> action_grid(const State& s, const SystemConfig& cfg);

class OnlinePolicy {
public:
    OnlinePolicy(long e_max_tx, long e_max_rc);

    long e_max_tx() const noexcept { return e_max_tx_; }
    long e_max_rc() const noexcept { return e_max_rc_; }
    std::size_t num_states() const noexcept { return actions_.size(); }
    std::size_t index(const State& s) const;
    State state(std::size_t i) const;

    const Action& operator()(const State& s) const { return actions_[index(s)]; }
    Action& operator[](const State& s) { return actions_[index(s)]; }
    const Action& at(std::size_t i) const { return actions_.at(i); }
    Action& at(std::size_t i) { return actions_.at(i); }

    /// Throws ContractViolation naming the first infeasible state.
    void check_feasible(const SystemConfig& cfg) const;

private:
    long e_max_tx_, e_max_rc_;
    std::vector<Action> actions_;
};

struct PolicyEvaluation {
    double gain = 0.0;
    std::vector<double> steady_state; ///< indexed like OnlinePolicy
    std::vector<double> bias;         ///< anchored at (0,0); empty when the chain is not unichain
};

PolicyEvaluation evaluate_policy(const OnlinePolicy& policy, const SystemConfig& cfg);

struct OnlineSolution {
    OnlinePolicy policy;
    PolicyEvaluation evaluation;
    std::vector<double> gain_history; ///< gain after each evaluation step
    int iterations = 0;
    bool used_value_iteration = false;
};

struct SolverOptions {
    int max_iterations = 1000;
    double rvi_tolerance = 1e-9;
    long rvi_max_sweeps = 2000000;
};

/// Average-reward policy iteration over action_grid.
OnlineSolution policy_iteration(const SystemConfig& cfg, const SolverOptions& opts = {});

/**
 * Precomputed MDP tables shared by the solver and the brute-force test oracle.
 * actions[s] lists the grid actions for state index s.
 */
struct EnergyMdp {
    explicit EnergyMdp(const SystemConfig& cfg);

    SystemConfig cfg;
    long n_tx, n_rc;
    std::vector<std::vector<Action>> actions;
    std::vector<std::vector<double>> reward;      ///< g(rho) per listed action
    std::vector<std::vector<std::size_t>> post;   ///< post_decision index per listed action

    std::size_t num_states() const { return static_cast<std::size_t>(n_tx * n_rc); }
    State state(std::size_t i) const { return {static_cast<long>(i) / n_rc, static_cast<long>(i) % n_rc}; }
    std::size_t index(const State& s) const { return static_cast<std::size_t>(s.e_tx * n_rc + s.e_rc); }

    /// Battery levels after the action, before arrivals (clamped at capacity).
    State post_decision(const State& s, const Action& a) const;

    /// kernel_tx(y, e) = P(min(y + B_tx, e_max_tx) = e), likewise for the receiver.
    std::vector<double> kernel_tx, kernel_rc;
};

} // namespace ehet
