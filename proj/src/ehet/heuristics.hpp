#pragma once

#include "ehet/online_mdp.hpp"

#include <functional>
#include <optional>

namespace ehet {

/// Greedy: the largest power both batteries allow; the receiver sends the rest.
Action greedy_policy(const State& s, const SystemConfig& cfg);

/// Balanced: equalize the two battery levels after the slot, then floor the transfer.
Action balanced_policy(const State& s, const SystemConfig& cfg);

/// Closed form of the balanced policy when both costs are q(P) = P.
Action balanced_policy_linear(const State& s, const SystemConfig& cfg);

/// Low-complexity policy built from the bound's balance point xi* and the receiver mean.
Action low_complexity_policy(const State& s, const SystemConfig& cfg, double xi_star, double b_rc);

/// Threshold policy optimal for constant arrivals without transfer.
Action corollary_policy_no_et(const State& s, const SystemConfig& cfg);

/// Threshold policy optimal for constant arrivals with transfer.
Action corollary_policy_et(const State& s, const SystemConfig& cfg, double xi_star);

/// Fixed power the corollary / low-complexity policies aim for (0 when none applies).
double corollary_target_no_et(const SystemConfig& cfg);
double corollary_target_et(const SystemConfig& cfg, double xi_star);

enum class HeuristicKind { Greedy, Balanced, LowComplexity, Corollary };

/// xi* of the ET bound with Psi = q for both devices.
double cost_balance_point(const SystemConfig& cfg);

/// A stateless heuristic as a function of the state (bound-dependent inputs precomputed).
std::function<Action(const State&)> heuristic(HeuristicKind kind, const SystemConfig& cfg);

/// Target power of the LowComplexity and Corollary rules; nullopt for state-driven rules.
std::optional<double> heuristic_target(HeuristicKind kind, const SystemConfig& cfg);

/// Tabulates any per-state rule over the full battery grid.
OnlinePolicy tabulate(const std::function<Action(const State&)>& rule, const SystemConfig& cfg);

} // namespace ehet
