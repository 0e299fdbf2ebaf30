#include "ehet/heuristics.hpp"

#include "ehet/bounds.hpp"
#include "ehet/errors.hpp"
#include "ehet/psi.hpp"

#include <algorithm>
#include <cmath>

namespace ehet {

namespace {

constexpr double kGuard = 1e-9;

double inv_tx(const SystemConfig& cfg, long j) { return cfg.cost_tx().inverse(std::max(j, 0L), cfg.rho_max); }
double inv_rc(const SystemConfig& cfg, long j) { return cfg.cost_rc().inverse(std::max(j, 0L), cfg.rho_max); }

// Continuous inverse clamped to the power range.
double cont_inv(const ConsumptionModel& q, double e, double rho_max) {
    return std::min(q.inverse(std::max(e, 0.0)), rho_max);
}

long round_half_away(double x) { return static_cast<long>(std::lround(x)); }

void require_state(const State& s, const SystemConfig& cfg) {
    if (s.e_tx < 0 || s.e_rc < 0 || s.e_tx > cfg.e_max_tx || s.e_rc > cfg.e_max_rc)
        throw DomainError("state outside the battery grid");
}

// Largest feasible power not above rho for the given transfer.
Action finish(const State& s, const SystemConfig& cfg, double rho, long d) {
    if (!cfg.transfer_enabled) d = 0;
    d = std::clamp(d, 0L, s.e_rc);
    rho = std::clamp(rho, 0.0, std::min({cfg.rho_max, inv_tx(cfg, s.e_tx), inv_rc(cfg, s.e_rc - d)}));
    return {rho, d};
}

} // namespace

Action greedy_policy(const State& s, const SystemConfig& cfg) {
    require_state(s, cfg);
    const double rho = std::min(inv_tx(cfg, s.e_tx), inv_rc(cfg, s.e_rc));
    const long d = cfg.transfer_enabled ? s.e_rc - cfg.cost_rc()(rho) : 0;
    return {rho, d};
}

Action balanced_policy(const State& s, const SystemConfig& cfg) {
    require_state(s, cfg);
    if (!cfg.transfer_enabled) return greedy_policy(s, cfg);
    const double etx = static_cast<double>(s.e_tx), erc = static_cast<double>(s.e_rc);
    const double beta = cfg.beta;
    const double rho_tx = cont_inv(cfg.q_tx, etx, cfg.rho_max);
    const auto power = [&](double d) { return std::min(rho_tx, cont_inv(cfg.q_rc, erc - d, cfg.rho_max)); };
    // Transmitter level minus receiver level after the slot; increasing in d.
    const auto imbalance = [&](double d) {
        const double p = power(d);
        return (etx + beta * d - cfg.q_tx(p)) - (erc - d - cfg.q_rc(p));
    };

    double d_bar;
    // Power fixed by the transmitter (or rho_max): the balance equation is linear in d.
    const double d_lin = (erc - etx + cfg.q_tx(rho_tx) - cfg.q_rc(rho_tx)) / (1.0 + beta);
    if (d_lin >= 0.0 && d_lin <= erc && cfg.q_rc(rho_tx) <= erc - d_lin + kGuard) {
        d_bar = d_lin;
    } else if (imbalance(0.0) >= 0.0) {
        d_bar = 0.0;
    } else if (imbalance(erc) <= 0.0) {
        d_bar = erc;
    } else {
        double lo = 0.0, hi = erc;
        while (hi - lo > 1e-12 * std::max(1.0, erc)) {
            const double mid = 0.5 * (lo + hi);
            (imbalance(mid) < 0.0 ? lo : hi) = mid;
        }
        d_bar = 0.5 * (lo + hi);
        const double nearest = std::round(d_bar);
        if (std::abs(d_bar - nearest) < 1e-6 && std::abs(imbalance(nearest)) < 1e-9 * std::max(1.0, erc))
            d_bar = nearest;
    }
    const long d = static_cast<long>(std::floor(d_bar + kGuard));
    return finish(s, cfg, power(d_bar), d);
}

Action balanced_policy_linear(const State& s, const SystemConfig& cfg) {
    require_state(s, cfg);
    long d = 0;
    if (cfg.transfer_enabled && s.e_rc > s.e_tx)
        d = static_cast<long>(std::floor(static_cast<double>(s.e_rc - s.e_tx) / (1.0 + cfg.beta) + kGuard));
    const double rho = std::min({static_cast<double>(s.e_tx), static_cast<double>(s.e_rc - d), cfg.rho_max});
    return {rho, d};
}

Action low_complexity_policy(const State& s, const SystemConfig& cfg, double xi_star, double b_rc) {
    require_state(s, cfg);
    const double target = static_cast<double>(round_half_away(cont_inv(cfg.q_rc, b_rc * xi_star, cfg.rho_max)));
    const double rho = std::min({inv_tx(cfg, s.e_tx), inv_rc(cfg, s.e_rc), target, cfg.rho_max});
    const long used = cfg.cost_rc()(rho);
    long d = 0;
    if (cfg.transfer_enabled) d = std::max(0L, std::min(s.e_rc - used, round_half_away(b_rc) - used));
    return {rho, d};
}

double corollary_target_no_et(const SystemConfig& cfg) {
    return std::min(cont_inv(cfg.q_tx, cfg.arr_tx.mean(), cfg.rho_max),
                    cont_inv(cfg.q_rc, cfg.arr_rc.mean(), cfg.rho_max));
}

double corollary_target_et(const SystemConfig& cfg, double xi_star) {
    return cont_inv(cfg.q_rc, cfg.arr_rc.mean() * xi_star, cfg.rho_max);
}

Action corollary_policy_no_et(const State& s, const SystemConfig& cfg) {
    require_state(s, cfg);
    const double v = corollary_target_no_et(cfg);
    if (cfg.cost_tx()(v) <= s.e_tx && cfg.cost_rc()(v) <= s.e_rc) return {v, 0};
    return {0.0, 0};
}

Action corollary_policy_et(const State& s, const SystemConfig& cfg, double xi_star) {
    require_state(s, cfg);
    if (!cfg.transfer_enabled) return corollary_policy_no_et(s, cfg);
    const double v = corollary_target_et(cfg, xi_star);
    const double b_rc = cfg.arr_rc.mean();
    double rho = 0.0;
    if (cfg.cost_rc()(v) <= s.e_rc && cfg.cost_tx()(v) <= s.e_tx) rho = v;
    long d = 0;
    if (static_cast<double>(s.e_rc) + kGuard >= b_rc) {
        const long budget = static_cast<long>(std::floor(b_rc + kGuard));
        d = std::clamp(budget - cfg.cost_rc()(rho), 0L, s.e_rc - cfg.cost_rc()(rho));
    }
    return {rho, d};
}

double cost_balance_point(const SystemConfig& cfg) {
    const BoundInput in{cost_psi(cfg.q_tx, cfg.g, cfg.rho_max), cost_psi(cfg.q_rc, cfg.g, cfg.rho_max),
                        cfg.arr_tx.mean(), cfg.arr_rc.mean(), cfg.beta, cfg.g};
    return upper_bound_et(in).xi_star;
}

std::function<Action(const State&)> heuristic(HeuristicKind kind, const SystemConfig& cfg) {
    switch (kind) {
    case HeuristicKind::Greedy: return [cfg](const State& s) { return greedy_policy(s, cfg); };
    case HeuristicKind::Balanced: return [cfg](const State& s) { return balanced_policy(s, cfg); };
    case HeuristicKind::LowComplexity: {
        const double xi = cost_balance_point(cfg);
        const double b_rc = cfg.arr_rc.mean();
        return [cfg, xi, b_rc](const State& s) { return low_complexity_policy(s, cfg, xi, b_rc); };
    }
    case HeuristicKind::Corollary: {
        if (!cfg.transfer_enabled) return [cfg](const State& s) { return corollary_policy_no_et(s, cfg); };
        const double xi = cost_balance_point(cfg);
        return [cfg, xi](const State& s) { return corollary_policy_et(s, cfg, xi); };
    }
    }
    throw DomainError("unknown heuristic");
}

std::optional<double> heuristic_target(HeuristicKind kind, const SystemConfig& cfg) {
    switch (kind) {
    case HeuristicKind::Greedy:
    case HeuristicKind::Balanced: return std::nullopt;
    case HeuristicKind::LowComplexity:
        return std::min(cfg.rho_max, static_cast<double>(round_half_away(
                                         cont_inv(cfg.q_rc, cfg.arr_rc.mean() * cost_balance_point(cfg), cfg.rho_max))));
    case HeuristicKind::Corollary:
        if (!cfg.transfer_enabled) return corollary_target_no_et(cfg);
        return corollary_target_et(cfg, cost_balance_point(cfg));
    }
    return std::nullopt;
}

OnlinePolicy tabulate(const std::function<Action(const State&)>& rule, const SystemConfig& cfg) {
    OnlinePolicy pol(cfg.e_max_tx, cfg.e_max_rc);
    for (std::size_t i = 0; i < pol.num_states(); ++i) pol.at(i) = rule(pol.state(i));
    pol.check_feasible(cfg);
    return pol;
}

} // namespace ehet
