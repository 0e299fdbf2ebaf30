#pragma once

#include "ehet/consumption.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace ehet {

/**
 * Finite-horizon problem with known arrivals. b_tx[j-1] is the energy harvested during slot j,
 * usable from slot j+1; only the first K-1 entries matter.
 */
struct OfflineInstance {
    int horizon = 1;
    std::vector<double> b_tx, b_rc;
    ConsumptionModel q_tx = ConsumptionModel::linear(1.0);
    ConsumptionModel q_rc = ConsumptionModel::linear(1.0);
    double beta = 0.0;
    RewardFunction g{1.0};
    std::optional<double> e_max_tx, e_max_rc; ///< nullopt: unlimited
    double e_init_tx = 0.0, e_init_rc = 0.0;
    std::optional<double> rho_max;            ///< optional cap on P_k
    bool transfer_enabled = true;

    void validate() const;
};

enum class Device { Tx, Rc };

/**
 * sum_{j=i..k} q_coeff[j] Q_j + d_coeff[j] D_j <= rhs, where Q_j is the device's consumed energy
 * (indices 0-based in the vectors, 1-based in i and k).
 */
struct CumulativeConstraint {
    Device device;
    int i, k;
    std::vector<double> q_coeff, d_coeff;
    double rhs;
};

/// Every battery constraint for 1 <= i <= k <= K and both devices: K(K+1) rows.
std::vector<CumulativeConstraint> build_finite_constraints(const OfflineInstance& inst);

/**
 * The solver works with the energies spent per slot, a_k at the transmitter and b_k at the
 * receiver, and maximizes sum min{h_tx(a_k), h_rc(b_k)} with h = g o q^{-1}. When some h is
 * not concave it is replaced by its concave envelope, which makes upper_bound a relaxation
 * bound and leaves the plan uncertified.
 */
struct OfflinePlan {
    std::vector<double> power, transfer;
    double objective = 0.0;    ///< (1/K) sum g(P_k) of the returned plan
    double upper_bound = 0.0;  ///< no plan of the instance does better (per slot)
    double residual = 0.0;     ///< max battery violation in the continuous replay
    double duality_gap = 0.0;  ///< barrier gap m/t summed over slots
    bool certified = false;    ///< upper_bound - objective <= 1e-6 relative
    bool convexified = false;  ///< a reward curve was replaced by its concave envelope
    int newton_steps = 0;
    std::vector<double> e_tx, e_rc; ///< battery level at the start of each slot
};

struct PlanEvaluation {
    double objective = 0.0;
    double max_violation = 0.0;
    int first_violation_slot = 0; ///< 1-based; 0 when feasible
    std::vector<double> e_tx, e_rc;
};

OfflinePlan solve_offline_infinite(const OfflineInstance& inst);
OfflinePlan solve_offline_finite(const OfflineInstance& inst);

/// Continuous, min-clamped replay of (P, D).
PlanEvaluation evaluate_plan(const std::vector<double>& power, const std::vector<double>& transfer,
                             const OfflineInstance& inst);

/// Whitespace-separated columns: slot P D E_tx E_rc.
void write_plan(std::ostream& os, const OfflinePlan& plan);

} // namespace ehet
