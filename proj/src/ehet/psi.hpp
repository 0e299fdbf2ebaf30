#pragma once

#include "ehet/consumption.hpp"

#include <span>
#include <vector>

namespace ehet {

/**
 * Auxiliary cost curve Psi(P) <= q(P) on [0, rho_max] such that g(Psi^{-1}(x)) is concave.
 *
 * Stored as contiguous pieces in increasing P. A piece either copies q, follows a straight
 * chord of the reward/energy envelope (Psi(P) = x_lo + (g(P) - g_lo) / slope), or is linear
 * in P between its endpoints.
 */
class PsiFunction {
public:
    enum class PieceKind { CopyOfCost, EnvelopeChord, LinearInPower };

    struct Piece {
        PieceKind kind;
        double p_lo, p_hi; ///< power interval
        double x_lo, x_hi; ///< Psi at the interval ends
        double g_lo, g_hi; ///< reward at the interval ends

        /// Slope of g(Psi^{-1}(x)) along an EnvelopeChord piece.
        double chord_slope() const { return (g_hi - g_lo) / (x_hi - x_lo); }
    };

    PsiFunction(ConsumptionModel q, RewardFunction g, double rho_max, std::vector<Piece> pieces);

    /// Psi(p) for 0 <= p <= rho_max; DomainError outside.
    double operator()(double p) const;

    /// Largest P with Psi(P) <= x. Energies above Psi(rho_max) map to rho_max.
    double inverse(double x) const;

    double rho_max() const noexcept { return rho_max_; }
    double max_energy() const noexcept { return pieces_.back().x_hi; }
    std::span<const Piece> pieces() const noexcept { return pieces_; }
    const ConsumptionModel& cost() const noexcept { return q_; }
    const RewardFunction& reward() const noexcept { return g_; }

    /// True when Psi is q itself (a single copy piece).
    bool is_cost() const noexcept;

    /// First envelope chord, or nullptr if none.
    const Piece* first_chord() const noexcept;

private:
    const Piece& piece_for_power(double p) const;

    ConsumptionModel q_;
    RewardFunction g_;
    double rho_max_;
    std::vector<Piece> pieces_;
};

/**
 * Psi whose reward curve g(Psi^{-1}) is the upper concave envelope of {(q(P), g(P))},
 * computed from `samples` grid points with tangent points refined off-grid.
 * Returns Psi = q when that curve is already concave. Throws ConstructionError on a
 * degenerate curve.
 */
PsiFunction build_psi(const ConsumptionModel& q, const RewardFunction& g, double rho_max,
                      int samples = 10000);

/// Psi = q, without checking that g(q^{-1}) is concave.
PsiFunction cost_psi(const ConsumptionModel& q, const RewardFunction& g, double rho_max);

/// Psi(P) = q(rho_max) / rho_max * P. Valid whenever q is concave.
PsiFunction linear_psi(const ConsumptionModel& q, const RewardFunction& g, double rho_max);

} // namespace ehet
