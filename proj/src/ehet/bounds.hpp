#pragma once

#include "ehet/arrivals.hpp"
#include "ehet/consumption.hpp"
#include "ehet/psi.hpp"

namespace ehet {

struct BoundInput {
    PsiFunction psi_tx;
    PsiFunction psi_rc;
    double b_tx; ///< mean harvested quanta per slot
    double b_rc;
    double beta;
    RewardFunction g;
};

struct EtBound {
    double value = 0.0;
    double xi_star = 1.0; ///< fraction of the receiver's harvest it keeps
    double c_tx = 0.0;    ///< b_tx + beta b_rc (1 - xi*)
    double c_rc = 0.0;    ///< b_rc xi*
};

/// g(min{Psi_tx^{-1}(b_tx), Psi_rc^{-1}(b_rc)}).
double upper_bound_no_et(const BoundInput& in);

/// Bound with receiver-to-transmitter transfer, balancing the two devices at xi*.
EtBound upper_bound_et(const BoundInput& in);

/// xi* < 1 up to 1e-12.
bool et_beneficial(const BoundInput& in);

struct FiniteHorizonBounds {
    double no_et = 0.0;
    EtBound et;
};

/// Both bounds with the long-term means replaced by the trace averages.
FiniteHorizonBounds finite_horizon_bounds(const BoundInput& in, const ArrivalTrace& tx,
                                          const ArrivalTrace& rc);

} // namespace ehet
