#include "ehet/bounds.hpp"

#include "ehet/errors.hpp"

#include <algorithm>
#include <cmath>

namespace ehet {

namespace {

void validate(const BoundInput& in) {
    if (!(in.b_tx >= 0.0) || !(in.b_rc >= 0.0) || !std::isfinite(in.b_tx) || !std::isfinite(in.b_rc))
        throw DomainError("bound input needs finite nonnegative means");
    if (!(in.beta >= 0.0 && in.beta <= 1.0)) throw DomainError("beta must lie in [0, 1]");
}

} // namespace

double upper_bound_no_et(const BoundInput& in) {
    validate(in);
    return in.g(std::min(in.psi_tx.inverse(in.b_tx), in.psi_rc.inverse(in.b_rc)));
}

EtBound upper_bound_et(const BoundInput& in) {
    validate(in);
    const auto c_tx = [&](double xi) { return in.b_tx + in.beta * in.b_rc * (1.0 - xi); };
    const auto c_rc = [&](double xi) { return in.b_rc * xi; };
    const auto f_tx = [&](double xi) { return in.psi_tx.inverse(c_tx(xi)); };
    const auto f_rc = [&](double xi) { return in.psi_rc.inverse(c_rc(xi)); };

    double xi = 1.0;
    if (f_rc(1.0) > f_tx(1.0)) {
        // f_rc - f_tx is nondecreasing in xi, nonpositive at 0 and positive at 1.
        double lo = 0.0, hi = 1.0;
        // Run well past the 1e-10 target so integer-valued energies stay exact downstream.
        while (hi - lo >= 1e-15) {
            const double mid = 0.5 * (lo + hi);
            if (f_rc(mid) > f_tx(mid))
                hi = mid;
            else
                lo = mid;
        }
        xi = 0.5 * (lo + hi);
    }
    EtBound out;
    out.xi_star = xi;
    out.c_tx = c_tx(xi);
    out.c_rc = c_rc(xi);
    out.value = in.g(std::min(f_tx(xi), f_rc(xi)));
    return out;
}

bool et_beneficial(const BoundInput& in) { return upper_bound_et(in).xi_star < 1.0 - 1e-12; }

FiniteHorizonBounds finite_horizon_bounds(const BoundInput& in, const ArrivalTrace& tx,
                                          const ArrivalTrace& rc) {
    if (tx.quanta.empty() || rc.quanta.empty()) throw DomainError("finite-horizon bounds need traces");
    BoundInput local = in;
    local.b_tx = tx.mean();
    local.b_rc = rc.mean();
    return {upper_bound_no_et(local), upper_bound_et(local)};
}

} // namespace ehet
