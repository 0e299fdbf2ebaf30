#include "ehet/consumption.hpp"

#include "ehet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ehet {

namespace {

constexpr double kQuantumGuard = 1e-9;

void require(bool ok, const char* what) {
    if (!ok) throw DomainError(what);
}

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

// Largest x in [lo, hi] with pred(x), given pred(lo) and !pred(hi).
template <class Pred>
double bisect_last_true(double lo, double hi, Pred pred) {
    for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (pred(mid))
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

} // namespace

std::string_view to_string(ConsumptionKind kind) {
    switch (kind) {
    case ConsumptionKind::Linear: return "linear";
    case ConsumptionKind::Log: return "log";
    case ConsumptionKind::PiecewiseLinearCircuitry: return "piecewise_linear";
    case ConsumptionKind::PiecewiseLogCircuitry: return "piecewise_log";
    }
    return "unknown";
}

ConsumptionKind consumption_kind_from_string(std::string_view name) {
    if (name == "linear") return ConsumptionKind::Linear;
    if (name == "log") return ConsumptionKind::Log;
    if (name == "piecewise_linear") return ConsumptionKind::PiecewiseLinearCircuitry;
    if (name == "piecewise_log") return ConsumptionKind::PiecewiseLogCircuitry;
    throw DomainError("unknown consumption kind '" + std::string(name) + "'");
}

ConsumptionModel ConsumptionModel::linear(double sigma) {
    require(finite_positive(sigma), "linear consumption needs sigma > 0");
    ConsumptionModel m;
    m.kind_ = ConsumptionKind::Linear;
    m.sigma_ = sigma;
    return m;
}

ConsumptionModel ConsumptionModel::log(double alpha, double lambda) {
    require(finite_positive(alpha), "log consumption needs alpha > 0");
    require(finite_positive(lambda), "log consumption needs lambda > 0");
    ConsumptionModel m;
    m.kind_ = ConsumptionKind::Log;
    m.alpha_ = alpha;
    m.lambda_ = lambda;
    return m;
}

ConsumptionModel ConsumptionModel::piecewise_linear(double zeta, double p_n, double sigma) {
    require(std::isfinite(zeta) && zeta >= 0.0, "circuitry cost zeta must be >= 0");
    require(finite_positive(p_n), "breakpoint p_n must be > 0");
    require(finite_positive(sigma), "slope sigma must be > 0");
    ConsumptionModel m;
    m.kind_ = ConsumptionKind::PiecewiseLinearCircuitry;
    m.zeta_ = zeta;
    m.p_n_ = p_n;
    m.sigma_ = sigma;
    return m;
}

ConsumptionModel ConsumptionModel::piecewise_log(double zeta, double p_n, double alpha,
                                                 double lambda) {
    require(std::isfinite(zeta) && zeta >= 0.0, "circuitry cost zeta must be >= 0");
    require(finite_positive(p_n), "breakpoint p_n must be > 0");
    require(finite_positive(alpha), "log consumption needs alpha > 0");
    require(finite_positive(lambda), "log consumption needs lambda > 0");
    // the ramp must be at least as steep as the log part for q to stay concave
    require((zeta + p_n) / p_n >= alpha * lambda / (1.0 + lambda * p_n),
            "piecewise log model is not concave at p_n");
    ConsumptionModel m;
    m.kind_ = ConsumptionKind::PiecewiseLogCircuitry;
    m.zeta_ = zeta;
    m.p_n_ = p_n;
    m.alpha_ = alpha;
    m.lambda_ = lambda;
    return m;
}

double ConsumptionModel::operator()(double p) const {
    if (!std::isfinite(p) || p < 0.0)
        throw DomainError("consumption evaluated at invalid power " + std::to_string(p));
    switch (kind_) {
    case ConsumptionKind::Linear: return sigma_ * p;
    case ConsumptionKind::Log: return alpha_ * std::log1p(lambda_ * p);
    case ConsumptionKind::PiecewiseLinearCircuitry:
        if (p < p_n_) return (zeta_ + sigma_ * p_n_) / p_n_ * p;
        return zeta_ + sigma_ * p;
    case ConsumptionKind::PiecewiseLogCircuitry:
        if (p < p_n_) return (zeta_ + p_n_) / p_n_ * p;
        return zeta_ + p_n_ - alpha_ * std::log1p(lambda_ * p_n_) + alpha_ * std::log1p(lambda_ * p);
    }
    return 0.0;
}

double ConsumptionModel::derivative(double p) const {
    switch (kind_) {
    case ConsumptionKind::Linear: return sigma_;
    case ConsumptionKind::Log: return alpha_ * lambda_ / (1.0 + lambda_ * p);
    case ConsumptionKind::PiecewiseLinearCircuitry:
        return p < p_n_ ? (zeta_ + sigma_ * p_n_) / p_n_ : sigma_;
    case ConsumptionKind::PiecewiseLogCircuitry:
        return p < p_n_ ? (zeta_ + p_n_) / p_n_ : alpha_ * lambda_ / (1.0 + lambda_ * p);
    }
    return 0.0;
}

double ConsumptionModel::second_derivative(double p) const {
    const auto log_curvature = [&] {
        const double s = 1.0 + lambda_ * p;
        return -alpha_ * lambda_ * lambda_ / (s * s);
    };
    switch (kind_) {
    case ConsumptionKind::Linear:
    case ConsumptionKind::PiecewiseLinearCircuitry: return 0.0;
    case ConsumptionKind::Log: return log_curvature();
    case ConsumptionKind::PiecewiseLogCircuitry: return p < p_n_ ? 0.0 : log_curvature();
    }
    return 0.0;
}

double ConsumptionModel::inverse(double energy) const {
    if (!std::isfinite(energy) || energy < 0.0)
        throw DomainError("cannot invert consumption at energy " + std::to_string(energy));
    switch (kind_) {
    case ConsumptionKind::Linear: return energy / sigma_;
    case ConsumptionKind::Log: return std::expm1(energy / alpha_) / lambda_;
    case ConsumptionKind::PiecewiseLinearCircuitry: {
        const double knee = zeta_ + sigma_ * p_n_;
        if (energy < knee) return energy * p_n_ / knee;
        return (energy - zeta_) / sigma_;
    }
    case ConsumptionKind::PiecewiseLogCircuitry: {
        const double knee = zeta_ + p_n_;
        if (energy < knee) return energy * p_n_ / knee;
        const double offset = knee - alpha_ * std::log1p(lambda_ * p_n_);
        return std::expm1((energy - offset) / alpha_) / lambda_;
    }
    }
    return 0.0;
}

RewardFunction::RewardFunction(double lambda) : lambda_(lambda) {
    require(finite_positive(lambda), "reward scaling lambda must be > 0");
}

double RewardFunction::operator()(double x) const { return std::log1p(lambda_ * x); }

double RewardFunction::derivative(double x) const { return lambda_ / (1.0 + lambda_ * x); }

double RewardFunction::second_derivative(double x) const {
    const double s = 1.0 + lambda_ * x;
    return -lambda_ * lambda_ / (s * s);
}

double RewardFunction::inverse(double reward) const { return std::expm1(reward) / lambda_; }

double consume(const ConsumptionModel& model, double p, double rho_max) {
    if (p > rho_max)
        throw DomainError("power " + std::to_string(p) + " exceeds rho_max " +
                          std::to_string(rho_max));
    return model(p);
}

long quantum_ceil(double energy) { return static_cast<long>(std::ceil(energy - kQuantumGuard)); }

long quantum_floor(double energy) { return static_cast<long>(std::floor(energy + kQuantumGuard)); }

long transferred_quanta(double beta, long d, Quantization mode) {
    const double energy = beta * static_cast<double>(d);
    return mode == Quantization::Lower ? quantum_floor(energy) : quantum_ceil(energy);
}

long QuantizedCost::operator()(double p) const {
    const double q = model_(p);
    return mode_ == Quantization::Lower ? quantum_ceil(q) : quantum_floor(q);
}

double QuantizedCost::inverse(long j, double rho_max) const {
    if (j < 0) throw DomainError("inverse_discrete needs j >= 0, got " + std::to_string(j));
    if (!(rho_max >= 0.0)) throw DomainError("rho_max must be >= 0");
    const auto fits = [&](double p) { return (*this)(p) <= j; };
    if (std::isfinite(rho_max) && fits(rho_max)) return rho_max;

    // Closed-form candidate first; the guard band in quantum_ceil makes it exact in practice.
    const double target = mode_ == Quantization::Lower ? static_cast<double>(j)
                                                       : static_cast<double>(j + 1);
    // In floor mode the preimage is open at q = j + 1, so the candidate always fails and
    // bisection approaches the boundary from below.
    const double candidate = std::min(model_.inverse(target), rho_max);
    if (fits(candidate)) return candidate;
    return bisect_last_true(0.0, candidate, fits);
}

QuantizedCost discretize(const ConsumptionModel& model, Quantization mode) {
    return QuantizedCost(model, mode);
}

double inverse_discrete(const ConsumptionModel& model, long j, double rho_max, Quantization mode) {
    return QuantizedCost(model, mode).inverse(j, rho_max);
}

} // namespace ehet
