#pragma once

#include <limits>
#include <string>
#include <string_view>

namespace ehet {

/// All powers and energies are real numbers in energy-quantum units.
enum class ConsumptionKind { Linear, Log, PiecewiseLinearCircuitry, PiecewiseLogCircuitry };

std::string_view to_string(ConsumptionKind kind);
ConsumptionKind consumption_kind_from_string(std::string_view name);

/**
 * Energy cost q(P) of operating at power P.
 *
 *   Linear                    q(P) = sigma * P
 *   Log                       q(P) = alpha * ln(1 + lambda * P)
 *   PiecewiseLinearCircuitry  q(P) = (zeta + sigma*p_n) / p_n * P          for P < p_n
 *                                    zeta + sigma * P                      otherwise
 *   PiecewiseLogCircuitry     q(P) = (zeta + p_n) / p_n * P                for P < p_n
 *                                    zeta + p_n - alpha ln(1 + lambda p_n)
 *                                         + alpha ln(1 + lambda P)         otherwise
 *
 * Every kind is continuous, strictly increasing and concave with q(0) = 0.
 */
class ConsumptionModel {
public:
    static ConsumptionModel linear(double sigma);
    static ConsumptionModel log(double alpha, double lambda);
    static ConsumptionModel piecewise_linear(double zeta, double p_n, double sigma = 1.0);
    static ConsumptionModel piecewise_log(double zeta, double p_n, double alpha, double lambda);

    ConsumptionKind kind() const noexcept { return kind_; }
    double sigma() const noexcept { return sigma_; }
    double alpha() const noexcept { return alpha_; }
    double lambda() const noexcept { return lambda_; }
    double zeta() const noexcept { return zeta_; }
    double p_n() const noexcept { return p_n_; }

    /// q(p). Throws DomainError for negative or non-finite p.
    double operator()(double p) const;
    /// Right derivative q'(p+).
    double derivative(double p) const;
    /// q''(p) away from the breakpoint (0 on linear pieces).
    double second_derivative(double p) const;
    /// Continuous inverse q^{-1}(energy) for energy >= 0.
    double inverse(double energy) const;

    bool operator==(const ConsumptionModel&) const = default;

private:
    ConsumptionModel() = default;

    ConsumptionKind kind_ = ConsumptionKind::Linear;
    double sigma_ = 1.0;
    double alpha_ = 0.0;
    double lambda_ = 0.0;
    double zeta_ = 0.0;
    double p_n_ = 0.0;
};

/// Reward per slot g(x) = ln(1 + lambda x).
class RewardFunction {
public:
    explicit RewardFunction(double lambda);

    double lambda() const noexcept { return lambda_; }
    double operator()(double x) const;
    double derivative(double x) const;
    double second_derivative(double x) const;
    double inverse(double reward) const;

    bool operator==(const RewardFunction&) const = default;

private:
    double lambda_;
};

/// q(p) with the domain check 0 <= p <= rho_max.
double consume(const ConsumptionModel& model, double p,
               double rho_max = std::numeric_limits<double>::infinity());

/**
 * Lower: costs are rounded up and transferred energy down (a pessimistic model).
 * Upper: the reverse rounding.
 */
enum class Quantization { Lower, Upper };

/// Round-up/round-down to whole quanta with a 1e-9 guard band against floating-point noise.
long quantum_ceil(double energy);
long quantum_floor(double energy);

/// Quanta arriving at the transmitter when the receiver sends d quanta with efficiency beta.
long transferred_quanta(double beta, long d, Quantization mode = Quantization::Lower);

/// Integer-valued cost q_d(p) = ceil(q(p)) (or floor, for Quantization::Upper).
class QuantizedCost {
public:
    QuantizedCost(ConsumptionModel model, Quantization mode = Quantization::Lower)
        : model_(model), mode_(mode) {}

    long operator()(double p) const;

    /**
     * Supremum of {P in [0, rho_max] : q_d(P) <= j}. Returns rho_max when
     * q_d(rho_max) <= j. Throws DomainError for j < 0.
     */
    double inverse(long j, double rho_max) const;

    const ConsumptionModel& model() const noexcept { return model_; }
    Quantization mode() const noexcept { return mode_; }

private:
    ConsumptionModel model_;
    Quantization mode_;
};

QuantizedCost discretize(const ConsumptionModel& model, Quantization mode = Quantization::Lower);

double inverse_discrete(const ConsumptionModel& model, long j, double rho_max,
                        Quantization mode = Quantization::Lower);

} // namespace ehet
