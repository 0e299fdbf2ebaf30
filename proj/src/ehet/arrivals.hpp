#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace ehet {

/// Sequence of harvested quanta, one entry per slot.
struct ArrivalTrace {
    std::vector<long> quanta;
    double slot_seconds = 1.0;
    std::string label;

    double mean() const;
};

/// Distribution of harvested quanta per slot on {0, ..., b_max}.
class ArrivalProcess {
public:
    /// pmf[b] = P(B = b). Throws DomainError unless the pmf is valid with a positive mean.
    explicit ArrivalProcess(std::vector<double> pmf);

    long b_max() const noexcept { return static_cast<long>(pmf_.size()) - 1; }
    double mean() const noexcept { return mean_; }
    double pmf(long b) const { return b < 0 || b > b_max() ? 0.0 : pmf_[b]; }
    std::span<const double> pmf() const noexcept { return pmf_; }
    bool is_deterministic() const noexcept;

    /// Inverse-CDF draw using 53 random bits from gen.
    long draw(std::mt19937_64& gen) const;

private:
    std::vector<double> pmf_;
    std::vector<double> cdf_;
    double mean_ = 0.0;
};

ArrivalProcess make_deterministic(long b);
ArrivalProcess make_bernoulli(long b, double p);
/// pmf(b) proportional to r^b on {0..b_max}, with r chosen so the mean hits mean_target.
ArrivalProcess make_truncated_geometric(double mean_target, long b_max);
ArrivalProcess make_uniform(long b_max);
/// Normalized histogram of the trace over {0..max(trace)}.
ArrivalProcess make_empirical(const ArrivalTrace& trace);

/// The r solved by make_truncated_geometric (exposed for tests).
double truncated_geometric_ratio(double mean_target, long b_max);

ArrivalTrace sample(const ArrivalProcess& process, std::size_t k, std::mt19937_64& gen);
ArrivalTrace sample(const ArrivalProcess& process, std::size_t k, std::uint64_t seed);

} // namespace ehet
