#include "ehet/arrivals.hpp"

#include "ehet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ehet {

double ArrivalTrace::mean() const {
    if (quanta.empty()) throw DomainError("empty arrival trace");
    long double s = 0;
    for (long v : quanta) s += v;
    return static_cast<double>(s / quanta.size());
}

ArrivalProcess::ArrivalProcess(std::vector<double> pmf) : pmf_(std::move(pmf)) {
    if (pmf_.empty()) throw DomainError("arrival pmf is empty");
    double total = 0.0;
    for (std::size_t b = 0; b < pmf_.size(); ++b) {
        if (!std::isfinite(pmf_[b]) || pmf_[b] < 0.0)
            throw DomainError("arrival pmf has a negative or non-finite entry");
        total += pmf_[b];
        mean_ += static_cast<double>(b) * pmf_[b];
    }
    if (std::abs(total - 1.0) > 1e-12) throw DomainError("arrival pmf does not sum to 1");
    if (!(mean_ > 0.0)) throw DomainError("arrival mean must be positive");
    while (pmf_.size() > 1 && pmf_.back() == 0.0) pmf_.pop_back();
    cdf_.resize(pmf_.size());
    std::partial_sum(pmf_.begin(), pmf_.end(), cdf_.begin());
    cdf_.back() = 1.0;
}

bool ArrivalProcess::is_deterministic() const noexcept {
    return std::count_if(pmf_.begin(), pmf_.end(), [](double p) { return p > 0.0; }) == 1;
}

long ArrivalProcess::draw(std::mt19937_64& gen) const {
    const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return std::min<long>(it - cdf_.begin(), b_max());
}

ArrivalProcess make_deterministic(long b) {
    if (b < 1) throw DomainError("deterministic arrivals need b >= 1");
    std::vector<double> pmf(b + 1, 0.0);
    pmf[b] = 1.0;
    return ArrivalProcess(std::move(pmf));
}

ArrivalProcess make_bernoulli(long b, double p) {
    if (b < 1) throw DomainError("Bernoulli arrivals need b >= 1");
    if (!(p > 0.0 && p <= 1.0)) throw DomainError("Bernoulli arrivals need 0 < p <= 1");
    std::vector<double> pmf(b + 1, 0.0);
    pmf[0] = 1.0 - p;
    pmf[b] += p;
    return ArrivalProcess(std::move(pmf));
}

namespace {

// pmf proportional to exp(t b), normalized in a numerically safe way.
std::vector<double> geometric_weights(double t, long b_max) {
    std::vector<double> w(b_max + 1);
    const double top = t > 0 ? t * b_max : 0.0;
    double total = 0.0;
    for (long b = 0; b <= b_max; ++b) total += (w[b] = std::exp(t * b - top));
    for (double& v : w) v /= total;
    return w;
}

double weights_mean(const std::vector<double>& w) {
    double m = 0.0;
    for (std::size_t b = 0; b < w.size(); ++b) m += static_cast<double>(b) * w[b];
    return m;
}

} // namespace

double truncated_geometric_ratio(double mean_target, long b_max) {
    if (b_max < 1) throw DomainError("truncated geometric needs b_max >= 1");
    if (!(mean_target > 0.0 && mean_target < static_cast<double>(b_max)))
        throw DomainError("truncated geometric mean must lie in (0, b_max)");
    if (mean_target == 0.5 * static_cast<double>(b_max)) return 1.0;
    // The mean is increasing in t = ln r.
    double lo = -60.0, hi = 60.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (weights_mean(geometric_weights(mid, b_max)) < mean_target)
            lo = mid;
        else
            hi = mid;
    }
    return std::exp(0.5 * (lo + hi));
}

ArrivalProcess make_truncated_geometric(double mean_target, long b_max) {
    const double r = truncated_geometric_ratio(mean_target, b_max);
    auto w = geometric_weights(std::log(r), b_max);
    return ArrivalProcess(std::move(w));
}

ArrivalProcess make_uniform(long b_max) {
    if (b_max < 1) throw DomainError("uniform arrivals need b_max >= 1");
    return ArrivalProcess(std::vector<double>(b_max + 1, 1.0 / static_cast<double>(b_max + 1)));
}

ArrivalProcess make_empirical(const ArrivalTrace& trace) {
    if (trace.quanta.empty()) throw DomainError("empirical arrivals need a nonempty trace");
    const long top = *std::max_element(trace.quanta.begin(), trace.quanta.end());
    if (*std::min_element(trace.quanta.begin(), trace.quanta.end()) < 0)
        throw DomainError("trace has negative entries");
    std::vector<double> counts(top + 1, 0.0);
    for (long v : trace.quanta) counts[v] += 1.0;
    for (double& c : counts) c /= static_cast<double>(trace.quanta.size());
    return ArrivalProcess(std::move(counts));
}

ArrivalTrace sample(const ArrivalProcess& process, std::size_t k, std::mt19937_64& gen) {
    if (k == 0) throw DomainError("sample needs k >= 1");
    ArrivalTrace t;
    t.quanta.resize(k);
    for (auto& v : t.quanta) v = process.draw(gen);
    return t;
}

ArrivalTrace sample(const ArrivalProcess& process, std::size_t k, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    return sample(process, k, gen);
}

} // namespace ehet
