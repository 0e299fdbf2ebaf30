#include "ehet/consumption.hpp"
#include "ehet/errors.hpp"
#include "ehet/psi.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace ehet;

namespace {

std::vector<ConsumptionModel> all_models() {
    return {ConsumptionModel::linear(1.0), ConsumptionModel::linear(2.5), ConsumptionModel::log(4.0, 0.1),
            ConsumptionModel::piecewise_linear(7.0, 0.01), ConsumptionModel::piecewise_log(7.0, 0.01, 4.0, 0.1)};
}

} // namespace

TEST(Consumption, Examples) {
    EXPECT_DOUBLE_EQ(ConsumptionModel::linear(1.0)(5.0), 5.0);
    const auto rc = ConsumptionModel::piecewise_log(7.0, 0.01, 4.0, 0.1);
    EXPECT_NEAR(rc(23.0), 7.0 + 0.01 - 4.0 * std::log(1.001) + 4.0 * std::log(3.3), 1e-12);
    EXPECT_NEAR(rc(23.0), 11.7817, 1e-4);
    for (const auto& m : all_models()) EXPECT_EQ(m(0.0), 0.0);
}

TEST(Consumption, BreakpointIsContinuous) {
    const auto tx = ConsumptionModel::piecewise_linear(7.0, 0.01);
    EXPECT_NEAR(tx(0.01), 7.01, 1e-12);
    EXPECT_NEAR(tx(0.01 - 1e-12), 7.01, 1e-8);
    EXPECT_DOUBLE_EQ(tx(1.0), 8.0);
}

TEST(Consumption, RejectsOutOfDomain) {
    const auto m = ConsumptionModel::linear(1.0);
    EXPECT_THROW(m(-1.0), DomainError);
    EXPECT_THROW(m(NAN), DomainError);
    EXPECT_THROW(consume(m, 3.0, 2.0), DomainError);
    EXPECT_THROW(ConsumptionModel::linear(0.0), DomainError);
    EXPECT_THROW(ConsumptionModel::log(-1.0, 0.1), DomainError);
}

TEST(Consumption, NondecreasingAndConcaveOnGrid) {
    for (const auto& m : all_models()) {
        std::vector<double> v(1001);
        const double h = 30.0 / 1000;
        for (int i = 0; i <= 1000; ++i) v[i] = m(i * h);
        for (int i = 1; i <= 1000; ++i) EXPECT_GE(v[i], v[i - 1]);
        for (int i = 1; i < 1000; ++i) EXPECT_LE(v[i + 1] - 2 * v[i] + v[i - 1], 1e-9) << to_string(m.kind()) << i;
    }
}

TEST(Consumption, InverseRoundTrip) {
    for (const auto& m : all_models())
        for (double p : {0.0, 0.005, 0.01, 0.3, 1.0, 7.5, 23.0, 100.0}) EXPECT_NEAR(m.inverse(m(p)), p, 1e-9 * (1 + p));
}

TEST(Consumption, KindNamesRoundTrip) {
    for (auto k : {ConsumptionKind::Linear, ConsumptionKind::Log, ConsumptionKind::PiecewiseLinearCircuitry,
                   ConsumptionKind::PiecewiseLogCircuitry})
        EXPECT_EQ(consumption_kind_from_string(to_string(k)), k);
    EXPECT_THROW(consumption_kind_from_string("cubic"), DomainError);
}

TEST(Discretize, Examples) {
    const auto q = discretize(ConsumptionModel::linear(1.0));
    EXPECT_EQ(q(2.3), 3);
    EXPECT_EQ(q(0.0), 0);
    EXPECT_EQ(discretize(ConsumptionModel::piecewise_linear(7.0, 0.01))(1.0), 8);
}

TEST(Discretize, GuardBandAbsorbsRoundoff) {
    EXPECT_EQ(quantum_ceil(3.0 + 1e-12), 3);
    EXPECT_EQ(quantum_floor(3.0 - 1e-12), 3);
    EXPECT_EQ(quantum_ceil(3.001), 4);
    EXPECT_EQ(transferred_quanta(0.15, 6), 0);
    EXPECT_EQ(transferred_quanta(0.15, 7), 1);
    EXPECT_EQ(transferred_quanta(0.15, 6, Quantization::Upper), 1);
}

TEST(InverseDiscrete, Examples) {
    EXPECT_NEAR(inverse_discrete(ConsumptionModel::linear(1.0), 5, 30.0), 5.0, 1e-9);
    EXPECT_NEAR(inverse_discrete(ConsumptionModel::log(4.0, 0.1), 4, 100.0), 10.0 * (M_E - 1.0), 1e-9);
    EXPECT_NEAR(inverse_discrete(ConsumptionModel::log(4.0, 0.1), 0, 100.0), 0.0, 1e-12);
    EXPECT_DOUBLE_EQ(inverse_discrete(ConsumptionModel::linear(1.0), 50, 30.0), 30.0);
    EXPECT_THROW(inverse_discrete(ConsumptionModel::linear(1.0), -1, 30.0), DomainError);
}

TEST(InverseDiscrete, IsSupremumOfPreimage) {
    for (const auto& m : all_models()) {
        const double rho_max = 25.0;
        const auto q = discretize(m);
        for (long j = 0; j <= q(rho_max); ++j) {
            const double p = inverse_discrete(m, j, rho_max);
            EXPECT_LE(q(p), j);
            if (p < rho_max) EXPECT_GT(q(p + 1e-6), j) << to_string(m.kind()) << " j=" << j;
        }
    }
}

TEST(Psi, ConcaveCompositionKeepsCost) {
    const RewardFunction g(0.1);
    for (const auto& m : {ConsumptionModel::linear(1.0), ConsumptionModel::log(4.0, 0.1)}) {
        const auto psi = build_psi(m, g, 23.0);
        EXPECT_TRUE(psi.is_cost());
        for (int i = 0; i <= 100; ++i) EXPECT_NEAR(psi(0.23 * i), m(0.23 * i), 1e-9);
    }
}

TEST(Psi, CircuitryTransmitterChord) {
    const RewardFunction g(0.1);
    const auto psi = build_psi(ConsumptionModel::piecewise_linear(7.0, 0.01), g, 23.0);
    const auto* chord = psi.first_chord();
    ASSERT_NE(chord, nullptr);
    EXPECT_NEAR(chord->x_hi, 20.99, 0.05);
    EXPECT_NEAR(chord->chord_slope(), 0.0417, 0.0005);
    EXPECT_DOUBLE_EQ(chord->x_lo, 0.0);

    // Tangency: m x = ln(1 + L(x - zeta)) and m = L / (1 + L(x - zeta)).
    const double y = 1.0 + 0.1 * (chord->x_hi - 7.0);
    EXPECT_NEAR(chord->chord_slope() * chord->x_hi, std::log(y), 1e-6);
    EXPECT_NEAR(chord->chord_slope(), 0.1 / y, 1e-6);
}

TEST(Psi, BelowCostWithConcaveReward) {
    const RewardFunction g(0.1);
    for (const auto& m : all_models()) {
        const double rho_max = 23.0;
        const auto psi = build_psi(m, g, rho_max);
        for (int i = 0; i <= 1000; ++i) {
            const double p = rho_max * i / 1000;
            EXPECT_LE(psi(p), m(p) + 1e-9);
        }
        // g(Psi^{-1}(x)) has nonpositive second differences.
        const double top = psi.max_energy();
        std::vector<double> r(1001);
        for (int i = 0; i <= 1000; ++i) r[i] = g(psi.inverse(top * i / 1000));
        for (int i = 1; i < 1000; ++i) EXPECT_LE(r[i + 1] - 2 * r[i] + r[i - 1], 1e-9) << to_string(m.kind());
    }
}

TEST(Psi, InverseSaturatesAtRhoMax) {
    const auto psi = build_psi(ConsumptionModel::linear(1.0), RewardFunction(0.1), 10.0);
    EXPECT_DOUBLE_EQ(psi.inverse(50.0), 10.0);
    EXPECT_THROW(psi.inverse(-1.0), DomainError);
    EXPECT_THROW(psi(11.0), DomainError);
}

TEST(Psi, LinearSurrogateIsBelowConcaveCost) {
    const auto m = ConsumptionModel::log(4.0, 0.1);
    const auto psi = linear_psi(m, RewardFunction(0.1), 20.0);
    for (int i = 0; i <= 100; ++i) EXPECT_LE(psi(0.2 * i), m(0.2 * i) + 1e-12);
}

TEST(Reward, InverseAndDerivatives) {
    const RewardFunction g(0.1);
    EXPECT_NEAR(g(10.0), std::log(2.0), 1e-15);
    EXPECT_NEAR(g.inverse(g(7.3)), 7.3, 1e-12);
    EXPECT_NEAR(g.derivative(0.0), 0.1, 1e-15);
    EXPECT_LT(g.second_derivative(1.0), 0.0);
}
