#include "ehet/bounds.hpp"
#include "ehet/heuristics.hpp"
#include "ehet/simulator.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace ehet;

namespace {

SystemConfig config(ConsumptionModel q_tx, ConsumptionModel q_rc, long e_max, double beta,
                    ArrivalProcess a_tx = make_truncated_geometric(2.0, 5),
                    ArrivalProcess a_rc = make_uniform(25)) {
    SystemConfig cfg;
    cfg.e_max_tx = cfg.e_max_rc = e_max;
    cfg.q_tx = q_tx;
    cfg.q_rc = q_rc;
    cfg.arr_tx = std::move(a_tx);
    cfg.arr_rc = std::move(a_rc);
    cfg.beta = beta;
    cfg.rho_max = max_supported_power(q_tx, q_rc, e_max, e_max);
    return cfg;
}

SystemConfig identity(long e_max, double beta) {
    return config(ConsumptionModel::linear(1.0), ConsumptionModel::linear(1.0), e_max, beta);
}

} // namespace

TEST(Greedy, Examples) {
    const auto cfg = identity(10, 0.15);
    EXPECT_EQ(greedy_policy({5, 8}, cfg), (Action{5.0, 3}));
    EXPECT_EQ(greedy_policy({0, 7}, cfg), (Action{0.0, 7}));
    const auto a = greedy_policy({6, 0}, cfg);
    EXPECT_EQ(a.d, 0);
    EXPECT_EQ(cfg.cost_rc()(a.rho), 0);
}

TEST(Greedy, EmptiesABattery) {
    const auto cfg = config(ConsumptionModel::piecewise_linear(3.0, 0.01), ConsumptionModel::log(4.0, 0.1), 20, 0.5);
    for (long et = 0; et <= 20; ++et)
        for (long er = 0; er <= 20; ++er) {
            const auto a = greedy_policy({et, er}, cfg);
            const long left_tx = et - cfg.cost_tx()(a.rho);
            const long left_rc = er - cfg.cost_rc()(a.rho) - a.d;
            EXPECT_TRUE(left_tx == 0 || left_rc == 0) << et << "," << er;
        }
}

TEST(Balanced, Examples) {
    EXPECT_EQ(balanced_policy({2, 10}, identity(30, 0.15)), (Action{2.0, 6}));
    EXPECT_EQ(balanced_policy({0, 5}, identity(30, 0.0)), (Action{0.0, 5}));
    for (long x = 0; x <= 10; ++x) EXPECT_EQ(balanced_policy({x, x}, identity(30, 0.7)), (Action{double(x), 0}));
}

TEST(Balanced, LinearClosedForm) {
    EXPECT_EQ(balanced_policy_linear({2, 10}, identity(30, 0.15)), (Action{2.0, 6}));
    EXPECT_EQ(balanced_policy_linear({10, 2}, identity(30, 0.15)), (Action{2.0, 0}));
    EXPECT_EQ(balanced_policy_linear({0, 0}, identity(30, 0.15)), (Action{0.0, 0}));
    for (double beta : {0.0, 0.15, 0.5, 1.0}) {
        const auto cfg = identity(30, beta);
        for (long et = 0; et <= 30; ++et)
            for (long er = 0; er <= 30; ++er) {
                const auto a = balanced_policy({et, er}, cfg), b = balanced_policy_linear({et, er}, cfg);
                EXPECT_EQ(a.d, b.d) << et << "," << er;
                EXPECT_NEAR(a.rho, b.rho, 1e-9) << et << "," << er;
            }
    }
}

TEST(LowComplexity, EmptyTransmitter) {
    const auto cfg = identity(30, 0.15);
    for (long er = 0; er <= 30; ++er) EXPECT_EQ(low_complexity_policy({0, er}, cfg, 0.6, 12.5).rho, 0.0);
}

TEST(LowComplexity, OptimalForDeterministicArrivals) {
    // beta = 1 and integer balance point: rho = 4, D = 4, tx receives 4 quanta each slot.
    auto cfg = config(ConsumptionModel::linear(1.0), ConsumptionModel::linear(1.0), 20, 1.0, make_deterministic(0 + 1),
                      make_deterministic(8));
    cfg.arr_tx = make_deterministic(1);
    const BoundInput in{cost_psi(cfg.q_tx, cfg.g, cfg.rho_max), cost_psi(cfg.q_rc, cfg.g, cfg.rho_max), 1.0, 8.0, 1.0,
                        cfg.g};
    const auto et = upper_bound_et(in);
    EXPECT_NEAR(et.xi_star, 4.5 / 8.0, 1e-9);
    const double gain = evaluate_policy(tabulate(heuristic(HeuristicKind::LowComplexity, cfg), cfg), cfg).gain;
    // round(4.5) = 5 exceeds the balance point, so LCP settles below it; the rate is the floor.
    EXPECT_LE(gain, et.value + 1e-9);
    EXPECT_GT(gain, 0.0);
}

TEST(LowComplexity, MatchesBoundWhenBalanceIsIntegral) {
    // b_tx = 2, b_rc = 6, beta = 1: xi* = 4 / 6, target rho = 4, D = 2.
    auto cfg = config(ConsumptionModel::linear(1.0), ConsumptionModel::linear(1.0), 20, 1.0, make_deterministic(2),
                      make_deterministic(6));
    const BoundInput in{cost_psi(cfg.q_tx, cfg.g, cfg.rho_max), cost_psi(cfg.q_rc, cfg.g, cfg.rho_max), 2.0, 6.0, 1.0,
                        cfg.g};
    const double gain = evaluate_policy(tabulate(heuristic(HeuristicKind::LowComplexity, cfg), cfg), cfg).gain;
    EXPECT_NEAR(gain, upper_bound_et(in).value, 1e-6);
}

TEST(Corollary, NoTransferThreshold) {
    auto cfg = config(ConsumptionModel::linear(1.0), ConsumptionModel::linear(1.0), 10, 0.0, make_deterministic(2),
                      make_deterministic(5));
    cfg.transfer_enabled = false;
    EXPECT_EQ(corollary_policy_no_et({0, 0}, cfg), (Action{0.0, 0}));
    EXPECT_EQ(corollary_policy_no_et({1, 9}, cfg), (Action{0.0, 0}));
    EXPECT_EQ(corollary_policy_no_et({2, 2}, cfg), (Action{2.0, 0}));
    const ArrivalTrace tx{std::vector<long>(2000, 2)}, rc{std::vector<long>(2000, 5)};
    const auto res = simulate({heuristic(HeuristicKind::Corollary, cfg), std::nullopt, "c1"}, tx, rc, cfg);
    double tail = 0.0;
    for (std::size_t k = 100; k < 2000; ++k) tail += cfg.g(res.slots[k].rho);
    EXPECT_NEAR(tail / 1900, cfg.g(2.0), 1e-9);
}

TEST(Corollary, TransferMovesSurplus) {
    // beta = 1, b_tx = b_rc: xi* = 1, nothing to transfer.
    const auto cfg = config(ConsumptionModel::linear(1.0), ConsumptionModel::linear(1.0), 10, 1.0,
                            make_deterministic(3), make_deterministic(3));
    const double xi = cost_balance_point(cfg);
    EXPECT_DOUBLE_EQ(xi, 1.0);
    EXPECT_EQ(corollary_policy_et({3, 3}, cfg, xi), (Action{3.0, 0}));
    const ArrivalTrace t{std::vector<long>(10000, 3)};
    const auto res = simulate({heuristic(HeuristicKind::Corollary, cfg), std::nullopt, "c3"}, t, t, cfg);
    double tail = 0.0;
    for (std::size_t k = 100; k < 10000; ++k) tail += cfg.g(res.slots[k].rho);
    EXPECT_NEAR(tail / 9900, cfg.g(3.0), 1e-9);
}

TEST(Corollary, Targets) {
    auto cfg = config(ConsumptionModel::linear(1.0), ConsumptionModel::linear(1.0), 20, 0.5, make_deterministic(1),
                      make_deterministic(7));
    const double xi = cost_balance_point(cfg);
    EXPECT_NEAR(corollary_target_et(cfg, xi), 7.0 * xi, 1e-9);
    EXPECT_NEAR(*heuristic_target(HeuristicKind::Corollary, cfg), 7.0 * xi, 1e-9);
    EXPECT_FALSE(heuristic_target(HeuristicKind::Greedy, cfg).has_value());
    EXPECT_FALSE(heuristic_target(HeuristicKind::Balanced, cfg).has_value());
    cfg.transfer_enabled = false;
    EXPECT_NEAR(corollary_target_no_et(cfg), 1.0, 1e-12);
}

TEST(Heuristics, AlwaysFeasibleOnFullGrid) {
    const std::vector<std::pair<ConsumptionModel, ConsumptionModel>> models = {
        {ConsumptionModel::linear(1.0), ConsumptionModel::linear(1.0)},
        {ConsumptionModel::linear(1.0), ConsumptionModel::log(4.0, 0.1)},
        {ConsumptionModel::piecewise_linear(7.0, 0.01), ConsumptionModel::piecewise_log(7.0, 0.01, 4.0, 0.1)},
        {ConsumptionModel::log(3.0, 0.5), ConsumptionModel::piecewise_linear(2.0, 0.5, 1.5)},
    };
    for (const auto& [q_tx, q_rc] : models)
        for (double beta : {0.0, 0.15, 1.0}) {
            const auto cfg = config(q_tx, q_rc, 30, beta);
            for (auto kind : {HeuristicKind::Greedy, HeuristicKind::Balanced, HeuristicKind::LowComplexity,
                              HeuristicKind::Corollary}) {
                const auto rule = heuristic(kind, cfg);
                for (long et = 0; et <= 30; ++et)
                    for (long er = 0; er <= 30; ++er)
                        ASSERT_TRUE(feasible({et, er}, rule({et, er}), cfg))
                            << static_cast<int>(kind) << " at " << et << "," << er;
            }
        }
}
