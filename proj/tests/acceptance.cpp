// Acceptance checks. Prints one PASS/FAIL/SKIP line per criterion and exits nonzero on any FAIL.
//
// Criteria that need external measurement traces run only when EHET_DATA_DIR points at a
// directory holding them (indoor_tx.csv, indoor_rc.csv, solar.csv); otherwise they report SKIP.

#include "ehet/bounds.hpp"
#include "ehet/errors.hpp"
#include "ehet/heuristics.hpp"
#include "ehet/offline.hpp"
#include "ehet/online_mdp.hpp"
#include "ehet/psi.hpp"
#include "ehet/scenario.hpp"
#include "ehet/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace ehet;

namespace {

// Tolerances.
constexpr double kChordXTol = 0.05;
constexpr double kChordSlopeTol = 0.0005;
constexpr double kNoEtBoundTol = 0.001;
constexpr double kEtBoundTol = 0.002;
constexpr double kBoundsSeconds = 1.0;
constexpr double kOnlineSeconds = 120.0;
constexpr double kImprovementTolPp = 5.0;
constexpr double kRatioTol = 0.02;
constexpr double kNoEtGapMax = 0.005;
constexpr double kEtGapMax = 0.04;
constexpr double kCorollaryTol = 1e-6;
constexpr double kCorollarySeconds = 10.0;
constexpr double kDominanceSlack = 1e-6;
constexpr double kOracleTol = 1e-9;
constexpr double kSolarRatioTol = 0.15;
constexpr double kIndoorTol = 0.002;
constexpr double kIndoorImprovementTolPp = 3.0;
constexpr double kSoundnessSlack = 1e-6;
constexpr double kSoundnessSeconds = 300.0;

struct Outcome {
    enum Kind { Pass, Fail, Skip } kind;
    std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Outcome::Pass : Outcome::Fail, std::move(detail)}; }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const char* kCircuitryConfig = R"({
  "schema_version": 1,
  "reward": { "lambda": 0.1 },
  "beta": 0.15,
  "tx": {
    "battery": 30,
    "consumption": { "kind": "piecewise_linear", "zeta": 7, "p_n": 0.01, "sigma": 1 },
    "arrivals": { "kind": "truncated_geometric", "mean": 2, "b_max": 5 },
    "psi": "hull"
  },
  "rc": {
    "battery": 30,
    "consumption": { "kind": "piecewise_log", "zeta": 7, "p_n": 0.01, "alpha": 4 },
    "arrivals": { "kind": "uniform", "b_max": 25 },
    "psi": "chord"
  }
})";

const char* kNoCircuitryConfig = R"({
  "schema_version": 1,
  "reward": { "lambda": 0.1 },
  "beta": 0.15,
  "tx": {
    "battery": 30,
    "consumption": { "kind": "linear", "sigma": 1 },
    "arrivals": { "kind": "truncated_geometric", "mean": 2, "b_max": 5 }
  },
  "rc": {
    "battery": 30,
    "consumption": { "kind": "log", "alpha": 4 },
    "arrivals": { "kind": "uniform", "b_max": 25 }
  }
})";

SystemConfig without_transfer(SystemConfig cfg) {
    cfg.transfer_enabled = false;
    return cfg;
}

SystemConfig make_config(ConsumptionModel q_tx, ConsumptionModel q_rc, ArrivalProcess a_tx, ArrivalProcess a_rc,
                         long e_tx, long e_rc, double beta, double lambda) {
    SystemConfig cfg;
    cfg.e_max_tx = e_tx;
    cfg.e_max_rc = e_rc;
    cfg.q_tx = q_tx;
    cfg.q_rc = q_rc;
    cfg.arr_tx = std::move(a_tx);
    cfg.arr_rc = std::move(a_rc);
    cfg.beta = beta;
    cfg.g = RewardFunction(lambda);
    cfg.rho_max = max_supported_power(q_tx, q_rc, e_tx, e_rc);
    cfg.validate();
    return cfg;
}

BoundInput bound_input(const SystemConfig& cfg, double b_tx, double b_rc) {
    return {build_psi(cfg.q_tx, cfg.g, cfg.rho_max), build_psi(cfg.q_rc, cfg.g, cfg.rho_max), b_tx, b_rc, cfg.beta,
            cfg.g};
}

double heuristic_gain(HeuristicKind kind, const SystemConfig& cfg) {
    return evaluate_policy(tabulate(heuristic(kind, cfg), cfg), cfg).gain;
}

double pct(double with_et, double without_et) { return 100.0 * improvement(with_et, without_et); }

// --------------------------------------------------------------------------------------------

Outcome ac1() {
    const auto t0 = std::chrono::steady_clock::now();
    const Scenario sc = parse_scenario(kCircuitryConfig);
    const BoundInput in = sc.bound_input();
    const PsiFunction::Piece* chord = in.psi_tx.first_chord();
    const double no_et = upper_bound_no_et(in);
    const double et = upper_bound_et(in).value;
    const double elapsed = seconds_since(t0);
    if (!chord) return verdict(false, "transmitter Psi has no chord");
    const double x = chord->x_hi, m = chord->chord_slope();
    const bool ok = std::abs(x - 20.99) <= kChordXTol && std::abs(m - 0.0417) <= kChordSlopeTol &&
                    std::abs(no_et - 0.0834) <= kNoEtBoundTol && std::abs(et - 0.1561) <= kEtBoundTol &&
                    elapsed < kBoundsSeconds;
    return verdict(ok, fmt("x=%.4f m=%.6f noET=%.5f ET=%.5f (%.3fs)", x, m, no_et, et, elapsed));
}

Outcome ac2() {
    const auto t0 = std::chrono::steady_clock::now();
    const SystemConfig cfg = parse_scenario(kCircuitryConfig).system();
    const double g0 = policy_iteration(without_transfer(cfg)).evaluation.gain;
    const double g1 = policy_iteration(cfg).evaluation.gain;
    const double elapsed = seconds_since(t0);
    const double imp = pct(g1, g0);
    const bool ok = g0 >= 0.99 * 0.0834 && g1 >= 0.95 * 0.1561 && std::abs(imp - 78.0) <= kImprovementTolPp &&
                    elapsed < kOnlineSeconds;
    return verdict(ok, fmt("noET=%.5f ET=%.5f improvement=%.1f%% grid=%ldx%ld (%.1fs)", g0, g1, imp,
                           cfg.e_max_tx + 1, cfg.e_max_rc + 1, elapsed));
}

Outcome ac3() {
    const double lambdas[] = {0.001, 1.0, 10.0};
    const double expected[] = {83.0, 64.0, 45.0};
    std::string detail;
    bool ok = true;
    double prev = INFINITY;
    for (int i = 0; i < 3; ++i) {
        Scenario sc = parse_scenario(kCircuitryConfig);
        sc.lambda = lambdas[i];
        sc.rho_max.reset();
        const SystemConfig cfg = sc.system();
        const double imp =
            pct(policy_iteration(cfg).evaluation.gain, policy_iteration(without_transfer(cfg)).evaluation.gain);
        ok = ok && std::abs(imp - expected[i]) <= kImprovementTolPp && imp <= prev;
        prev = imp;
        detail += fmt("L=%g:%.1f%% ", lambdas[i], imp);
    }
    return verdict(ok, detail);
}

Outcome ac4() {
    const Scenario sc = parse_scenario(kNoCircuitryConfig);
    const SystemConfig cfg = sc.system();
    const BoundInput in = sc.bound_input();
    const double best = policy_iteration(cfg).evaluation.gain;
    const double best0 = policy_iteration(without_transfer(cfg)).evaluation.gain;
    const double gp = heuristic_gain(HeuristicKind::Greedy, cfg) / best;
    const double bp = heuristic_gain(HeuristicKind::Balanced, cfg) / best;
    const double lcp = heuristic_gain(HeuristicKind::LowComplexity, cfg) / best;
    const double ub0 = upper_bound_no_et(in), ub = upper_bound_et(in).value;
    const double gap0 = (ub0 - best0) / ub0, gap = (ub - best) / ub;
    const bool ok = std::abs(gp - 0.88) <= kRatioTol && std::abs(bp - 0.88) <= kRatioTol &&
                    std::abs(lcp - 0.82) <= kRatioTol && gap0 <= kNoEtGapMax && gap <= kEtGapMax;
    return verdict(ok, fmt("GP=%.3f BP=%.3f LCP=%.3f gap noET=%.2f%% ET=%.2f%%", gp, bp, lcp, 100 * gap0,
                           100 * gap));
}

// Average reward over the slots after the warm-up.
double settled_reward(const PolicyView& view, const SystemConfig& cfg, long b_tx, long b_rc, int warmup, int slots) {
    ArrivalTrace tx, rc;
    tx.quanta.assign(warmup + slots, b_tx);
    rc.quanta.assign(warmup + slots, b_rc);
    const auto res = simulate(view, tx, rc, cfg);
    double sum = 0.0;
    for (int k = warmup; k < warmup + slots; ++k) sum += cfg.g(res.slots[k].rho);
    return sum / slots;
}

Outcome ac5() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 gen(5);
    const auto uni = [&gen](long lo, long hi) { return std::uniform_int_distribution<long>(lo, hi)(gen); };
    double worst = 0.0;
    for (int draw = 0; draw < 20; ++draw) {
        const double lambda = std::uniform_real_distribution<double>(0.05, 2.0)(gen);
        double bound = 0.0, got = 0.0;
        if (draw % 2 == 0) {
            // No transfer: the receiver model is linear or logarithmic.
            const long b_tx = uni(1, 6), b_rc = b_tx + uni(0, 10);
            const auto q_rc = uni(0, 1) ? ConsumptionModel::linear(1.0)
                                        : ConsumptionModel::log(std::uniform_real_distribution<double>(2, 6)(gen), lambda);
            auto cfg = make_config(ConsumptionModel::linear(1.0), q_rc, make_deterministic(b_tx),
                                   make_deterministic(b_rc), b_tx + uni(0, 8), b_rc + uni(0, 8), 0.0, lambda);
            cfg.transfer_enabled = false;
            bound = upper_bound_no_et(bound_input(cfg, b_tx, b_rc));
            PolicyView view{[cfg](const State& s) { return corollary_policy_no_et(s, cfg); }, std::nullopt, "cor"};
            got = settled_reward(view, cfg, b_tx, b_rc, 100, 1000);
        } else {
            // Transfer with beta * D integral, so the floor in the quantized link loses nothing.
            const double betas[] = {1.0, 0.5, 0.25};
            const double beta = betas[uni(0, 2)];
            const long p = uni(2, 8), m = uni(1, p - 1);
            const long d = std::lround(m / beta);
            const long b_rc = p + d, b_tx = p - m;
            auto cfg = make_config(ConsumptionModel::linear(1.0), ConsumptionModel::linear(1.0),
                                   make_deterministic(b_tx), make_deterministic(b_rc), p + uni(0, 8),
                                   b_rc + uni(0, 8), beta, lambda);
            const EtBound et = upper_bound_et(bound_input(cfg, b_tx, b_rc));
            bound = et.value;
            PolicyView view{[cfg, xi = et.xi_star](const State& s) { return corollary_policy_et(s, cfg, xi); },
                            std::nullopt, "cor"};
            got = settled_reward(view, cfg, b_tx, b_rc, 100, 1000);
        }
        worst = std::max(worst, std::abs(got - bound));
    }
    const double elapsed = seconds_since(t0);
    return verdict(worst <= kCorollaryTol && elapsed < kCorollarySeconds,
                   fmt("20 draws, max |G - bound| = %.2e (%.2fs)", worst, elapsed));
}

ArrivalProcess random_process(std::mt19937_64& gen) {
    std::uniform_int_distribution<int> pick(0, 2);
    switch (pick(gen)) {
    case 0: return make_uniform(std::uniform_int_distribution<long>(1, 8)(gen));
    case 1: {
        const long b_max = std::uniform_int_distribution<long>(2, 8)(gen);
        return make_truncated_geometric(std::uniform_real_distribution<double>(0.3, 0.9)(gen) * b_max, b_max);
    }
    default:
        return make_bernoulli(std::uniform_int_distribution<long>(1, 6)(gen),
                              std::uniform_real_distribution<double>(0.2, 1.0)(gen));
    }
}

ConsumptionModel random_concave_model(std::mt19937_64& gen, double lambda) {
    if (std::uniform_int_distribution<int>(0, 1)(gen))
        return ConsumptionModel::linear(std::uniform_real_distribution<double>(0.5, 2.0)(gen));
    return ConsumptionModel::log(std::uniform_real_distribution<double>(2.0, 6.0)(gen), lambda);
}

Outcome ac6() {
    std::mt19937_64 gen(6);
    int violations = 0, uncertified = 0;
    double min_margin = INFINITY;
    for (int inst_no = 0; inst_no < 50; ++inst_no) {
        const double lambda = std::uniform_real_distribution<double>(0.05, 1.0)(gen);
        const long e_tx = std::uniform_int_distribution<long>(3, 12)(gen);
        const long e_rc = std::uniform_int_distribution<long>(3, 12)(gen);
        const SystemConfig cfg = make_config(random_concave_model(gen, lambda), random_concave_model(gen, lambda),
                                             random_process(gen), random_process(gen), e_tx, e_rc,
                                             std::uniform_real_distribution<double>(0.1, 1.0)(gen), lambda);
        const int k = std::uniform_int_distribution<int>(5, 60)(gen);
        const ArrivalTrace tx = sample(cfg.arr_tx, k, gen()), rc = sample(cfg.arr_rc, k, gen());

        OfflineInstance inst;
        inst.horizon = k;
        inst.b_tx.assign(tx.quanta.begin(), tx.quanta.end() - 1);
        inst.b_rc.assign(rc.quanta.begin(), rc.quanta.end() - 1);
        inst.q_tx = cfg.q_tx;
        inst.q_rc = cfg.q_rc;
        inst.beta = cfg.beta;
        inst.g = cfg.g;
        inst.e_max_tx = static_cast<double>(e_tx);
        inst.e_max_rc = static_cast<double>(e_rc);
        inst.rho_max = cfg.rho_max;
        const OfflinePlan finite = solve_offline_finite(inst);
        const OfflinePlan infinite = solve_offline_infinite(inst);
        uncertified += !finite.certified || !infinite.certified;

        const double ub = finite_horizon_bounds(bound_input(cfg, 1, 1), tx, rc).et.value;
        std::vector<double> replays;
        replays.push_back(simulate(view_of(policy_iteration(cfg).policy, "op-on"), tx, rc, cfg).reward);
        for (auto kind : {HeuristicKind::Greedy, HeuristicKind::Balanced, HeuristicKind::LowComplexity})
            replays.push_back(simulate(PolicyView{heuristic(kind, cfg), std::nullopt, ""}, tx, rc, cfg).reward);

        double margin = ub - finite.objective;
        for (double r : replays) margin = std::min(margin, finite.objective - r);
        margin = std::min(margin, infinite.objective - finite.objective);
        min_margin = std::min(min_margin, margin);
        violations += margin < -kDominanceSlack;
    }
    return verdict(violations == 0 && uncertified == 0,
                   fmt("50 instances, %d violations, %d uncertified, smallest margin %.2e", violations, uncertified,
                       min_margin));
}

Outcome ac7() {
    std::mt19937_64 gen(7);
    int found = 0, tries = 0, mismatches = 0;
    double worst = 0.0;
    while (found < 10 && tries < 5000) {
        ++tries;
        const double lambda = std::uniform_real_distribution<double>(0.1, 2.0)(gen);
        const long e_tx = std::uniform_int_distribution<long>(1, 4)(gen);
        const long e_rc = std::uniform_int_distribution<long>(1, 4)(gen);
        SystemConfig cfg;
        try {
            cfg = make_config(random_concave_model(gen, lambda), random_concave_model(gen, lambda), random_process(gen),
                              random_process(gen), e_tx, e_rc, std::uniform_real_distribution<double>(0.0, 1.0)(gen),
                              lambda);
        } catch (const DomainError&) {
            continue;
        }
        cfg.transfer_enabled = std::uniform_int_distribution<int>(0, 1)(gen);
        const EnergyMdp mdp(cfg);
        double combos = 1.0;
        bool small = true;
        for (const auto& acts : mdp.actions) {
            combos *= static_cast<double>(acts.size());
            small = small && acts.size() <= 3;
        }
        if (!small || combos > 2e5 || combos < 2) continue;
        ++found;

        double brute = -INFINITY;
        std::vector<std::size_t> choice(mdp.num_states(), 0);
        OnlinePolicy pol(cfg.e_max_tx, cfg.e_max_rc);
        for (;;) {
            for (std::size_t s = 0; s < choice.size(); ++s) pol.at(s) = mdp.actions[s][choice[s]];
            brute = std::max(brute, evaluate_policy(pol, cfg).gain);
            std::size_t s = 0;
            while (s < choice.size() && ++choice[s] == mdp.actions[s].size()) choice[s++] = 0;
            if (s == choice.size()) break;
        }
        const double pia = policy_iteration(cfg).evaluation.gain;
        worst = std::max(worst, std::abs(pia - brute));
        mismatches += std::abs(pia - brute) > kOracleTol;
    }
    return verdict(found == 10 && mismatches == 0,
                   fmt("%d instances, max |PIA - exhaustive| = %.2e", found, worst));
}

Outcome ac8() {
    OfflineInstance inst;
    inst.horizon = 4;
    inst.b_tx = {0.5, 1.5, 2.5};
    inst.b_rc = {1.25, 2.5, 3.75};
    inst.e_max_tx = 6.0;
    inst.e_max_rc = 7.5;
    inst.beta = 0.25;
    const auto rows = build_finite_constraints(inst);
    // Receiver block: sum_{j=i..k} (Q_j + D_j) <= E_max [i > 1] + sum_{j=i..k-1} B_j.
    struct Row {
        int i, k;
        double rhs;
    };
    const Row expected[] = {
        {1, 1, 0.0},          {1, 2, 1.25},        {2, 2, 7.5},         {1, 3, 3.75},        {2, 3, 7.5 + 2.5},
        {3, 3, 7.5},          {1, 4, 7.5},         {2, 4, 7.5 + 6.25},  {3, 4, 7.5 + 3.75},  {4, 4, 7.5},
    };
    std::vector<const CumulativeConstraint*> rc;
    for (const auto& r : rows)
        if (r.device == Device::Rc) rc.push_back(&r);
    bool block_ok = rc.size() == 10;
    for (const Row& e : expected) {
        const auto it = std::find_if(rc.begin(), rc.end(), [&](auto* r) { return r->i == e.i && r->k == e.k; });
        if (it == rc.end()) {
            block_ok = false;
            continue;
        }
        const auto& r = **it;
        for (int j = 1; j <= 4; ++j) {
            const double in = (j >= e.i && j <= e.k) ? 1.0 : 0.0;
            block_ok = block_ok && r.q_coeff[j - 1] == in && r.d_coeff[j - 1] == in;
        }
        block_ok = block_ok && r.rhs == e.rhs;
    }
    bool counts_ok = true;
    for (int k = 1; k <= 50; ++k) {
        OfflineInstance big;
        big.horizon = k;
        big.b_tx.assign(k - 1, 1.0);
        big.b_rc.assign(k - 1, 1.0);
        big.e_max_tx = big.e_max_rc = 5.0;
        counts_ok = counts_ok && build_finite_constraints(big).size() == static_cast<std::size_t>(k * (k + 1));
    }
    return verdict(block_ok && counts_ok, fmt("K=4 receiver block %s, K(K+1) counts for K<=50 %s",
                                              block_ok ? "exact" : "MISMATCH", counts_ok ? "ok" : "MISMATCH"));
}

// Clear-sky day with passing clouds, in quanta per slot at the receiver panel.
std::vector<long> synthetic_solar(int slots, double peak, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> cloud(0.6, 1.0);
    std::vector<long> out(slots);
    for (int k = 0; k < slots; ++k) {
        const double hour = 24.0 * (k + 0.5) / slots;
        const double sun = std::max(0.0, std::sin(M_PI * (hour - 6.0) / 12.0));
        out[k] = static_cast<long>(std::floor(peak * sun * cloud(gen)));
    }
    return out;
}

// Offline ET / no-ET reward ratio for equal batteries under the receiver-panel trace rc.
double offline_ratio(const std::vector<long>& rc, double beta, long e_max) {
    OfflineInstance inst;
    inst.horizon = static_cast<int>(rc.size());
    for (std::size_t j = 0; j + 1 < rc.size(); ++j) {
        inst.b_rc.push_back(static_cast<double>(rc[j]));
        inst.b_tx.push_back(std::floor(rc[j] / 3.0)); // panel three times smaller
    }
    inst.q_tx = ConsumptionModel::linear(1.0);
    inst.q_rc = ConsumptionModel::log(4.0, 0.1);
    inst.g = RewardFunction(0.1);
    inst.beta = beta;
    inst.e_max_tx = inst.e_max_rc = static_cast<double>(e_max);
    inst.rho_max = max_supported_power(inst.q_tx, inst.q_rc, e_max, e_max);
    const double with = solve_offline_finite(inst).objective;
    inst.transfer_enabled = false;
    return with / solve_offline_finite(inst).objective;
}

std::optional<std::filesystem::path> dataset(const char* name) {
    const char* dir = std::getenv("EHET_DATA_DIR");
    if (!dir) return std::nullopt;
    std::filesystem::path p = std::filesystem::path(dir) / name;
    if (!std::filesystem::exists(p)) return std::nullopt;
    return p;
}

Outcome ac9() {
    // Online gain in the transmitter battery size, receiver battery fixed at 30.
    Scenario sc = parse_scenario(kCircuitryConfig);
    double prev = -INFINITY;
    bool gain_ok = true;
    std::string detail = "G(e_tx):";
    for (long e = 10; e <= 30; e += 5) {
        sc.tx.battery = e;
        sc.rho_max.reset();
        const double g = policy_iteration(sc.system()).evaluation.gain;
        gain_ok = gain_ok && g >= prev - 1e-12;
        prev = g;
        detail += fmt(" %.4f", g);
    }

    std::vector<long> rc;
    bool gated = false;
    if (auto path = dataset("solar.csv")) {
        rc = ingest_trace(path->string(), 1800.0, 1.0, 1.0).quanta;
        // Scale so the brightest slot holds 24 quanta at the receiver.
        const long peak = std::max(1L, *std::max_element(rc.begin(), rc.end()));
        for (long& v : rc) v = v * 24 / peak;
        gated = true;
    } else {
        rc = synthetic_solar(48, 24.0, 9);
    }
    const double betas[] = {0.15, 0.5, 1.0};
    const long sizes[] = {5, 10, 20};
    double ratio[3][3];
    for (int b = 0; b < 3; ++b)
        for (int e = 0; e < 3; ++e) ratio[b][e] = offline_ratio(rc, betas[b], sizes[e]);
    bool mono = true;
    for (int b = 0; b < 3; ++b)
        for (int e = 0; e < 3; ++e) {
            if (b > 0) mono = mono && ratio[b][e] >= ratio[b - 1][e] - 1e-6;
            if (e > 0) mono = mono && ratio[b][e] >= ratio[b][e - 1] - 1e-6;
        }
    detail += fmt("; ratio@e20 = %.2f %.2f %.2f", ratio[0][2], ratio[1][2], ratio[2][2]);
    bool ok = gain_ok && mono;
    if (gated) {
        const double expected[] = {1.33, 1.91, 2.51};
        for (int b = 0; b < 3; ++b) ok = ok && std::abs(ratio[b][2] - expected[b]) <= kSolarRatioTol;
    } else {
        detail += " (synthetic arrivals; ratio values dataset-gated)";
    }
    return verdict(ok, detail);
}

Outcome ac10() {
    const auto tx_path = dataset("indoor_tx.csv"), rc_path = dataset("indoor_rc.csv");
    if (!tx_path || !rc_path) return {Outcome::Skip, "dataset-gated: set EHET_DATA_DIR with indoor_tx.csv, indoor_rc.csv"};
    ArrivalTrace tx = ingest_trace(tx_path->string(), 60.0, 1.0, 1.0);
    ArrivalTrace rc = ingest_trace(rc_path->string(), 60.0, 1.0, 1.0);
    const std::size_t k = std::min(tx.quanta.size(), rc.quanta.size());
    tx.quanta.resize(k);
    rc.quanta.resize(k);
    const double total = std::accumulate(tx.quanta.begin(), tx.quanta.end(), 0.0) +
                         std::accumulate(rc.quanta.begin(), rc.quanta.end(), 0.0);
    // Batteries large enough never to clamp.
    const long cap = static_cast<long>(total) + 1;
    const double lambda = 0.002, beta = 0.15;
    const SystemConfig cfg = make_config(ConsumptionModel::linear(1.0), ConsumptionModel::linear(1.0),
                                         make_empirical(tx), make_empirical(rc), cap, cap, beta, lambda);
    const double g_bp = simulate(PolicyView{heuristic(HeuristicKind::Balanced, cfg), std::nullopt, "bp"}, tx, rc, cfg,
                                 {{0, 0}, false})
                            .reward;
    OfflineInstance inst;
    inst.horizon = static_cast<int>(k);
    inst.b_tx.assign(tx.quanta.begin(), tx.quanta.end() - 1);
    inst.b_rc.assign(rc.quanta.begin(), rc.quanta.end() - 1);
    inst.beta = beta;
    inst.g = RewardFunction(lambda);
    const double g_et = solve_offline_infinite(inst).objective;
    inst.transfer_enabled = false;
    const double g_no = solve_offline_infinite(inst).objective;
    const double ub = finite_horizon_bounds(bound_input(cfg, 1, 1), tx, rc).et.value;
    const double imp = pct(g_et, g_no);
    const bool ok = std::abs(g_bp - 0.0512) <= kIndoorTol && std::abs(g_et - 0.0528) <= kIndoorTol &&
                    std::abs(g_no - 0.0411) <= kIndoorTol && std::abs(imp - 28.0) <= kIndoorImprovementTolPp &&
                    g_et >= 0.99 * ub;
    return verdict(ok, fmt("BP=%.4f OP-OFF=%.4f noET=%.4f improvement=%.1f%% UB=%.4f", g_bp, g_et, g_no, imp, ub));
}

Outcome ac11() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 gen(11);
    constexpr int kPolicies = 1000;
    constexpr std::size_t kSlots = 100000;
    int violations = 0;
    double min_margin = INFINITY;
    for (int n = 0; n < kPolicies; ++n) {
        const double lambda = std::uniform_real_distribution<double>(0.05, 1.0)(gen);
        const long e_tx = std::uniform_int_distribution<long>(2, 15)(gen);
        const long e_rc = std::uniform_int_distribution<long>(2, 15)(gen);
        const SystemConfig cfg = make_config(random_concave_model(gen, lambda), random_concave_model(gen, lambda),
                                             random_process(gen), random_process(gen), e_tx, e_rc,
                                             std::uniform_real_distribution<double>(0.0, 1.0)(gen), lambda);
        const EnergyMdp mdp(cfg);
        OnlinePolicy pol(cfg.e_max_tx, cfg.e_max_rc);
        for (std::size_t s = 0; s < pol.num_states(); ++s) {
            const auto& acts = mdp.actions[s];
            pol.at(s) = acts[std::uniform_int_distribution<std::size_t>(0, acts.size() - 1)(gen)];
        }
        const ArrivalTrace tx = sample(cfg.arr_tx, kSlots, gen()), rc = sample(cfg.arr_rc, kSlots, gen());
        const double reward = simulate(view_of(pol), tx, rc, cfg, {{0, 0}, false}).reward;
        const double ub = finite_horizon_bounds(bound_input(cfg, 1, 1), tx, rc).et.value;
        min_margin = std::min(min_margin, ub - reward);
        violations += reward > ub + kSoundnessSlack;
    }
    const double elapsed = seconds_since(t0);
    return verdict(violations == 0 && elapsed < kSoundnessSeconds,
                   fmt("%d policies x %zu slots, %d above bound, smallest margin %.3e (%.1fs)", kPolicies, kSlots,
                       violations, min_margin, elapsed));
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"AC1", ac1}, {"AC2", ac2}, {"AC3", ac3}, {"AC4", ac4},   {"AC5", ac5},   {"AC6", ac6},
        {"AC7", ac7}, {"AC8", ac8}, {"AC9", ac9}, {"AC10", ac10}, {"AC11", ac11},
    };
    // Optional arguments select criteria by name.
    const std::vector<std::string> only(argv + 1, argv + argc);
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
        Outcome out;
        try {
            out = run();
        } catch (const std::exception& e) {
            out = {Outcome::Fail, std::string("exception: ") + e.what()};
        }
        const char* tag = out.kind == Outcome::Pass ? "PASS" : out.kind == Outcome::Fail ? "FAIL" : "SKIP";
        std::printf("%-5s %s  %s\n", name, tag, out.detail.c_str());
        std::fflush(stdout);
        failed += out.kind == Outcome::Fail;
    }
    return failed == 0 ? 0 : 1;
}
