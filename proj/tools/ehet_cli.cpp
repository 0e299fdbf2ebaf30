// ehet-cli: bounds, online/offline solves, simulation and reports from a JSON scenario.

#include "ehet/ehet.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace {

using nlohmann::json;

struct ApiError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void check(ehet_status st) {
    if (st != EHET_OK) throw ApiError(ehet_last_error());
}

template <class T, void (*Free)(T*)>
struct Deleter {
    void operator()(T* p) const { Free(p); }
};
using Scenario = std::unique_ptr<ehet_scenario, Deleter<ehet_scenario, ehet_scenario_free>>;
using Policy = std::unique_ptr<ehet_policy, Deleter<ehet_policy, ehet_policy_free>>;
using Plan = std::unique_ptr<ehet_plan, Deleter<ehet_plan, ehet_plan_free>>;
using Sim = std::unique_ptr<ehet_sim, Deleter<ehet_sim, ehet_sim_free>>;

std::string take(char* s) {
    std::string out(s ? s : "");
    ehet_string_free(s);
    return out;
}

struct Options {
    std::string config;
    std::optional<double> beta, lambda;
    std::optional<long> emax_tx, emax_rc, horizon;
    std::optional<std::uint64_t> seed;
    bool no_et = false;
    std::string out;
    std::string policy = "bp";
    std::vector<std::string> policies{"op-on", "gp", "bp", "lcp", "corollary"};
    std::string sweep;
    std::string csv;
};

Scenario load(const Options& o) {
    ehet_scenario* raw = nullptr;
    check(ehet_scenario_from_file(o.config.c_str(), &raw));
    Scenario s(raw);
    if (o.beta) check(ehet_scenario_set_beta(s.get(), *o.beta));
    if (o.lambda) check(ehet_scenario_set_lambda(s.get(), *o.lambda));
    if (o.emax_tx) check(ehet_scenario_set_battery(s.get(), EHET_TX, *o.emax_tx));
    if (o.emax_rc) check(ehet_scenario_set_battery(s.get(), EHET_RC, *o.emax_rc));
    if (o.horizon) check(ehet_scenario_set_horizon(s.get(), *o.horizon));
    if (o.seed) check(ehet_scenario_set_seed(s.get(), *o.seed));
    if (o.no_et) check(ehet_scenario_set_transfer(s.get(), 0));
    return s;
}

Policy make_policy(const ehet_scenario* s, const std::string& name) {
    ehet_policy* raw = nullptr;
    if (name == "op-on")
        check(ehet_solve_online(s, &raw));
    else if (name == "gp")
        check(ehet_heuristic_policy(s, EHET_GREEDY, &raw));
    else if (name == "bp")
        check(ehet_heuristic_policy(s, EHET_BALANCED, &raw));
    else if (name == "lcp")
        check(ehet_heuristic_policy(s, EHET_LOW_COMPLEXITY, &raw));
    else if (name == "corollary")
        check(ehet_heuristic_policy(s, EHET_COROLLARY, &raw));
    else
        throw CLI::ValidationError("--policy", "unknown policy '" + name + "'");
    return Policy(raw);
}

ehet_sim_summary summarize(const ehet_sim* sim) {
    ehet_sim_summary sum{};
    check(ehet_sim_summary_get(sim, &sum));
    return sum;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw ApiError("cannot write '" + path + "'");
    os << text << '\n';
}

json bounds_json(const ehet_bounds_result& b) {
    return {{"no_et", b.no_et}, {"et", b.et}, {"xi_star", b.xi_star}};
}

int cmd_bounds(const Options& o) {
    auto s = load(o);
    ehet_bounds_result b{};
    check(ehet_bounds(s.get(), &b));
    std::printf("rho_max      %.6f\n", b.rho_max);
    if (b.tx_has_chord) std::printf("tx chord     x=%.4f m=%.6f\n", b.tx_chord_x, b.tx_chord_m);
    std::printf("bound no-ET  %.6f\n", b.no_et);
    std::printf("bound ET     %.6f\n", b.et);
    std::printf("xi*          %.6f  (c_tx=%.4f, c_rc=%.4f)\n", b.xi_star, b.c_tx, b.c_rc);
    if (!o.out.empty()) {
        json j = bounds_json(b);
        j["rho_max"] = b.rho_max;
        j["c_tx"] = b.c_tx;
        j["c_rc"] = b.c_rc;
        write_text(o.out, j.dump(2));
    }
    return 0;
}

int cmd_solve_online(const Options& o) {
    auto s = load(o);
    auto p = make_policy(s.get(), "op-on");
    double gain = 0.0;
    int iters = 0;
    check(ehet_policy_evaluate(p.get(), s.get(), &gain));
    check(ehet_policy_iterations(p.get(), &iters));
    std::printf("transfer     %s\n", o.no_et ? "off" : "on");
    std::printf("gain         %.6f\n", gain);
    std::printf("iterations   %d\n", iters);
    if (!o.out.empty()) {
        json j = json::parse(take([&] {
            char* txt = nullptr;
            check(ehet_policy_to_json(p.get(), &txt));
            return txt;
        }()));
        j["gain"] = gain;
        j["iterations"] = iters;
        write_text(o.out, j.dump());
    }
    return 0;
}

int cmd_solve_offline(const Options& o) {
    auto s = load(o);
    ehet_plan* raw = nullptr;
    check(ehet_solve_offline(s.get(), &raw));
    Plan plan(raw);
    ehet_plan_summary sum{};
    check(ehet_plan_summary_get(plan.get(), &sum));
    ehet_sim* sim_raw = nullptr;
    check(ehet_simulate_plan(s.get(), plan.get(), &sim_raw));
    Sim sim(sim_raw);
    const auto replay = summarize(sim.get());
    std::printf("slots        %d\n", sum.horizon);
    std::printf("objective    %.6f  (continuous plan)\n", sum.objective);
    std::printf("replayed     %.6f  (quantized replay)\n", replay.reward);
    std::printf("residual     %.3g\n", sum.residual);
    std::printf("upper bound  %.6f  %s\n", sum.upper_bound,
                sum.convexified ? "(concave envelope)" : (sum.certified ? "(certified)" : "(not certified)"));
    std::printf("newton steps %d\n", sum.newton_steps);
    if (!o.out.empty()) check(ehet_plan_write(plan.get(), o.out.c_str()));
    return 0;
}

int cmd_simulate(const Options& o) {
    auto s = load(o);
    auto p = make_policy(s.get(), o.policy);
    ehet_sim* raw = nullptr;
    check(ehet_simulate_policy(s.get(), p.get(), &raw));
    Sim sim(raw);
    const auto r = summarize(sim.get());
    std::printf("policy       %s\n", o.policy.c_str());
    std::printf("reward       %.6f over %ld slots\n", r.reward, r.slots);
    std::printf("outage       %ld slots (tx empty %ld, rc empty %ld)\n", r.outage_slots, r.outage_tx, r.outage_rc);
    std::printf("overflow     tx %ld, rc %ld quanta\n", r.overflow_tx, r.overflow_rc);
    if (!o.out.empty()) check(ehet_sim_write_csv(sim.get(), o.out.c_str()));
    return 0;
}

struct Row {
    std::string policy;
    double reward = 0.0;
    ehet_sim_summary sim{};
};

// One simulation per policy on the same traces; runs are independent and go in parallel.
std::vector<Row> run_policies(const Options& o, const std::vector<std::string>& names) {
    std::vector<std::future<Row>> jobs;
    for (const auto& name : names)
        jobs.push_back(std::async(std::launch::async, [&o, name] {
            auto s = load(o);
            auto p = make_policy(s.get(), name);
            ehet_sim* raw = nullptr;
            check(ehet_simulate_policy(s.get(), p.get(), &raw));
            Sim sim(raw);
            Row r{name, 0.0, summarize(sim.get())};
            r.reward = r.sim.reward;
            return r;
        }));
    std::vector<Row> rows;
    for (auto& j : jobs) rows.push_back(j.get());
    return rows;
}

int cmd_compare(const Options& o) {
    auto s = load(o);
    ehet_bounds_result b{};
    check(ehet_bounds_finite(s.get(), &b));
    const int transfer = o.no_et ? 0 : 1;
    const double bound = transfer ? b.et : b.no_et;
    const auto rows = run_policies(o, o.policies);
    double best = 0.0;
    for (const auto& r : rows) best = std::max(best, r.reward);
    std::printf("%-10s %10s %8s %8s %8s %10s %10s\n", "policy", "G", "vs best", "gap", "outage", "ovf tx", "ovf rc");
    json out = json::array();
    for (const auto& r : rows) {
        const double ratio = best > 0.0 ? r.reward / best : 0.0;
        const double gap = bound > 0.0 ? (bound - r.reward) / bound : 0.0;
        std::printf("%-10s %10.6f %8.3f %7.2f%% %8ld %10ld %10ld\n", r.policy.c_str(), r.reward, ratio, 100.0 * gap,
                    r.sim.outage_slots, r.sim.overflow_tx, r.sim.overflow_rc);
        out.push_back({{"policy", r.policy},
                       {"G", r.reward},
                       {"ratio_to_best", ratio},
                       {"gap_to_bound", gap},
                       {"outage", r.sim.outage_slots},
                       {"overflow", {{"tx", r.sim.overflow_tx}, {"rc", r.sim.overflow_rc}}}});
    }
    std::printf("finite-horizon bound %.6f\n", bound);
    if (!o.out.empty()) write_text(o.out, json{{"bound", bound}, {"rows", out}}.dump(2));
    return 0;
}

double exact_gain(ehet_scenario* s, const std::string& policy) {
    auto p = make_policy(s, policy);
    double g = 0.0;
    check(ehet_policy_evaluate(p.get(), s, &g));
    return g;
}

// "axis=v1,v2,..." with axis in lambda, beta, emax.
json sweep_series(const Options& o) {
    const auto eq = o.sweep.find('=');
    if (eq == std::string::npos) throw CLI::ValidationError("--sweep", "expected axis=v1,v2,...");
    const std::string axis = o.sweep.substr(0, eq);
    if (axis != "lambda" && axis != "beta" && axis != "emax")
        throw CLI::ValidationError("--sweep", "axis must be lambda, beta or emax");
    std::vector<double> values;
    std::stringstream ss(o.sweep.substr(eq + 1));
    for (std::string v; std::getline(ss, v, ',');) values.push_back(std::stod(v));
    json series = json::array();
    for (double v : values) {
        auto s = load(o);
        if (axis == "lambda") check(ehet_scenario_set_lambda(s.get(), v));
        if (axis == "beta") check(ehet_scenario_set_beta(s.get(), v));
        if (axis == "emax") {
            check(ehet_scenario_set_battery(s.get(), EHET_TX, std::lround(v)));
            check(ehet_scenario_set_battery(s.get(), EHET_RC, std::lround(v)));
        }
        ehet_bounds_result b{};
        check(ehet_bounds(s.get(), &b));
        const double et = exact_gain(s.get(), "op-on");
        check(ehet_scenario_set_transfer(s.get(), 0));
        const double no_et = exact_gain(s.get(), "op-on");
        series.push_back({{"axis", axis},
                          {"value", v},
                          {"bound_no_et", b.no_et},
                          {"bound_et", b.et},
                          {"no_et", no_et},
                          {"et", et},
                          {"improvement", no_et > 0.0 ? (et - no_et) / no_et : 0.0}});
    }
    return series;
}

int cmd_report(const Options& o) {
    auto s = load(o);
    json report;
    report["config_echo"] = json::parse(take([&] {
        char* txt = nullptr;
        check(ehet_scenario_to_json(s.get(), &txt));
        return txt;
    }()));
    ehet_bounds_result b{};
    check(ehet_bounds(s.get(), &b));
    report["bounds"] = bounds_json(b);

    // Baseline for the improvement column: the optimal policy without transfer.
    Options base = o;
    base.no_et = true;
    const auto baseline = run_policies(base, {"op-on"}).front();
    const auto rows = run_policies(o, o.policies);
    json results = json::array();
    for (const auto& r : rows)
        results.push_back({{"policy", r.policy},
                           {"G", r.reward},
                           {"improvement", baseline.reward > 0.0 ? (r.reward - baseline.reward) / baseline.reward : 0.0},
                           {"outage", r.sim.outage_slots},
                           {"overflow", r.sim.overflow_tx + r.sim.overflow_rc}});
    results.push_back({{"policy", "op-on-no-et"},
                       {"G", baseline.reward},
                       {"improvement", 0.0},
                       {"outage", baseline.sim.outage_slots},
                       {"overflow", baseline.sim.overflow_tx + baseline.sim.overflow_rc}});
    report["results"] = std::move(results);
    report["series"] = o.sweep.empty() ? json::array() : sweep_series(o);

    if (!o.csv.empty()) {
        auto p = make_policy(s.get(), o.policy);
        ehet_sim* raw = nullptr;
        check(ehet_simulate_policy(s.get(), p.get(), &raw));
        Sim sim(raw);
        check(ehet_sim_write_csv(sim.get(), o.csv.c_str()));
    }
    const std::string text = report.dump(2);
    if (o.out.empty())
        std::cout << text << '\n';
    else
        write_text(o.out, text);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Transmission and energy-transfer policies for two energy-harvesting devices"};
    app.require_subcommand(1);
    Options o;

    const auto common = [&](CLI::App* sub, bool allow_no_et) {
        sub->add_option("--config", o.config, "JSON scenario file")->required()->check(CLI::ExistingFile);
        auto* beta = sub->add_option("--beta", o.beta, "transfer efficiency in [0, 1]");
        sub->add_option("--lambda", o.lambda, "reward scaling Lambda");
        sub->add_option("--emax-tx", o.emax_tx, "transmitter battery in quanta");
        sub->add_option("--emax-rc", o.emax_rc, "receiver battery in quanta");
        sub->add_option("--horizon", o.horizon, "slots to simulate");
        sub->add_option("--seed", o.seed, "seed for sampled arrivals");
        sub->add_option("--out", o.out, "output file");
        if (allow_no_et) sub->add_flag("--no-et", o.no_et, "disable energy transfer (d = 0)")->excludes(beta);
    };

    auto* bounds = app.add_subcommand("bounds", "long-term reward upper bounds");
    common(bounds, false);
    auto* online = app.add_subcommand("solve-online", "optimal online policy by policy iteration");
    common(online, true);
    auto* offline = app.add_subcommand("solve-offline", "optimal offline plan on the scenario traces");
    common(offline, true);
    auto* sim = app.add_subcommand("simulate", "simulate one policy on the scenario traces");
    common(sim, true);
    sim->add_option("--policy", o.policy, "op-on, gp, bp, lcp or corollary")
        ->check(CLI::IsMember({"op-on", "gp", "bp", "lcp", "corollary"}));
    auto* cmp = app.add_subcommand("compare", "simulate several policies on identical traces");
    common(cmp, true);
    cmp->add_option("--policies", o.policies, "policies to compare")
        ->delimiter(',')
        ->check(CLI::IsMember({"op-on", "gp", "bp", "lcp", "corollary"}));
    auto* report = app.add_subcommand("report", "JSON report with bounds, results and series");
    common(report, false);
    report->add_option("--policies", o.policies, "policies to include")
        ->delimiter(',')
        ->check(CLI::IsMember({"op-on", "gp", "bp", "lcp", "corollary"}));
    report->add_option("--sweep", o.sweep, "series axis and values, e.g. lambda=0.001,0.1,10");
    report->add_option("--csv", o.csv, "trajectory CSV of --policy");
    report->add_option("--policy", o.policy, "policy for the trajectory CSV")
        ->check(CLI::IsMember({"op-on", "gp", "bp", "lcp", "corollary"}));

    CLI11_PARSE(app, argc, argv);
    try {
        if (*bounds) return cmd_bounds(o);
        if (*online) return cmd_solve_online(o);
        if (*offline) return cmd_solve_offline(o);
        if (*sim) return cmd_simulate(o);
        if (*cmp) return cmd_compare(o);
        if (*report) return cmd_report(o);
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
