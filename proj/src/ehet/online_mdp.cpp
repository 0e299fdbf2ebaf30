#include "ehet/online_mdp.hpp"

#include "ehet/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

namespace ehet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string describe(const State& s) {
    return "(" + std::to_string(s.e_tx) + ", " + std::to_string(s.e_rc) + ")";
}

// Row-major (e_max+1)^2 table of P(min(y + B, e_max) = e).
std::vector<double> arrival_kernel(const ArrivalProcess& arr, long e_max) {
    const long n = e_max + 1;
    std::vector<double> k(static_cast<std::size_t>(n * n), 0.0);
    for (long y = 0; y < n; ++y)
        for (long b = 0; b <= arr.b_max(); ++b)
            k[y * n + std::min(y + b, e_max)] += arr.pmf(b);
    return k;
}

std::vector<double> power_candidates(const State& s, const SystemConfig& cfg) {
    const auto ctx = cfg.cost_tx();
    const auto crc = cfg.cost_rc();
    const double cap = std::min({cfg.rho_max, ctx.inverse(s.e_tx, cfg.rho_max),
                                 crc.inverse(s.e_rc, cfg.rho_max)});
    std::vector<double> rho;
    for (long j = 0; j <= s.e_tx; ++j) rho.push_back(std::min(ctx.inverse(j, cfg.rho_max), cap));
    for (long j = 0; j <= s.e_rc; ++j) rho.push_back(std::min(crc.inverse(j, cfg.rho_max), cap));
    std::sort(rho.begin(), rho.end());
    rho.erase(std::unique(rho.begin(), rho.end()), rho.end());
    // Powers with identical quantized costs lead to the same successor; keep the largest.
    std::vector<double> kept;
    for (std::size_t i = 0; i < rho.size(); ++i) {
        if (i + 1 < rho.size() && ctx(rho[i]) == ctx(rho[i + 1]) && crc(rho[i]) == crc(rho[i + 1]))
            continue;
        kept.push_back(rho[i]);
    }
    return kept;
}

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Transition matrix of a fixed policy (dense; rows are current states).
Matrix policy_matrix(const EnergyMdp& mdp, const std::vector<std::size_t>& post) {
    const auto n = static_cast<Eigen::Index>(mdp.num_states());
    Matrix p = Matrix::Zero(n, n);
    for (Eigen::Index s = 0; s < n; ++s) {
        const long yt = static_cast<long>(post[s]) / mdp.n_rc;
        const long yr = static_cast<long>(post[s]) % mdp.n_rc;
        for (long et = 0; et < mdp.n_tx; ++et) {
            const double pt = mdp.kernel_tx[yt * mdp.n_tx + et];
            if (pt == 0.0) continue;
            for (long er = 0; er < mdp.n_rc; ++er) {
                const double pr = mdp.kernel_rc[yr * mdp.n_rc + er];
                if (pr != 0.0) p(s, et * mdp.n_rc + er) += pt * pr;
            }
        }
    }
    return p;
}

// Closed communicating classes of the chain with transition matrix p (Tarjan, iterative).
std::vector<std::vector<Eigen::Index>> closed_classes(const Matrix& p) {
    const Eigen::Index n = p.rows();
    std::vector<std::vector<Eigen::Index>> adj(n);
    for (Eigen::Index s = 0; s < n; ++s)
        for (Eigen::Index t = 0; t < n; ++t)
            if (p(s, t) > 0.0) adj[s].push_back(t);

    std::vector<Eigen::Index> index(n, -1), low(n, 0), comp(n, -1), stack;
    std::vector<bool> on_stack(n, false);
    std::vector<std::vector<Eigen::Index>> comps;
    Eigen::Index counter = 0;
    struct Frame {
        Eigen::Index v;
        std::size_t next;
    };
    for (Eigen::Index root = 0; root < n; ++root) {
        if (index[root] >= 0) continue;
        std::vector<Frame> frames{{root, 0}};
        index[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = true;
        while (!frames.empty()) {
            Frame& f = frames.back();
            if (f.next < adj[f.v].size()) {
                const Eigen::Index w = adj[f.v][f.next++];
                if (index[w] < 0) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    frames.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[f.v] = std::min(low[f.v], index[w]);
                }
                continue;
            }
            const Eigen::Index v = f.v;
            frames.pop_back();
            if (!frames.empty()) low[frames.back().v] = std::min(low[frames.back().v], low[v]);
            if (low[v] == index[v]) {
                std::vector<Eigen::Index> c;
                Eigen::Index w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    comp[w] = static_cast<Eigen::Index>(comps.size());
                    c.push_back(w);
                } while (w != v);
                comps.push_back(std::move(c));
            }
        }
    }
    std::vector<std::vector<Eigen::Index>> closed;
    for (std::size_t c = 0; c < comps.size(); ++c) {
        bool leaves = false;
        for (Eigen::Index v : comps[c])
            for (Eigen::Index w : adj[v]) leaves = leaves || comp[w] != static_cast<Eigen::Index>(c);
        if (!leaves) {
            std::sort(comps[c].begin(), comps[c].end());
            closed.push_back(std::move(comps[c]));
        }
    }
    return closed;
}

// Average-reward Poisson equations with h(anchor) = 0; returns (gain, bias).
std::pair<double, Vector> solve_poisson(const Matrix& p, const Vector& r, Eigen::Index anchor) {
    const Eigen::Index n = p.rows();
    Matrix a = Matrix::Identity(n, n) - p;
    a.col(anchor).setOnes();
    Vector z = a.partialPivLu().solve(r);
    const double gain = z(anchor);
    z(anchor) = 0.0;
    return {gain, z};
}

Vector stationary_on(const Matrix& p, const std::vector<Eigen::Index>& cls) {
    const auto m = static_cast<Eigen::Index>(cls.size());
    Matrix a(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j) a(i, j) = (i == j ? 1.0 : 0.0) - p(cls[j], cls[i]);
    a.row(m - 1).setOnes();
    Vector rhs = Vector::Zero(m);
    rhs(m - 1) = 1.0;
    Vector pi = a.partialPivLu().solve(rhs);
    for (Eigen::Index i = 0; i < m; ++i) pi(i) = std::max(pi(i), 0.0);
    return pi / pi.sum();
}

struct ChainAnalysis {
    PolicyEvaluation eval;
    std::size_t closed_count = 0;
};

ChainAnalysis analyse_chain(const EnergyMdp& mdp, const std::vector<std::size_t>& post,
                            const Vector& r) {
    const Matrix p = policy_matrix(mdp, post);
    const auto classes = closed_classes(p);
    const Eigen::Index n = p.rows();
    const Eigen::Index origin = 0;

    std::vector<int> class_of(n, -1);
    for (std::size_t c = 0; c < classes.size(); ++c)
        for (Eigen::Index v : classes[c]) class_of[v] = static_cast<int>(c);

    std::vector<double> weight(classes.size(), 0.0);
    if (class_of[origin] >= 0) {
        weight[class_of[origin]] = 1.0;
    } else if (classes.size() == 1) {
        weight[0] = 1.0;
    } else {
        // Absorption probabilities from the origin into each closed class.
        std::vector<Eigen::Index> transient;
        std::vector<Eigen::Index> pos(n, -1);
        for (Eigen::Index v = 0; v < n; ++v)
            if (class_of[v] < 0) {
                pos[v] = static_cast<Eigen::Index>(transient.size());
                transient.push_back(v);
            }
        const auto m = static_cast<Eigen::Index>(transient.size());
        Matrix a = Matrix::Identity(m, m);
        Matrix b = Matrix::Zero(m, static_cast<Eigen::Index>(classes.size()));
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index w = 0; w < n; ++w) {
                const double pw = p(transient[i], w);
                if (pw == 0.0) continue;
                if (class_of[w] >= 0)
                    b(i, class_of[w]) += pw;
                else
                    a(i, pos[w]) -= pw;
            }
        const Matrix absorb = a.partialPivLu().solve(b);
        for (std::size_t c = 0; c < classes.size(); ++c)
            weight[c] = std::max(0.0, absorb(pos[origin], static_cast<Eigen::Index>(c)));
    }

    ChainAnalysis out;
    out.closed_count = classes.size();
    out.eval.steady_state.assign(static_cast<std::size_t>(n), 0.0);
    for (std::size_t c = 0; c < classes.size(); ++c) {
        if (weight[c] == 0.0) continue;
        const Vector pi = stationary_on(p, classes[c]);
        for (std::size_t i = 0; i < classes[c].size(); ++i)
            out.eval.steady_state[classes[c][i]] += weight[c] * pi(static_cast<Eigen::Index>(i));
    }
    double total = 0.0, gain = 0.0;
    for (Eigen::Index s = 0; s < n; ++s) total += out.eval.steady_state[s];
    for (Eigen::Index s = 0; s < n; ++s) {
        out.eval.steady_state[s] /= total;
        gain += out.eval.steady_state[s] * r(s);
    }
    out.eval.gain = gain;
    if (classes.size() == 1) {
        const auto [g, h] = solve_poisson(p, r, origin);
        out.eval.bias.assign(h.data(), h.data() + n);
    }
    return out;
}

// W(y) = E[h(next state) | post-decision state y], as an n_tx x n_rc table.
Matrix expected_bias(const EnergyMdp& mdp, const Vector& h) {
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
        kt(mdp.kernel_tx.data(), mdp.n_tx, mdp.n_tx),
        kr(mdp.kernel_rc.data(), mdp.n_rc, mdp.n_rc),
        hm(h.data(), mdp.n_tx, mdp.n_rc);
    return kt * hm * kr.transpose();
}

double q_value(const EnergyMdp& mdp, const Matrix& w, std::size_t s, std::size_t a) {
    const std::size_t y = mdp.post[s][a];
    return mdp.reward[s][a] + w(static_cast<Eigen::Index>(y / mdp.n_rc),
                                static_cast<Eigen::Index>(y % mdp.n_rc));
}

// Pick the best action; among near-ties prefer larger rho, then smaller d.
std::size_t greedy_action(const EnergyMdp& mdp, const Matrix& w, std::size_t s, double& best_q) {
    const auto& acts = mdp.actions[s];
    best_q = -kInf;
    for (std::size_t a = 0; a < acts.size(); ++a) best_q = std::max(best_q, q_value(mdp, w, s, a));
    const double tol = 1e-10 * std::max(1.0, std::abs(best_q));
    std::size_t pick = 0;
    bool found = false;
    for (std::size_t a = 0; a < acts.size(); ++a) {
        if (q_value(mdp, w, s, a) < best_q - tol) continue;
        if (!found || acts[a].rho > acts[pick].rho ||
            (acts[a].rho == acts[pick].rho && acts[a].d < acts[pick].d)) {
            pick = a;
            found = true;
        }
    }
    return pick;
}

OnlinePolicy to_policy(const EnergyMdp& mdp, const std::vector<std::size_t>& choice) {
    OnlinePolicy pol(mdp.n_tx - 1, mdp.n_rc - 1);
    for (std::size_t s = 0; s < choice.size(); ++s) pol.at(s) = mdp.actions[s][choice[s]];
    return pol;
}

} // namespace

void SystemConfig::validate() const {
    if (e_max_tx < 1 || e_max_rc < 1) throw DomainError("battery capacities must be >= 1 quantum");
    if (!(beta >= 0.0 && beta <= 1.0)) throw DomainError("beta must lie in [0, 1]");
    if (!(rho_max >= 0.0) || !std::isfinite(rho_max)) throw DomainError("rho_max must be finite and >= 0");
    const double limit = max_supported_power(q_tx, q_rc, e_max_tx, e_max_rc, quantization);
    if (rho_max > limit * (1.0 + 1e-12) + 1e-12)
        throw DomainError("rho_max " + std::to_string(rho_max) +
                          " needs more energy than a full battery holds (limit " +
                          std::to_string(limit) + ")");
}

double max_supported_power(const ConsumptionModel& q_tx, const ConsumptionModel& q_rc,
                           long e_max_tx, long e_max_rc, Quantization mode) {
    return std::min(inverse_discrete(q_tx, e_max_tx, kInf, mode),
                    inverse_discrete(q_rc, e_max_rc, kInf, mode));
}

bool feasible(const State& s, const Action& a, const SystemConfig& cfg) {
    if (s.e_tx < 0 || s.e_rc < 0 || s.e_tx > cfg.e_max_tx || s.e_rc > cfg.e_max_rc) return false;
    if (!(a.rho >= 0.0) || a.rho > cfg.rho_max * (1.0 + 1e-12) || a.d < 0) return false;
    if (!cfg.transfer_enabled && a.d != 0) return false;
    return cfg.cost_tx()(a.rho) <= s.e_tx && cfg.cost_rc()(a.rho) + a.d <= s.e_rc;
}

std::vector<Successor> transition(const State& s, const Action& a, const SystemConfig& cfg) {
    if (!feasible(s, a, cfg))
        throw ContractViolation("infeasible action (rho=" + std::to_string(a.rho) +
                                ", d=" + std::to_string(a.d) + ") in state " + describe(s));
    const long yt = std::min(s.e_tx - cfg.cost_tx()(a.rho) + cfg.transferred(a.d), cfg.e_max_tx);
    const long yr = s.e_rc - cfg.cost_rc()(a.rho) - a.d;
    std::map<std::pair<long, long>, double> acc;
    for (long bt = 0; bt <= cfg.arr_tx.b_max(); ++bt) {
        if (cfg.arr_tx.pmf(bt) == 0.0) continue;
        for (long br = 0; br <= cfg.arr_rc.b_max(); ++br) {
            if (cfg.arr_rc.pmf(br) == 0.0) continue;
            acc[{std::min(yt + bt, cfg.e_max_tx), std::min(yr + br, cfg.e_max_rc)}] +=
                cfg.arr_tx.pmf(bt) * cfg.arr_rc.pmf(br);
        }
    }
    std::vector<Successor> out;
    for (const auto& [st, p] : acc) out.push_back({{st.first, st.second}, p});
    return out;
}

std::vector<Action> action_grid(const State& s, const SystemConfig& cfg) {
    if (s.e_tx < 0 || s.e_rc < 0 || s.e_tx > cfg.e_max_tx || s.e_rc > cfg.e_max_rc)
        throw DomainError("state " + describe(s) + " outside the battery grid");
    std::vector<Action> out;
    const auto crc = cfg.cost_rc();
    for (double rho : power_candidates(s, cfg)) {
        const long d_max = cfg.transfer_enabled ? s.e_rc - crc(rho) : 0;
        for (long d = 0; d <= d_max; ++d) out.push_back({rho, d});
    }
    return out;
}

OnlinePolicy::OnlinePolicy(long e_max_tx, long e_max_rc)
    : e_max_tx_(e_max_tx), e_max_rc_(e_max_rc) {
    if (e_max_tx < 0 || e_max_rc < 0) throw DomainError("negative battery size");
    actions_.assign(static_cast<std::size_t>((e_max_tx + 1) * (e_max_rc + 1)), Action{});
}

std::size_t OnlinePolicy::index(const State& s) const {
    if (s.e_tx < 0 || s.e_rc < 0 || s.e_tx > e_max_tx_ || s.e_rc > e_max_rc_)
        throw DomainError("state " + describe(s) + " outside the policy grid");
    return static_cast<std::size_t>(s.e_tx * (e_max_rc_ + 1) + s.e_rc);
}

State OnlinePolicy::state(std::size_t i) const {
    const auto n = static_cast<std::size_t>(e_max_rc_ + 1);
    return {static_cast<long>(i / n), static_cast<long>(i % n)};
}

void OnlinePolicy::check_feasible(const SystemConfig& cfg) const {
    if (e_max_tx_ != cfg.e_max_tx || e_max_rc_ != cfg.e_max_rc)
        throw ContractViolation("policy grid does not match the battery sizes");
    for (std::size_t i = 0; i < actions_.size(); ++i)
        if (!feasible(state(i), actions_[i], cfg))
            throw ContractViolation("policy action infeasible in state " + describe(state(i)));
}

EnergyMdp::EnergyMdp(const SystemConfig& config)
    : cfg(config), n_tx(config.e_max_tx + 1), n_rc(config.e_max_rc + 1) {
    cfg.validate();
    kernel_tx = arrival_kernel(cfg.arr_tx, cfg.e_max_tx);
    kernel_rc = arrival_kernel(cfg.arr_rc, cfg.e_max_rc);
    const std::size_t n = num_states();
    actions.resize(n);
    reward.resize(n);
    post.resize(n);
    for (std::size_t s = 0; s < n; ++s) {
        const State st = state(s);
        actions[s] = action_grid(st, cfg);
        reward[s].reserve(actions[s].size());
        post[s].reserve(actions[s].size());
        for (const Action& a : actions[s]) {
            reward[s].push_back(cfg.g(a.rho));
            post[s].push_back(index(post_decision(st, a)));
        }
    }
}

State EnergyMdp::post_decision(const State& s, const Action& a) const {
    return {std::min(s.e_tx - cfg.cost_tx()(a.rho) + cfg.transferred(a.d), cfg.e_max_tx),
            s.e_rc - cfg.cost_rc()(a.rho) - a.d};
}

PolicyEvaluation evaluate_policy(const OnlinePolicy& policy, const SystemConfig& cfg) {
    cfg.validate();
    policy.check_feasible(cfg);
    EnergyMdp shape(cfg);
    std::vector<std::size_t> post(policy.num_states());
    Vector r(static_cast<Eigen::Index>(policy.num_states()));
    for (std::size_t s = 0; s < post.size(); ++s) {
        post[s] = shape.index(shape.post_decision(policy.state(s), policy.at(s)));
        r(static_cast<Eigen::Index>(s)) = cfg.g(policy.at(s).rho);
    }
    return analyse_chain(shape, post, r).eval;
}

OnlineSolution policy_iteration(const SystemConfig& cfg, const SolverOptions& opts) {
    const EnergyMdp mdp(cfg);
    const std::size_t n = mdp.num_states();
    std::vector<std::size_t> choice(n, 0); // action 0 is (rho = 0, d = 0)

    OnlineSolution sol{OnlinePolicy(cfg.e_max_tx, cfg.e_max_rc), {}, {}, 0, false};
    const auto post_of = [&](const std::vector<std::size_t>& c) {
        std::vector<std::size_t> p(n);
        for (std::size_t s = 0; s < n; ++s) p[s] = mdp.post[s][c[s]];
        return p;
    };
    const auto reward_of = [&](const std::vector<std::size_t>& c) {
        Vector r(static_cast<Eigen::Index>(n));
        for (std::size_t s = 0; s < n; ++s) r(static_cast<Eigen::Index>(s)) = mdp.reward[s][c[s]];
        return r;
    };

    bool multichain = false;
    Vector h;
    while (true) {
        if (sol.iterations >= opts.max_iterations)
            throw ConvergenceError("policy iteration exceeded " + std::to_string(opts.max_iterations) +
                                   " iterations");
        ++sol.iterations;
        const auto post = post_of(choice);
        const Vector r = reward_of(choice);
        const Matrix p = policy_matrix(mdp, post);
        if (closed_classes(p).size() != 1) {
            multichain = true;
            break;
        }
        auto [gain, bias] = solve_poisson(p, r, 0);
        sol.gain_history.push_back(gain);
        h = std::move(bias);

        const Matrix w = expected_bias(mdp, h);
        bool changed = false;
        for (std::size_t s = 0; s < n; ++s) {
            double best = 0.0;
            const double current = q_value(mdp, w, s, choice[s]);
            const std::size_t pick = greedy_action(mdp, w, s, best);
            if (current >= best - 1e-10 * std::max(1.0, std::abs(best))) continue;
            choice[s] = pick;
            changed = true;
        }
        if (!changed) break;
    }

    if (multichain) {
        // Relative value iteration with an aperiodicity transform; no unichain requirement.
        sol.used_value_iteration = true;
        const double tau = 0.5;
        if (h.size() != static_cast<Eigen::Index>(n)) h = Vector::Zero(static_cast<Eigen::Index>(n));
        Vector th(h.size());
        long sweep = 0;
        for (;; ++sweep) {
            if (sweep >= opts.rvi_max_sweeps)
                throw ConvergenceError("relative value iteration did not converge");
            const Matrix w = expected_bias(mdp, h);
            for (std::size_t s = 0; s < n; ++s) {
                double best = 0.0;
                choice[s] = greedy_action(mdp, w, s, best);
                th(static_cast<Eigen::Index>(s)) = best;
            }
            const Vector diff = th - h;
            const double span = diff.maxCoeff() - diff.minCoeff();
            h = (1.0 - tau) * h + tau * th;
            h.array() -= h(0);
            if (span < opts.rvi_tolerance) break;
        }
    }

    sol.policy = to_policy(mdp, choice);
    const ChainAnalysis final = analyse_chain(mdp, post_of(choice), reward_of(choice));
    sol.evaluation = final.eval;
    if (multichain) sol.gain_history.push_back(final.eval.gain);
    return sol;
}

} // namespace ehet
