#include "ehet/offline.hpp"

#include "ehet/errors.hpp"
#include "ehet/psi.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <utility>

namespace ehet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Prefix sums of the usable arrivals: out[k] = sum_{j=1..k} b_j for k <= K-1.
std::vector<double> arrival_prefix(const std::vector<double>& b, int horizon) {
    std::vector<double> out(static_cast<std::size_t>(horizon), 0.0);
    for (int k = 1; k < horizon; ++k) out[k] = out[k - 1] + b[k - 1];
    return out;
}

// h(x) = g(q^{-1}(x)), the reward bought with energy x, or its concave envelope.
class EnergyReward {
public:
    EnergyReward(const ConsumptionModel& q, const RewardFunction& g, double rho_cap)
        : q_(q), g_(g), rho_cap_(rho_cap), psi_(build_psi(q, g, rho_cap)) {
        exact_ = psi_.is_cost();
    }

    bool exact() const { return exact_; }

    /// Powers the relaxed energy x time-shares between: the ends of its chord, or q^{-1}(x) twice.
    std::pair<double, double> powers(double x) const {
        if (!exact_ && x < psi_.max_energy()) {
            const auto pieces = psi_.pieces();
            const auto it = std::lower_bound(pieces.begin(), pieces.end(), x,
                                             [](const PsiFunction::Piece& pc, double v) { return pc.x_hi < v; });
            if (it != pieces.end() && it->kind == PsiFunction::PieceKind::EnvelopeChord) return {it->p_lo, it->p_hi};
        }
        const double p = std::min(q_.inverse(std::max(x, 0.0)), rho_cap_);
        return {p, p};
    }

    struct Eval {
        double h, h1, h2;
    };

    Eval operator()(double x) const {
        // Past rho_cap the curve is extended smoothly; the solver caps y at g(rho_cap) separately.
        if (!exact_) {
            const auto pieces = psi_.pieces();
            auto it = std::lower_bound(pieces.begin(), pieces.end(), x,
                                       [](const PsiFunction::Piece& pc, double v) { return pc.x_hi < v; });
            if (it == pieces.end()) --it;
            if (it->kind == PsiFunction::PieceKind::EnvelopeChord) {
                const double m = it->chord_slope();
                return {it->g_lo + m * (x - it->x_lo), m, 0.0};
            }
        }
        const double p = q_.inverse(std::max(x, 0.0));
        const double q1 = q_.derivative(p), q2 = q_.second_derivative(p);
        const double g1 = g_.derivative(p), g2 = g_.second_derivative(p);
        return {g_(p), g1 / q1, (g2 - g1 * q2 / q1) / (q1 * q1)};
    }

private:
    ConsumptionModel q_;
    RewardFunction g_;
    double rho_cap_;
    PsiFunction psi_;
    bool exact_ = true;
};

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/**
 * Log-barrier interior-point method on
 *   max sum y_k  s.t.  y_k <= h_tx(a_k), y_k <= h_rc(b_k), y_k <= g(rho_cap),
 *                      cumulative battery rows linear in (a, b, D),  a, b, D > 0.
 * Slots that can never hold energy in both batteries keep a = b = y = 0.
 */
class BarrierSolver {
public:
    BarrierSolver(const OfflineInstance& inst, bool finite, double rho_cap)
        : inst_(inst),
          rho_cap_(rho_cap),
          k_(inst.horizon),
          beta_(inst.transfer_enabled ? inst.beta : 0.0),
          h_tx_(inst.q_tx, inst.g, rho_cap),
          h_rc_(inst.q_rc, inst.g, rho_cap),
          y_cap_(inst.g(rho_cap)) {
        bt_ = arrival_prefix(inst.b_tx, k_);
        br_ = arrival_prefix(inst.b_rc, k_);
        cap_tx_ = finite && inst.e_max_tx ? *inst.e_max_tx : kInf;
        cap_rc_ = finite && inst.e_max_rc ? *inst.e_max_rc : kInf;
        start();
    }

    bool exact() const { return h_tx_.exact() && h_rc_.exact(); }
    const EnergyReward& reward_tx() const { return h_tx_; }
    const EnergyReward& reward_rc() const { return h_rc_; }

    struct Result {
        std::vector<double> a, b, y, d;
        double gap = 0.0;
        int steps = 0;
    };

    Result solve() {
        Result r;
        double gap = 0.0;
        if (n_ > 0) {
            double t = 1.0;
            gap = kInf;
            for (int outer = 0; outer < 60; ++outer) {
                if (!center(t, r.steps)) break;
                gap = static_cast<double>(m_) / t;
                double total = 0.0;
                for (int k = 0; k < k_; ++k) total += y_[k];
                if (gap <= 1e-9 * std::max(1.0, std::abs(total))) break;
                t *= 10.0;
            }
        }
        r.a = a_;
        r.b = b_;
        r.y = y_;
        r.d = d_;
        r.gap = gap;
        return r;
    }

private:
    struct Point {
        std::vector<double> a, b, y, d;
    };

    double rhs(bool tx, int i, int k) const {
        const double base = i == 1 ? (tx ? inst_.e_init_tx : inst_.e_init_rc) : (tx ? cap_tx_ : cap_rc_);
        const auto& pre = tx ? bt_ : br_;
        return base + pre[k - 1] - pre[i - 1];
    }

    bool row_present(bool tx, int i) const { return i == 1 || std::isfinite(tx ? cap_tx_ : cap_rc_); }

    std::size_t at(int i, int k) const { return static_cast<std::size_t>((i - 1) * k_ + (k - 1)); }

    // Strictly feasible start: each slot spends a quarter of what each battery holds.
    void start() {
        a_.assign(k_, 0.0);
        b_.assign(k_, 0.0);
        y_.assign(k_, 0.0);
        d_.assign(k_, 0.0);
        live_.assign(k_, false);
        free_d_.assign(k_, false);
        double et = inst_.e_init_tx, er = inst_.e_init_rc;
        for (int k = 0; k < k_; ++k) {
            double p = 0.0;
            if (et > 0.0 && er > 0.0) {
                p = std::min(inst_.q_tx.inverse(et / 4.0), inst_.q_rc.inverse(er / 4.0));
                p = std::min(p, rho_cap_ / 2.0);
            }
            if (p > 0.0) {
                live_[k] = true;
                a_[k] = inst_.q_tx(p);
                b_[k] = inst_.q_rc(p);
                y_[k] = inst_.g(p) / 2.0;
            }
            if (beta_ > 0.0 && k + 1 < k_ && er > 0.0) {
                free_d_[k] = true;
                d_[k] = er / 4.0;
            }
            const double b_t = k + 1 < k_ ? inst_.b_tx[k] : 0.0;
            const double b_r = k + 1 < k_ ? inst_.b_rc[k] : 0.0;
            et = std::min(et - a_[k] + beta_ * d_[k] + b_t, cap_tx_);
            er = std::min(er - b_[k] - d_[k] + b_r, cap_rc_);
        }
        ia_.assign(k_, -1);
        ib_.assign(k_, -1);
        iy_.assign(k_, -1);
        id_.assign(k_, -1);
        n_ = 0;
        for (int k = 0; k < k_; ++k)
            if (live_[k]) {
                ia_[k] = n_++;
                ib_[k] = n_++;
                iy_[k] = n_++;
            }
        for (int k = 0; k < k_; ++k)
            if (free_d_[k]) id_[k] = n_++;

        // A row matters only if it touches a free variable.
        std::vector<int> fl(k_ + 1, 0), fd(k_ + 1, 0);
        for (int k = 1; k <= k_; ++k) {
            fl[k] = fl[k - 1] + live_[k - 1];
            fd[k] = fd[k - 1] + free_d_[k - 1];
        }
        active_tx_.assign(static_cast<std::size_t>(k_) * k_, 0);
        active_rc_.assign(static_cast<std::size_t>(k_) * k_, 0);
        m_ = 0;
        for (int k = 1; k <= k_; ++k)
            for (int i = 1; i <= k; ++i) {
                if (row_present(true, i) && fl[k] - fl[i - 1] + fd[k - 1] - fd[i - 1] > 0)
                    m_ += active_tx_[at(i, k)] = 1;
                if (row_present(false, i) && fl[k] - fl[i - 1] + fd[k] - fd[i - 1] > 0)
                    m_ += active_rc_[at(i, k)] = 1;
            }
        for (int k = 0; k < k_; ++k) {
            if (live_[k]) m_ += 5;
            if (free_d_[k]) m_ += 1;
        }
        if (n_ > 0 && !std::isfinite(barrier(0.0, {a_, b_, y_, d_})))
            throw ConvergenceError("offline solver could not build a strictly feasible start");
    }

    Point moved(const Vector& dir, double step) const {
        Point p{a_, b_, y_, d_};
        for (int k = 0; k < k_; ++k) {
            if (live_[k]) {
                p.a[k] += step * dir(ia_[k]);
                p.b[k] += step * dir(ib_[k]);
                p.y[k] += step * dir(iy_[k]);
            }
            if (free_d_[k]) p.d[k] += step * dir(id_[k]);
        }
        return p;
    }

    Point direction(const Vector& dir) const {
        Point p{std::vector<double>(k_, 0.0), std::vector<double>(k_, 0.0), std::vector<double>(k_, 0.0),
                std::vector<double>(k_, 0.0)};
        for (int k = 0; k < k_; ++k) {
            if (live_[k]) {
                p.a[k] = dir(ia_[k]);
                p.b[k] = dir(ib_[k]);
                p.y[k] = dir(iy_[k]);
            }
            if (free_d_[k]) p.d[k] = dir(id_[k]);
        }
        return p;
    }

    // Left-hand sides of the active rows.
    void row_lhs(const Point& p, std::vector<double>& l_tx, std::vector<double>& l_rc) const {
        std::vector<double> ca(k_ + 1, 0.0), cb(k_ + 1, 0.0), cd(k_ + 1, 0.0);
        for (int k = 1; k <= k_; ++k) {
            ca[k] = ca[k - 1] + p.a[k - 1];
            cb[k] = cb[k - 1] + p.b[k - 1];
            cd[k] = cd[k - 1] + p.d[k - 1];
        }
        l_tx.assign(static_cast<std::size_t>(k_) * k_, 0.0);
        l_rc.assign(static_cast<std::size_t>(k_) * k_, 0.0);
        for (int k = 1; k <= k_; ++k)
            for (int i = 1; i <= k; ++i) {
                const std::size_t r = at(i, k);
                if (active_tx_[r]) l_tx[r] = ca[k] - ca[i - 1] - beta_ * (cd[k - 1] - cd[i - 1]);
                if (active_rc_[r]) l_rc[r] = cb[k] - cb[i - 1] + cd[k] - cd[i - 1];
            }
    }

    // Slacks of the active rows, or false if any is nonpositive.
    bool slacks(const Point& p, std::vector<double>& s_tx, std::vector<double>& s_rc) const {
        row_lhs(p, s_tx, s_rc);
        for (int k = 1; k <= k_; ++k)
            for (int i = 1; i <= k; ++i) {
                const std::size_t r = at(i, k);
                if (active_tx_[r] && !((s_tx[r] = rhs(true, i, k) - s_tx[r]) > 0.0)) return false;
                if (active_rc_[r] && !((s_rc[r] = rhs(false, i, k) - s_rc[r]) > 0.0)) return false;
            }
        return true;
    }

    /**
     * Barrier change from the current point along alpha * delta, summed from relative slack
     * changes so that it stays accurate when t is large. +inf if the step leaves the domain.
     */
    double change(double t, const Point& delta, double alpha, const std::vector<double>& s_tx,
                  const std::vector<double>& s_rc, const std::vector<double>& dl_tx,
                  const std::vector<double>& dl_rc) const {
        double df = 0.0;
        const auto term = [&df](double ds, double s0) {
            const double ratio = ds / s0;
            if (!(ratio > -1.0)) return false;
            df -= std::log1p(ratio);
            return true;
        };
        for (int k = 0; k < k_; ++k) {
            if (live_[k]) {
                const double da = alpha * delta.a[k], db = alpha * delta.b[k], dy = alpha * delta.y[k];
                const double a = a_[k], b = b_[k], y = y_[k];
                if (!term(da, a) || !term(db, b)) return kInf;
                const double ht = h_tx_(a).h, hr = h_rc_(b).h;
                if (!term(h_tx_(a + da).h - ht - dy, ht - y) || !term(h_rc_(b + db).h - hr - dy, hr - y) ||
                    !term(-dy, y_cap_ - y))
                    return kInf;
                df -= t * dy;
            }
            if (free_d_[k] && !term(alpha * delta.d[k], d_[k])) return kInf;
        }
        for (std::size_t r = 0; r < s_tx.size(); ++r) {
            if (active_tx_[r] && !term(-alpha * dl_tx[r], s_tx[r])) return kInf;
            if (active_rc_[r] && !term(-alpha * dl_rc[r], s_rc[r])) return kInf;
        }
        return df;
    }

    // Barrier objective; +inf outside the domain.
    double barrier(double t, const Point& p) const {
        double f = 0.0;
        for (int k = 0; k < k_; ++k) {
            if (live_[k]) {
                if (!(p.a[k] > 0.0 && p.b[k] > 0.0)) return kInf;
                const double rt = h_tx_(p.a[k]).h - p.y[k], rr = h_rc_(p.b[k]).h - p.y[k];
                const double rc = y_cap_ - p.y[k];
                if (!(rt > 0.0 && rr > 0.0 && rc > 0.0)) return kInf;
                f -= t * p.y[k] + std::log(p.a[k]) + std::log(p.b[k]) + std::log(rt) + std::log(rr) + std::log(rc);
            }
            if (free_d_[k]) {
                if (!(p.d[k] > 0.0)) return kInf;
                f -= std::log(p.d[k]);
            }
        }
        std::vector<double> s_tx, s_rc;
        if (!slacks(p, s_tx, s_rc)) return kInf;
        for (std::size_t r = 0; r < s_tx.size(); ++r) {
            if (active_tx_[r]) f -= std::log(s_tx[r]);
            if (active_rc_[r]) f -= std::log(s_rc[r]);
        }
        return f;
    }

    // S(a, b) = sum of val(i, k) over i <= a, k >= b, as a (K+2)^2 table.
    std::vector<double> dominance(const std::vector<double>& val, const std::vector<char>& active) const {
        const int w = k_ + 2;
        std::vector<double> s(static_cast<std::size_t>(w) * w, 0.0);
        for (int a = 1; a <= k_; ++a)
            for (int b = k_; b >= 1; --b) {
                const double own = a <= b && active[at(a, b)] ? val[at(a, b)] : 0.0;
                s[a * w + b] = own + s[(a - 1) * w + b] + s[a * w + b + 1] - s[(a - 1) * w + b + 1];
            }
        return s;
    }

    // Gradient and Hessian of the barrier objective at the current point.
    bool derivatives(double t, Vector& grad, Matrix& hess) const {
        std::vector<double> s_tx, s_rc;
        if (!slacks({a_, b_, y_, d_}, s_tx, s_rc)) return false;
        std::vector<double> v_tx(s_tx.size()), w_tx(s_tx.size()), v_rc(s_rc.size()), w_rc(s_rc.size());
        for (std::size_t r = 0; r < s_tx.size(); ++r) {
            if (active_tx_[r]) {
                v_tx[r] = 1.0 / s_tx[r];
                w_tx[r] = v_tx[r] * v_tx[r];
            }
            if (active_rc_[r]) {
                v_rc[r] = 1.0 / s_rc[r];
                w_rc[r] = v_rc[r] * v_rc[r];
            }
        }
        const int w = k_ + 2;
        const auto svt = dominance(v_tx, active_tx_), swt = dominance(w_tx, active_tx_);
        const auto svr = dominance(v_rc, active_rc_), swr = dominance(w_rc, active_rc_);
        const auto S = [w](const std::vector<double>& tab, int a, int b) {
            return tab[static_cast<std::size_t>(a) * w + b];
        };

        grad = Vector::Zero(n_);
        hess = Matrix::Zero(n_, n_);
        for (int j = 1; j <= k_; ++j) {
            const int ja = ia_[j - 1], jb = ib_[j - 1], jy = iy_[j - 1], jd = id_[j - 1];
            if (ja >= 0) {
                const double a = a_[j - 1], b = b_[j - 1], y = y_[j - 1];
                grad(ja) = S(svt, j, j) - 1.0 / a;
                grad(jb) = S(svr, j, j) - 1.0 / b;
                grad(jy) = -t;
                hess(ja, ja) += 1.0 / (a * a);
                hess(jb, jb) += 1.0 / (b * b);
                // -log(h(x) - y) for each device
                const auto hyp = [&](int jx, const EnergyReward::Eval& e) {
                    const double r = e.h - y;
                    grad(jx) -= e.h1 / r;
                    grad(jy) += 1.0 / r;
                    hess(jx, jx) += e.h1 * e.h1 / (r * r) - e.h2 / r;
                    hess(jx, jy) -= e.h1 / (r * r);
                    hess(jy, jx) -= e.h1 / (r * r);
                    hess(jy, jy) += 1.0 / (r * r);
                };
                hyp(ja, h_tx_(a));
                hyp(jb, h_rc_(b));
                grad(jy) += 1.0 / (y_cap_ - y);
                hess(jy, jy) += 1.0 / ((y_cap_ - y) * (y_cap_ - y));
            }
            if (jd >= 0) {
                const double x = d_[j - 1];
                grad(jd) = S(svr, j, j) - beta_ * S(svt, j, j + 1) - 1.0 / x;
                hess(jd, jd) += 1.0 / (x * x);
            }
            for (int l = 1; l <= k_; ++l) {
                const int la = ia_[l - 1], lb = ib_[l - 1], ld = id_[l - 1];
                const int lo = std::min(j, l), hi = std::max(j, l);
                if (ja >= 0 && la >= 0) {
                    hess(ja, la) += S(swt, lo, hi);
                    hess(jb, lb) += S(swr, lo, hi);
                }
                if (ja >= 0 && ld >= 0) {
                    const double va = -beta_ * S(swt, lo, std::max(j, l + 1));
                    const double vb = S(swr, lo, hi);
                    hess(ja, ld) += va;
                    hess(ld, ja) += va;
                    hess(jb, ld) += vb;
                    hess(ld, jb) += vb;
                }
                if (jd >= 0 && ld >= 0) hess(jd, ld) += S(swr, lo, hi) + beta_ * beta_ * S(swt, lo, hi + 1);
            }
        }
        return true;
    }

    bool center(double t, int& steps) {
        Vector grad;
        Matrix hess;
        double best = kInf;
        int stale = 0;
        for (int it = 0; it < 500; ++it) {
            if (!derivatives(t, grad, hess)) return false;
            // Symmetric diagonal scaling keeps the factorization stable once slacks span many
            // orders of magnitude; a small shift covers what roundoff still breaks.
            const Vector scale = hess.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
            const Matrix scaled = scale.asDiagonal() * hess * scale.asDiagonal();
            Eigen::LLT<Matrix> llt(scaled);
            for (double shift = 1e-14; llt.info() != Eigen::Success && shift < 1.0; shift *= 10.0)
                llt.compute(scaled + shift * Matrix::Identity(n_, n_));
            if (llt.info() != Eigen::Success) return false;
            const Vector step = scale.asDiagonal() * llt.solve(-(scale.asDiagonal() * grad));
            const double decrement = -grad.dot(step);
            ++steps;
            if (!(decrement > 0.0) || decrement / 2.0 <= 1e-9) return true;
            // Decrements that stop shrinking inside the quadratic region are roundoff.
            if (decrement < 1e-3 && (decrement < best ? (best = decrement, stale = 0) : ++stale) > 5) return true;

            const Point delta = direction(step);
            std::vector<double> s_tx, s_rc, dl_tx, dl_rc;
            slacks({a_, b_, y_, d_}, s_tx, s_rc);
            row_lhs(delta, dl_tx, dl_rc);
            double alpha = 1.0;
            int halvings = 0;
            // Near the center the predicted decrease is below roundoff, so only the domain is checked.
            const double wanted = decrement < 1e-3 ? kInf : -0.25 * decrement;
            while (!(change(t, delta, alpha, s_tx, s_rc, dl_tx, dl_rc) <= alpha * wanted)) {
                if (++halvings > 80) return false;
                alpha *= 0.5;
            }
            Point p = moved(step, alpha);
            a_ = std::move(p.a);
            b_ = std::move(p.b);
            y_ = std::move(p.y);
            d_ = std::move(p.d);
        }
        return false;
    }

    const OfflineInstance& inst_;
    double rho_cap_;
    int k_;
    double beta_;
    EnergyReward h_tx_, h_rc_;
    double y_cap_;
    std::vector<double> bt_, br_;
    double cap_tx_ = kInf, cap_rc_ = kInf;
    std::vector<double> a_, b_, y_, d_;
    std::vector<bool> live_, free_d_;
    std::vector<int> ia_, ib_, iy_, id_;
    std::vector<char> active_tx_, active_rc_;
    int n_ = 0;
    long m_ = 0;
};

/**
 * Turns a relaxed solution on chord pieces into a plan that can be executed: slots run at the
 * lower chord power and bank the relaxed reward above it, firing at the upper chord power once
 * the bank covers it and both batteries can pay.
 */
std::pair<std::vector<double>, std::vector<double>> time_share(const OfflineInstance& inst, bool finite,
                                                               const EnergyReward& h_tx, const EnergyReward& h_rc,
                                                               const std::vector<double>& a, const std::vector<double>& b,
                                                               const std::vector<double>& y, const std::vector<double>& d) {
    const int kk = inst.horizon;
    const double beta = inst.transfer_enabled ? inst.beta : 0.0;
    const double cap_tx = finite && inst.e_max_tx ? *inst.e_max_tx : kInf;
    const double cap_rc = finite && inst.e_max_rc ? *inst.e_max_rc : kInf;
    std::vector<double> power(kk, 0.0), transfer(kk, 0.0);
    double et = inst.e_init_tx, er = inst.e_init_rc, bank = 0.0;
    const auto affordable = [&](double p) { return inst.q_tx(p) <= et && inst.q_rc(p) <= er; };
    for (int k = 0; k < kk; ++k) {
        if (a[k] > 0.0 && b[k] > 0.0) {
            const auto [lo_t, hi_t] = h_tx.powers(a[k]);
            const auto [lo_r, hi_r] = h_rc.powers(b[k]);
            const double lo = std::min(lo_t, lo_r), hi = std::max(std::min(hi_t, hi_r), lo);
            bank += std::max(0.0, y[k] - inst.g(lo));
            double p = lo;
            if (hi > lo && bank >= inst.g(hi) - inst.g(lo) - 1e-12 && affordable(hi)) {
                bank -= inst.g(hi) - inst.g(lo);
                p = hi;
            }
            if (!affordable(p)) p = 0.0;
            power[k] = p;
        }
        et -= inst.q_tx(power[k]);
        er -= inst.q_rc(power[k]);
        transfer[k] = std::clamp(d[k], 0.0, std::max(er, 0.0));
        er -= transfer[k];
        const double b_t = k + 1 < kk ? inst.b_tx[k] : 0.0, b_r = k + 1 < kk ? inst.b_rc[k] : 0.0;
        et = std::min(et + beta * transfer[k] + b_t, cap_tx);
        er = std::min(er + b_r, cap_rc);
    }
    return {power, transfer};
}

OfflinePlan solve(const OfflineInstance& inst, bool finite) {
    inst.validate();
    // Largest power any slot could afford; the envelope only needs this range.
    double total_tx = inst.e_init_tx, total_rc = inst.e_init_rc;
    for (int k = 0; k + 1 < inst.horizon; ++k) {
        total_tx += inst.b_tx[k];
        total_rc += inst.b_rc[k];
    }
    total_tx += (inst.transfer_enabled ? inst.beta : 0.0) * total_rc;
    double rho_cap = std::min(inst.q_tx.inverse(total_tx), inst.q_rc.inverse(total_rc));
    if (inst.rho_max) rho_cap = std::min(rho_cap, *inst.rho_max);

    OfflinePlan plan;
    const int kk = inst.horizon;
    plan.power.assign(kk, 0.0);
    plan.transfer.assign(kk, 0.0);
    double relaxed = 0.0;
    std::optional<std::pair<std::vector<double>, std::vector<double>>> repaired;
    if (rho_cap > 0.0) {
        BarrierSolver solver(inst, finite, rho_cap);
        const auto r = solver.solve();
        for (int k = 0; k < kk; ++k) {
            if (r.a[k] > 0.0 && r.b[k] > 0.0)
                plan.power[k] = std::min({inst.q_tx.inverse(r.a[k]), inst.q_rc.inverse(r.b[k]), rho_cap});
            plan.transfer[k] = r.d[k];
            relaxed += r.y[k];
        }
        plan.duality_gap = r.gap;
        plan.newton_steps = r.steps;
        plan.convexified = !solver.exact();
        if (plan.convexified)
            repaired = time_share(inst, finite, solver.reward_tx(), solver.reward_rc(), r.a, r.b, r.y, r.d);
    }

    OfflineInstance replay = inst;
    if (!finite) {
        replay.e_max_tx.reset();
        replay.e_max_rc.reset();
    }
    PlanEvaluation ev = evaluate_plan(plan.power, plan.transfer, replay);
    if (repaired) {
        PlanEvaluation alt = evaluate_plan(repaired->first, repaired->second, replay);
        if (alt.max_violation <= 1e-9 && alt.objective > ev.objective) {
            plan.power = std::move(repaired->first);
            plan.transfer = std::move(repaired->second);
            ev = std::move(alt);
        }
    }
    plan.objective = ev.objective;
    plan.residual = ev.max_violation;
    plan.e_tx = ev.e_tx;
    plan.e_rc = ev.e_rc;
    plan.upper_bound = std::max(plan.objective, (relaxed + plan.duality_gap) / kk);
    const double scale = std::max(1.0, std::abs(plan.objective) * kk);
    plan.certified = (plan.upper_bound - plan.objective) * kk <= 1e-6 * scale && plan.residual <= 1e-6;
    return plan;
}

} // namespace

void OfflineInstance::validate() const {
    if (horizon < 1) throw DomainError("offline horizon must be >= 1");
    const auto need = static_cast<std::size_t>(horizon - 1);
    if (b_tx.size() < need || b_rc.size() < need)
        throw DomainError("offline instance needs K-1 arrivals per device");
    for (std::size_t j = 0; j < need; ++j)
        if (!(b_tx[j] >= 0.0) || !(b_rc[j] >= 0.0) || !std::isfinite(b_tx[j]) || !std::isfinite(b_rc[j]))
            throw DomainError("arrivals must be finite and >= 0");
    if (!(beta >= 0.0 && beta <= 1.0)) throw DomainError("beta must lie in [0, 1]");
    if ((e_max_tx && !(*e_max_tx >= 0.0)) || (e_max_rc && !(*e_max_rc >= 0.0)))
        throw DomainError("battery caps must be >= 0");
    if (!(e_init_tx >= 0.0) || !(e_init_rc >= 0.0)) throw DomainError("initial energy must be >= 0");
    if (e_max_tx && e_init_tx > *e_max_tx) throw DomainError("initial energy above the transmitter cap");
    if (e_max_rc && e_init_rc > *e_max_rc) throw DomainError("initial energy above the receiver cap");
    if (rho_max && !(*rho_max > 0.0)) throw DomainError("rho_max must be > 0");
}

std::vector<CumulativeConstraint> build_finite_constraints(const OfflineInstance& inst) {
    inst.validate();
    if (!inst.e_max_tx || !inst.e_max_rc) throw DomainError("finite constraints need both battery caps");
    const int kk = inst.horizon;
    const double beta = inst.transfer_enabled ? inst.beta : 0.0;
    const auto bt = arrival_prefix(inst.b_tx, kk), br = arrival_prefix(inst.b_rc, kk);
    std::vector<CumulativeConstraint> rows;
    rows.reserve(static_cast<std::size_t>(kk * (kk + 1)));
    for (Device dev : {Device::Tx, Device::Rc}) {
        const bool tx = dev == Device::Tx;
        for (int k = 1; k <= kk; ++k)
            for (int i = 1; i <= k; ++i) {
                CumulativeConstraint c{dev, i, k, std::vector<double>(kk, 0.0), std::vector<double>(kk, 0.0), 0.0};
                for (int j = i; j <= k; ++j) {
                    c.q_coeff[j - 1] = 1.0;
                    if (!tx) c.d_coeff[j - 1] = 1.0;
                    else if (j < k) c.d_coeff[j - 1] = -beta;
                }
                const double base = i == 1 ? (tx ? inst.e_init_tx : inst.e_init_rc)
                                           : (tx ? *inst.e_max_tx : *inst.e_max_rc);
                const auto& pre = tx ? bt : br;
                c.rhs = base + pre[k - 1] - pre[i - 1];
                rows.push_back(std::move(c));
            }
    }
    return rows;
}

OfflinePlan solve_offline_infinite(const OfflineInstance& inst) { return solve(inst, false); }

OfflinePlan solve_offline_finite(const OfflineInstance& inst) {
    if (!inst.e_max_tx || !inst.e_max_rc) throw DomainError("finite solve needs both battery caps");
    return solve(inst, true);
}

PlanEvaluation evaluate_plan(const std::vector<double>& power, const std::vector<double>& transfer,
                             const OfflineInstance& inst) {
    inst.validate();
    const int kk = inst.horizon;
    if (power.size() != static_cast<std::size_t>(kk) || transfer.size() != static_cast<std::size_t>(kk))
        throw DomainError("plan length does not match the horizon");
    const double beta = inst.transfer_enabled ? inst.beta : 0.0;
    const double cap_tx = inst.e_max_tx ? *inst.e_max_tx : kInf;
    const double cap_rc = inst.e_max_rc ? *inst.e_max_rc : kInf;
    PlanEvaluation out;
    double et = inst.e_init_tx, er = inst.e_init_rc, total = 0.0;
    const auto flag = [&](double violation, int slot) {
        if (violation > out.max_violation) out.max_violation = violation;
        if (violation > 1e-9 && out.first_violation_slot == 0) out.first_violation_slot = slot;
    };
    for (int k = 0; k < kk; ++k) {
        out.e_tx.push_back(et);
        out.e_rc.push_back(er);
        const double p = power[k], d = transfer[k];
        flag(std::max(-p, -d), k + 1);
        if (!inst.transfer_enabled) flag(d, k + 1);
        const double pp = std::max(p, 0.0), dd = std::max(d, 0.0);
        const double use_tx = inst.q_tx(pp), use_rc = inst.q_rc(pp) + dd;
        flag(use_tx - et, k + 1);
        flag(use_rc - er, k + 1);
        if (inst.rho_max) flag(pp - *inst.rho_max, k + 1);
        total += inst.g(pp);
        const double b_t = k + 1 < kk ? inst.b_tx[k] : 0.0;
        const double b_r = k + 1 < kk ? inst.b_rc[k] : 0.0;
        et = std::min(et - use_tx + beta * dd + b_t, cap_tx);
        er = std::min(er - use_rc + b_r, cap_rc);
    }
    out.objective = total / kk;
    return out;
}

void write_plan(std::ostream& os, const OfflinePlan& plan) {
    os << "# slot P D E_tx E_rc\n";
    os.precision(12);
    for (std::size_t k = 0; k < plan.power.size(); ++k)
        os << k + 1 << ' ' << plan.power[k] << ' ' << plan.transfer[k] << ' '
           << (k < plan.e_tx.size() ? plan.e_tx[k] : 0.0) << ' '
           << (k < plan.e_rc.size() ? plan.e_rc[k] : 0.0) << '\n';
}

} // namespace ehet
