#include "ehet/psi.hpp"

#include "ehet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ehet {

namespace {

// Golden-section search for the maximizer of a unimodal f on [lo, hi].
template <class F>
double golden_argmax(F f, double lo, double hi) {
    constexpr double kInvPhi = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - kInvPhi * (b - a), d = a + kInvPhi * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 120 && b - a > 1e-14 * std::max(1.0, std::abs(b)); ++it) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

struct Edge {
    std::size_t a, b;
    bool chord;
};

[[noreturn]] void fail(const std::string& msg, double rho_max) {
    std::ostringstream os;
    os << "Psi construction failed: " << msg << " (rho_max=" << rho_max << ")";
    throw ConstructionError(os.str());
}

} // namespace

PsiFunction::PsiFunction(ConsumptionModel q, RewardFunction g, double rho_max,
                         std::vector<Piece> pieces)
    : q_(q), g_(g), rho_max_(rho_max), pieces_(std::move(pieces)) {
    if (pieces_.empty()) throw ConstructionError("Psi needs at least one piece");
    double p = 0.0, x = 0.0;
    for (const auto& pc : pieces_) {
        if (std::abs(pc.p_lo - p) > 1e-12 * std::max(1.0, p) ||
            std::abs(pc.x_lo - x) > 1e-9 * std::max(1.0, x))
            throw ConstructionError("Psi pieces are not contiguous");
        if (!(pc.p_hi > pc.p_lo) || !(pc.x_hi > pc.x_lo))
            throw ConstructionError("Psi piece is not strictly increasing");
        p = pc.p_hi;
        x = pc.x_hi;
    }
    if (std::abs(p - rho_max_) > 1e-12 * std::max(1.0, rho_max_))
        throw ConstructionError("Psi pieces do not cover [0, rho_max]");
}

const PsiFunction::Piece& PsiFunction::piece_for_power(double p) const {
    auto it = std::lower_bound(pieces_.begin(), pieces_.end(), p,
                               [](const Piece& pc, double v) { return pc.p_hi < v; });
    return it == pieces_.end() ? pieces_.back() : *it;
}

double PsiFunction::operator()(double p) const {
    if (!std::isfinite(p) || p < 0.0 || p > rho_max_ * (1.0 + 1e-12))
        throw DomainError("Psi evaluated outside [0, rho_max] at " + std::to_string(p));
    const Piece& pc = piece_for_power(p);
    switch (pc.kind) {
    case PieceKind::CopyOfCost: return q_(p);
    case PieceKind::EnvelopeChord: return pc.x_lo + (g_(p) - pc.g_lo) / pc.chord_slope();
    case PieceKind::LinearInPower:
        return pc.x_lo + (p - pc.p_lo) * (pc.x_hi - pc.x_lo) / (pc.p_hi - pc.p_lo);
    }
    return 0.0;
}

double PsiFunction::inverse(double x) const {
    if (std::isnan(x) || x < 0.0) throw DomainError("Psi inverse needs x >= 0");
    if (x >= max_energy()) return rho_max_;
    auto it = std::lower_bound(pieces_.begin(), pieces_.end(), x,
                               [](const Piece& pc, double v) { return pc.x_hi < v; });
    const Piece& pc = it == pieces_.end() ? pieces_.back() : *it;
    double p = 0.0;
    switch (pc.kind) {
    case PieceKind::CopyOfCost: p = q_.inverse(x); break;
    case PieceKind::EnvelopeChord: p = g_.inverse(pc.g_lo + pc.chord_slope() * (x - pc.x_lo)); break;
    case PieceKind::LinearInPower:
        p = pc.p_lo + (x - pc.x_lo) * (pc.p_hi - pc.p_lo) / (pc.x_hi - pc.x_lo);
        break;
    }
    return std::clamp(p, pc.p_lo, pc.p_hi);
}

bool PsiFunction::is_cost() const noexcept {
    return pieces_.size() == 1 && pieces_.front().kind == PieceKind::CopyOfCost;
}

const PsiFunction::Piece* PsiFunction::first_chord() const noexcept {
    for (const auto& pc : pieces_)
        if (pc.kind == PieceKind::EnvelopeChord) return &pc;
    return nullptr;
}

PsiFunction build_psi(const ConsumptionModel& q, const RewardFunction& g, double rho_max,
                      int samples) {
    if (!(std::isfinite(rho_max) && rho_max > 0.0)) fail("rho_max must be positive", rho_max);
    if (samples < 3) fail("need at least 3 samples", rho_max);

    const auto n = static_cast<std::size_t>(samples);
    std::vector<double> ps(n), xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
        ps[i] = i + 1 == n ? rho_max : rho_max * static_cast<double>(i) / (n - 1);
        xs[i] = q(ps[i]);
        ys[i] = g(ps[i]);
        if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) fail("non-finite sample", rho_max);
        if (i > 0 && !(xs[i] > xs[i - 1])) fail("cost is not strictly increasing", rho_max);
    }

    // Upper hull, monotone chain. Collinear middle points are dropped.
    std::vector<std::size_t> hull;
    for (std::size_t i = 0; i < n; ++i) {
        while (hull.size() >= 2) {
            const std::size_t a = hull[hull.size() - 2], b = hull.back();
            const double cross = (xs[b] - xs[a]) * (ys[i] - ys[a]) - (ys[b] - ys[a]) * (xs[i] - xs[a]);
            if (cross < 0.0) break;
            hull.pop_back();
        }
        hull.push_back(i);
    }

    // An edge skipping samples is a chord only if the curve dips visibly below it; otherwise
    // the skipped points were collinear up to rounding and q itself is fine there.
    const double scale = std::max(1.0, *std::max_element(ys.begin(), ys.end()));
    const double tol = 1e-10 * scale;
    std::vector<Edge> edges;
    for (std::size_t h = 1; h < hull.size(); ++h) {
        const std::size_t a = hull[h - 1], b = hull[h];
        bool chord = false;
        const double s = (ys[b] - ys[a]) / (xs[b] - xs[a]);
        for (std::size_t i = a + 1; i < b && !chord; ++i)
            chord = ys[a] + s * (xs[i] - xs[a]) - ys[i] > tol;
        if (!chord && !edges.empty() && !edges.back().chord)
            edges.back().b = b;
        else
            edges.push_back({a, b, chord});
    }

    std::vector<PsiFunction::Piece> pieces;
    const auto copy_piece = [&](double lo, double hi) {
        if (hi > lo) pieces.push_back({PsiFunction::PieceKind::CopyOfCost, lo, hi, q(lo), q(hi), g(lo), g(hi)});
    };
    double cursor = 0.0;
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const Edge& edge = edges[e];
        if (!edge.chord) continue;
        double pa = ps[edge.a], pb = ps[edge.b];
        const bool refine_left = edge.a > 0 && e > 0 && !edges[e - 1].chord;
        const bool refine_right = edge.b + 1 < n && e + 1 < edges.size() && !edges[e + 1].chord;
        const double left_lo = ps[edge.a >= 2 ? edge.a - 2 : 0];
        const double left_hi = ps[std::min(edge.a + 2, edge.b - 1)];
        const double right_lo = ps[std::max(edge.b - 2, edge.a + 1)];
        const double right_hi = ps[std::min(edge.b + 2, n - 1)];
        for (int sweep = 0; sweep < 3 && (refine_left || refine_right); ++sweep) {
            if (refine_right) {
                const double xa = q(pa), ya = g(pa);
                pb = golden_argmax([&](double p) { return (g(p) - ya) / (q(p) - xa); },
                                   std::max(right_lo, pa), right_hi);
            }
            if (refine_left) {
                const double xb = q(pb), yb = g(pb);
                pa = golden_argmax([&](double p) { return -(yb - g(p)) / (xb - q(p)); }, left_lo,
                                   std::min(left_hi, pb));
            }
        }
        copy_piece(cursor, pa);
        const double xa = q(pa), xb = q(pb), ga = g(pa), gb = g(pb);
        if (!(gb > ga) || !(xb > xa)) fail("degenerate envelope chord", rho_max);
        pieces.push_back({PsiFunction::PieceKind::EnvelopeChord, pa, pb, xa, xb, ga, gb});
        cursor = pb;
    }
    copy_piece(cursor, rho_max);
    return PsiFunction(q, g, rho_max, std::move(pieces));
}

PsiFunction cost_psi(const ConsumptionModel& q, const RewardFunction& g, double rho_max) {
    if (!(std::isfinite(rho_max) && rho_max > 0.0)) fail("rho_max must be positive", rho_max);
    return PsiFunction(q, g, rho_max,
                       {{PsiFunction::PieceKind::CopyOfCost, 0.0, rho_max, 0.0, q(rho_max), 0.0, g(rho_max)}});
}

PsiFunction linear_psi(const ConsumptionModel& q, const RewardFunction& g, double rho_max) {
    if (!(std::isfinite(rho_max) && rho_max > 0.0)) fail("rho_max must be positive", rho_max);
    const double x = q(rho_max);
    if (!(x > 0.0)) fail("q(rho_max) must be positive", rho_max);
    return PsiFunction(q, g, rho_max,
                       {{PsiFunction::PieceKind::LinearInPower, 0.0, rho_max, 0.0, x, 0.0, g(rho_max)}});
}

} // namespace ehet
