#pragma once

#include "gclaim/errors.hpp"
#include "gclaim/gparams.hpp"
#include "gclaim/lattice.hpp"
#include "gclaim/payoff.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace gclaim {

struct SupermartingaleReport {
    bool ok = true;
    int worst_step = 0;
    int worst_node = 0;
    double worst_violation = 0.0; // positive = conditional expectation exceeds the value
};

/// One-step G-supermartingale check of a surface under the given side's
/// expectation: e^{-r dt} E_side[children] <= value at every node (the
/// discount drops out for deflated surfaces). Reports the most violating node.
inline SupermartingaleReport check_g_supermartingale(const ValueSurface& surf, Side side,
                                                     double tol = 1e-9) {
    const Lattice& lat = surf.lattice;
    const double disc = surf.numeraire == Numeraire::cash ? lat.discount() : 1.0;
    SupermartingaleReport rep;
    rep.worst_violation = -1e300;
    for (int k = 0; k < lat.n_steps; ++k) {
        for (int j = -k; j <= k; ++j) {
            const std::array<double, 3> kids{surf.at(k + 1, j - 1), surf.at(k + 1, j),
                                             surf.at(k + 1, j + 1)};
            const double cond = disc * step_expectation(kids, lat.stencil, lat.params, side);
            const double viol = cond - surf.at(k, j);
            if (viol > rep.worst_violation) {
                rep.worst_violation = viol;
                rep.worst_step = k;
                rep.worst_node = j;
            }
        }
    }
    if (lat.n_steps < 1) rep.worst_violation = 0.0;
    rep.ok = rep.worst_violation <= tol;
    return rep;
}

/// Discrete G-Doob-Meyer decomposition of a G-supermartingale surface.
///
/// All fields are deflated to time-0 money. The exact objects are the
/// predictable increments: delta_a at node (k, j) is the consumption accrued
/// between k and k+1 (known at k), and the martingale part moves by
/// dM = dX + delta_a along each edge, so that step_expectation of the
/// children's X plus delta_a reproduces X at the node exactly. Because paths
/// through different exercise nodes accumulate different consumption, the
/// cumulative `a` stored per node is the maximum over paths into the node
/// (edge-monotone with a_root = 0) and `m = x + a` its companion; pathwise
/// statements are verified from the increments.
struct GdmDecomposition {
    ValueSurface x;       // deflated input
    ValueSurface m;       // x + a
    ValueSurface a;       // path-max cumulative consumption, root 0
    ValueSurface delta_a; // predictable increments (rows k < n_steps)
    ValueSurface pi;      // hedge ratio in shares (rows k < n_steps)
    Side side = Side::upper;
    double residual = 0.0; // max one-step reconstruction error of the increments
};

namespace detail {

inline double dot3_ordered(const std::array<double, 3>& p, const std::array<double, 3>& v,
                           bool reversed) {
    if (reversed) return p[2] * v[2] + p[1] * v[1] + p[0] * v[0];
    return p[0] * v[0] + p[1] * v[1] + p[2] * v[2];
}

inline double endpoint_expectation(const Lattice& lat, const std::array<double, 3>& kids,
                                   Side side, bool reversed) {
    const double lo = dot3_ordered(lat.stencil.low, kids, reversed);
    if (lat.params.is_classical()) return lo;
    const double hi = dot3_ordered(lat.stencil.high, kids, reversed);
    return side == Side::upper ? std::max(lo, hi) : std::min(lo, hi);
}

} // namespace detail

/// Decompose a G-supermartingale surface (w.r.t. the side tagged on it, or
/// the side argument) into martingale and increasing parts and extract the
/// hedge ratios. Throws NotSupermartingale when the precondition fails.
/// `reversed_sums` evaluates every expectation with the summation order
/// reversed; decompositions must agree to 1e-12 either way (uniqueness).
inline GdmDecomposition gdm_decompose(const ValueSurface& surf, Side side,
                                      double precondition_tol = 1e-9,
                                      bool reversed_sums = false) {
    const Lattice& lat = surf.lattice;
    const auto rep = check_g_supermartingale(surf, side, precondition_tol);
    if (!rep.ok)
        throw NotSupermartingale(
            "gdm_decompose: surface is not a G-supermartingale (violation " +
                std::to_string(rep.worst_violation) + " at step " +
                std::to_string(rep.worst_step) + ", node " + std::to_string(rep.worst_node) + ")",
            rep.worst_step, rep.worst_node, rep.worst_violation);

    GdmDecomposition d;
    d.side = side;

    // deflate
    d.x = ValueSurface(lat, surf.tag, Numeraire::deflated);
    for (int k = 0; k <= lat.n_steps; ++k) {
        const double deflator =
            surf.numeraire == Numeraire::cash ? std::exp(-lat.params.rate * k * lat.dt) : 1.0;
        for (int j = -k; j <= k; ++j) d.x.at(k, j) = deflator * surf.at(k, j);
    }

    d.delta_a = ValueSurface(lat, SurfaceTag::plain, Numeraire::deflated);
    d.pi = ValueSurface(lat, SurfaceTag::plain, Numeraire::deflated);
    d.residual = 0.0;
    for (int k = 0; k < lat.n_steps; ++k) {
        const double price_deflator = std::exp(-lat.params.rate * (k + 1) * lat.dt);
        for (int j = -k; j <= k; ++j) {
            const std::array<double, 3> kids{d.x.at(k + 1, j - 1), d.x.at(k + 1, j),
                                             d.x.at(k + 1, j + 1)};
            const double cond = detail::endpoint_expectation(lat, kids, side, reversed_sums);
            const double gap = d.x.at(k, j) - cond;
            d.delta_a.at(k, j) = gap;
            d.residual = std::max(d.residual, std::abs(d.x.at(k, j) - (cond + gap)));
            // central difference quotient across the stencil support; both
            // volatility endpoints share the same support spread
            const double s_up = price_deflator * node_price(lat, k + 1, j + 1);
            const double s_down = price_deflator * node_price(lat, k + 1, j - 1);
            d.pi.at(k, j) = s_up > s_down ? (kids[2] - kids[0]) / (s_up - s_down) : 0.0;
        }
    }

    // path-max cumulative consumption and the companion martingale surface
    d.a = ValueSurface(lat, SurfaceTag::plain, Numeraire::deflated);
    d.m = ValueSurface(lat, surf.tag, Numeraire::deflated);
    d.a.at(0, 0) = 0.0;
    d.m.at(0, 0) = d.x.at(0, 0);
    for (int k = 1; k <= lat.n_steps; ++k) {
        for (int j = -k; j <= k; ++j) {
            double best = -1e300;
            for (int pj = j - 1; pj <= j + 1; ++pj) {
                if (pj < -(k - 1) || pj > k - 1) continue;
                best = std::max(best, d.a.at(k - 1, pj) + d.delta_a.at(k - 1, pj));
            }
            d.a.at(k, j) = best;
            d.m.at(k, j) = d.x.at(k, j) + best;
        }
    }
    return d;
}

/// Two-sided one-step martingale check of the decomposition's martingale
/// part, evaluated in increment form: at each node the side expectation of
/// the children's X plus the node's predictable increment must reproduce X.
/// Returns the worst absolute deviation.
inline double max_martingale_violation(const GdmDecomposition& d) {
    const Lattice& lat = d.x.lattice;
    double worst = 0.0;
    for (int k = 0; k < lat.n_steps; ++k) {
        for (int j = -k; j <= k; ++j) {
            const std::array<double, 3> kids{d.x.at(k + 1, j - 1), d.x.at(k + 1, j),
                                             d.x.at(k + 1, j + 1)};
            const double cond = step_expectation(kids, lat.stencil, lat.params, d.side);
            worst = std::max(worst, std::abs(cond + d.delta_a.at(k, j) - d.x.at(k, j)));
        }
    }
    return worst;
}

/// Superhedging strategy read off a decomposition: hedge ratios plus the
/// cumulative consumption, the latter restated in cash at node time.
struct Superhedge {
    ValueSurface pi;          // shares held over the next step (rows k < n_steps)
    ValueSurface consumption; // cumulative withdrawn, cash at node time
};

inline Superhedge extract_superhedge(const GdmDecomposition& d) {
    const Lattice& lat = d.x.lattice;
    Superhedge h;
    h.pi = d.pi;
    h.consumption = ValueSurface(lat, SurfaceTag::plain, Numeraire::cash);
    for (int k = 0; k <= lat.n_steps; ++k) {
        const double compound = std::exp(lat.params.rate * k * lat.dt);
        for (int j = -k; j <= k; ++j) h.consumption.at(k, j) = compound * d.a.at(k, j);
    }
    return h;
}

/// Exhaustive wealth check of the superhedge: start from the root value of
/// the decomposed surface, trade pi along every move path, optionally
/// withdraw the predictable consumption, and report the minimum of terminal
/// wealth minus payoff over all paths (deflated units). Nonnegative means the
/// hedge dominates the claim on every scenario path.
inline double min_superhedge_surplus(const GdmDecomposition& d, const Payoff& payoff,
                                     bool withdraw_consumption, int max_steps = 9) {
    const Lattice& lat = d.x.lattice;
    if (lat.n_steps > max_steps)
        throw TooLarge("min_superhedge_surplus: path enumeration limited to " +
                       std::to_string(max_steps) + " steps");
    const double terminal_deflator = std::exp(-lat.params.rate * lat.maturity);
    double min_surplus = 1e300;
    auto walk = [&](auto&& self, int k, int j, double wealth) -> void {
        if (k == lat.n_steps) {
            const double claim = terminal_deflator * payoff(node_price(lat, k, j));
            min_surplus = std::min(min_surplus, wealth - claim);
            return;
        }
        const double s_now = std::exp(-lat.params.rate * k * lat.dt) * node_price(lat, k, j);
        const double withdrawn = withdraw_consumption ? d.delta_a.at(k, j) : 0.0;
        for (int move = -1; move <= 1; ++move) {
            const double s_next = std::exp(-lat.params.rate * (k + 1) * lat.dt) *
                                  node_price(lat, k + 1, j + move);
            self(self, k + 1, j + move,
                 wealth + d.pi.at(k, j) * (s_next - s_now) - withdrawn);
        }
    };
    walk(walk, 0, 0, d.x.at(0, 0));
    return min_surplus;
}

} // namespace gclaim
