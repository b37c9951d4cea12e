#pragma once

#include "gclaim/gparams.hpp"
#include "gclaim/lattice.hpp"
#include "gclaim/payoff.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

namespace gclaim {

namespace detail {

inline std::array<double, 3> children_of(const ValueSurface& surf, int k, int j) {
    return {surf.at(k + 1, j - 1), surf.at(k + 1, j), surf.at(k + 1, j + 1)};
}

} // namespace detail

/// American optimal-stopping value by backward induction under the one-step
/// G-expectation of the requested side. Terminal values equal the payoff;
/// interior values are max(exercise, e^{-r dt} * E_side[children]). Per-step
/// discounting keeps the surface in cash-at-node-time units, so the root of
/// the upper surface is the ask and the root of the lower surface the bid.
/// Ties between continuing and exercising count as exercise.
inline ValueSurface snell_envelope(const Lattice& lat, const Payoff& payoff, Side side) {
    ValueSurface surf(lat, to_surface_tag(side), Numeraire::cash);
    const int n = lat.n_steps;
    const double disc = lat.discount();
    for (int j = -n; j <= n; ++j) surf.at(n, j) = payoff(node_price(lat, n, j));
    for (int k = n - 1; k >= 0; --k) {
        for (int j = -k; j <= k; ++j) {
            const double cont =
                disc * step_expectation(detail::children_of(surf, k, j), lat.stencil,
                                        lat.params, side);
            surf.at(k, j) = std::max(payoff(node_price(lat, k, j)), cont);
        }
    }
    return surf;
}

/// European counterpart: exercise only at maturity.
inline ValueSurface european_surface(const Lattice& lat, const Payoff& payoff, Side side) {
    ValueSurface surf(lat, to_surface_tag(side), Numeraire::cash);
    const int n = lat.n_steps;
    const double disc = lat.discount();
    for (int j = -n; j <= n; ++j) surf.at(n, j) = payoff(node_price(lat, n, j));
    for (int k = n - 1; k >= 0; --k)
        for (int j = -k; j <= k; ++j)
            surf.at(k, j) = disc * step_expectation(detail::children_of(surf, k, j),
                                                    lat.stencil, lat.params, side);
    return surf;
}

/// Value of the alternative bid reading -sup_nu E[-f_nu]: the infimum over
/// stopping times of the lower expectation. Both the holder and nature
/// minimize, so the recursion takes min(exercise, continuation); the result
/// is dominated by immediate exercise and reported as a diagnostic only.
inline double literal_bid_value(const Lattice& lat, const Payoff& payoff) {
    const int n = lat.n_steps;
    const double disc = lat.discount();
    std::vector<double> next(lat.width(n)), cur;
    for (int j = -n; j <= n; ++j) next[j + n] = payoff(node_price(lat, n, j));
    for (int k = n - 1; k >= 0; --k) {
        cur.assign(lat.width(k), 0.0);
        for (int j = -k; j <= k; ++j) {
            const std::array<double, 3> kids{next[j + k], next[j + k + 1], next[j + k + 2]};
            const double cont = disc * step_expectation(kids, lat.stencil, lat.params, Side::lower);
            cur[j + k] = std::min(payoff(node_price(lat, k, j)), cont);
        }
        next.swap(cur);
    }
    return next[0];
}

struct BidAskQuote {
    double bid = 0.0;         // sup over stopping times of the lower expectation
    double ask = 0.0;         // sup over stopping times of the upper expectation
    double bid_literal = 0.0; // the inf-inf reading of the bid (diagnostic)
};

/// Root bid and ask of an American claim, plus the literal-bid diagnostic.
inline BidAskQuote bid_ask(const Lattice& lat, const Payoff& payoff) {
    BidAskQuote q;
    q.ask = snell_envelope(lat, payoff, Side::upper).at(0, 0);
    q.bid = snell_envelope(lat, payoff, Side::lower).at(0, 0);
    q.bid_literal = literal_bid_value(lat, payoff);
    return q;
}

/// Per-step critical prices of the exercise region.
struct ExerciseBoundary {
    struct Point {
        int step;
        double price;
    };
    std::vector<Point> points; // only steps whose exercise region is nonempty
    SurfaceTag tag = SurfaceTag::plain;
};

/// Extract the exercise boundary of a Snell surface: per time step the
/// extremal node price where the value touches the payoff within tol and the
/// exercise is worth more than the payoff floor. Puts report the largest such
/// price, calls the smallest (the edge of the contact set facing the
/// continuation region); tabulated payoffs default to the put convention.
/// Steps with no exercise region contribute no point.
/// Default contact tolerance: 1e-8 times the strike-like scale of the payoff.
inline double default_boundary_tol(const Payoff& payoff) {
    double scale = payoff.strike;
    if (payoff.kind == PayoffKind::tabulated) {
        scale = 0.0;
        for (const auto& [s, v] : payoff.table) scale = std::max({scale, s, std::abs(v)});
    }
    return 1e-8 * scale;
}

inline ExerciseBoundary exercise_boundary(const ValueSurface& surf, const Payoff& payoff,
                                          double tol) {
    const Lattice& lat = surf.lattice;
    ExerciseBoundary boundary;
    boundary.tag = surf.tag;
    const bool from_above = payoff.kind == PayoffKind::call;
    for (int k = 0; k <= lat.n_steps; ++k) {
        std::optional<double> critical;
        for (int j = -k; j <= k; ++j) {
            const double price = node_price(lat, k, j);
            const double f = payoff(price);
            if (f - payoff.floor <= tol) continue;           // worthless exercise
            if (std::abs(surf.at(k, j) - f) > tol) continue; // off the contact set
            if (!critical) {
                critical = price;
            } else {
                critical = from_above ? std::min(*critical, price) : std::max(*critical, price);
            }
        }
        if (critical) boundary.points.push_back({k, *critical});
    }
    return boundary;
}

inline ExerciseBoundary exercise_boundary(const ValueSurface& surf, const Payoff& payoff) {
    return exercise_boundary(surf, payoff, default_boundary_tol(payoff));
}

} // namespace gclaim
