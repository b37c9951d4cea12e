#pragma once

#include "gclaim/errors.hpp"
#include "gclaim/lattice.hpp"
#include "gclaim/payoff.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace gclaim {
namespace oracle {

/// Number of adapted (Markov) stopping rules on a lattice with n steps:
/// one binary exercise flag per node strictly before maturity, 2^(n^2).
inline double stopping_rule_count(int n_steps) {
    return std::pow(2.0, static_cast<double>(n_steps) * n_steps);
}

/// Number of per-node volatility endpoint assignments, likewise 2^(n^2).
inline double sigma_assignment_count(int n_steps) {
    return std::pow(2.0, static_cast<double>(n_steps) * n_steps);
}

namespace detail {

// The oracle evaluates its own expectations from the raw endpoint
// probability triples; it shares no arithmetic with step_expectation.
inline double dot3(const std::array<double, 3>& p, double down, double mid, double up) {
    return p[0] * down + p[1] * mid + p[2] * up;
}

// Value of one fixed stopping rule with nature optimizing the volatility
// endpoint node by node (sup for Side::upper, inf for Side::lower). For a
// fixed rule this per-node optimization is exact for adapted volatility
// controls. `flip_nature` turns the lower side's inf into the literal-bid
// inf as well when the rule itself is degenerate; see brute_force_literal_bid.
inline double rule_value(const Lattice& lat, const std::vector<double>& payoff_cash,
                         const std::vector<std::uint8_t>& exercise_flag, Side side) {
    const int n = lat.n_steps;
    const double disc = lat.discount();
    std::vector<double> next(lat.width(n));
    for (int j = -n; j <= n; ++j) next[j + n] = payoff_cash[lat.node_index(n, j)];
    std::vector<double> cur;
    for (int k = n - 1; k >= 0; --k) {
        cur.assign(lat.width(k), 0.0);
        for (int j = -k; j <= k; ++j) {
            const std::size_t idx = lat.node_index(k, j);
            if (exercise_flag[idx]) {
                cur[j + k] = payoff_cash[idx];
                continue;
            }
            const double down = next[j - 1 + k + 1];
            const double mid = next[j + k + 1];
            const double up = next[j + 1 + k + 1];
            const double at_low = dot3(lat.stencil.low, down, mid, up);
            const double at_high = dot3(lat.stencil.high, down, mid, up);
            const double e = side == Side::upper ? std::max(at_low, at_high)
                                                 : std::min(at_low, at_high);
            cur[j + k] = disc * e;
        }
        next.swap(cur);
    }
    return next[0];
}

inline std::vector<double> payoff_at_nodes(const Lattice& lat, const Payoff& payoff) {
    std::vector<double> out(lat.node_count(), 0.0);
    for (int k = 0; k <= lat.n_steps; ++k)
        for (int j = -k; j <= k; ++j)
            out[lat.node_index(k, j)] = payoff(lat.spot * std::exp(j * lat.log_step));
    return out;
}

inline void check_budget(const Lattice& lat, double budget) {
    const double interior = static_cast<double>(lat.n_steps) * lat.n_steps;
    const double work = std::pow(2.0, interior) * interior; // rule count x fold size
    if (work > budget)
        throw TooLarge("brute_force_value: enumeration over " + std::to_string(lat.n_steps) +
                       " steps exceeds the scenario budget");
}

} // namespace detail

/// Exhaustive optimal-stopping value: max over all adapted per-node exercise
/// rules of the worst/best-case expected discounted payoff over volatility
/// endpoint assignments. Upper side takes nature's sup, lower side nature's
/// inf (buyer picks exercise, nature picks adverse volatility).
/// Throws TooLarge beyond the enumeration budget (default 1e7 scenario units,
/// reached at n_steps = 5).
inline double brute_force_value(const Lattice& lat, const Payoff& payoff, Side side,
                                double budget = 1e7) {
    detail::check_budget(lat, budget);
    const auto payoff_cash = detail::payoff_at_nodes(lat, payoff);
    const int interior = lat.n_steps * lat.n_steps;
    const std::uint64_t rules = std::uint64_t{1} << interior;
    std::vector<std::uint8_t> flag(lat.node_count(), 0);
    double best = -1e300;
    for (std::uint64_t r = 0; r < rules; ++r) {
        for (int b = 0; b < interior; ++b) flag[b] = (r >> b) & 1u;
        best = std::max(best, detail::rule_value(lat, payoff_cash, flag, side));
    }
    return best;
}

/// The literal bid formula's value: inf over stopping rules of the lower
/// expectation. Dominated by immediate exercise; reported as a diagnostic.
inline double brute_force_literal_bid(const Lattice& lat, const Payoff& payoff,
                                      double budget = 1e7) {
    detail::check_budget(lat, budget);
    const auto payoff_cash = detail::payoff_at_nodes(lat, payoff);
    const int interior = lat.n_steps * lat.n_steps;
    const std::uint64_t rules = std::uint64_t{1} << interior;
    std::vector<std::uint8_t> flag(lat.node_count(), 0);
    double worst = 1e300;
    for (std::uint64_t r = 0; r < rules; ++r) {
        for (int b = 0; b < interior; ++b) flag[b] = (r >> b) & 1u;
        worst = std::min(worst, detail::rule_value(lat, payoff_cash, flag, Side::lower));
    }
    return worst;
}

/// European value under a single fixed per-node sigma endpoint assignment
/// enumeration (no early exercise): used by tests to confirm the convex-payoff
/// branch choice by exhausting all 2^(n^2) assignments directly.
inline double brute_force_european(const Lattice& lat, const Payoff& payoff, Side side,
                                   double budget = 1e7) {
    detail::check_budget(lat, budget);
    const auto payoff_cash = detail::payoff_at_nodes(lat, payoff);
    const int n = lat.n_steps;
    const int interior = n * n;
    const std::uint64_t assigns = std::uint64_t{1} << interior;
    const double disc = lat.discount();
    double best = side == Side::upper ? -1e300 : 1e300;
    std::vector<double> next, cur;
    for (std::uint64_t a = 0; a < assigns; ++a) {
        next.assign(lat.width(n), 0.0);
        for (int j = -n; j <= n; ++j) next[j + n] = payoff_cash[lat.node_index(n, j)];
        for (int k = n - 1; k >= 0; --k) {
            cur.assign(lat.width(k), 0.0);
            for (int j = -k; j <= k; ++j) {
                const bool high = (a >> lat.node_index(k, j)) & 1u;
                const auto& p = high ? lat.stencil.high : lat.stencil.low;
                cur[j + k] = disc * detail::dot3(p, next[j - 1 + k + 1], next[j + k + 1],
                                                 next[j + 1 + k + 1]);
            }
            next.swap(cur);
        }
        best = side == Side::upper ? std::max(best, next[0]) : std::min(best, next[0]);
    }
    return best;
}

/// Classical single-measure Cox-Ross-Rubinstein binomial tree price.
inline double crr_reference(double spot, double strike, double maturity, double sigma,
                            double rate, int n_steps, bool american, PayoffKind kind) {
    const double dt = maturity / n_steps;
    const double up = std::exp(sigma * std::sqrt(dt));
    const double down = 1.0 / up;
    const double grow = std::exp(rate * dt);
    const double p = (grow - down) / (up - down);
    const double disc = 1.0 / grow;
    auto intrinsic = [&](double s) {
        return kind == PayoffKind::put ? std::max(strike - s, 0.0) : std::max(s - strike, 0.0);
    };
    std::vector<double> v(static_cast<std::size_t>(n_steps) + 1);
    for (int i = 0; i <= n_steps; ++i)
        v[i] = intrinsic(spot * std::pow(up, 2 * i - n_steps));
    for (int k = n_steps - 1; k >= 0; --k) {
        for (int i = 0; i <= k; ++i) {
            double cont = disc * ((1.0 - p) * v[i] + p * v[i + 1]);
            if (american) {
                const double s = spot * std::pow(up, 2 * i - k);
                cont = std::max(cont, intrinsic(s));
            }
            v[i] = cont;
        }
    }
    return v[0];
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Black-Scholes European closed form.
inline double bs_closed_form(double spot, double strike, double maturity, double sigma,
                             double rate, PayoffKind kind) {
    if (!(sigma > 0.0) || !(maturity > 0.0)) {
        const double fwd = spot * std::exp(rate * maturity);
        const double intrinsic = kind == PayoffKind::put ? strike - fwd : fwd - strike;
        return std::exp(-rate * maturity) * std::max(intrinsic, 0.0);
    }
    const double vol = sigma * std::sqrt(maturity);
    const double d1 = (std::log(spot / strike) + (rate + 0.5 * sigma * sigma) * maturity) / vol;
    const double d2 = d1 - vol;
    if (kind == PayoffKind::call)
        return spot * normal_cdf(d1) - strike * std::exp(-rate * maturity) * normal_cdf(d2);
    return strike * std::exp(-rate * maturity) * normal_cdf(-d2) - spot * normal_cdf(-d1);
}

} // namespace oracle
} // namespace gclaim
