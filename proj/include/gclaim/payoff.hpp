#pragma once

#include "gclaim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

namespace gclaim {

enum class PayoffKind { put, call, tabulated };

inline const char* to_string(PayoffKind k) {
    switch (k) {
        case PayoffKind::put: return "put";
        case PayoffKind::call: return "call";
        default: return "tabulated";
    }
}

/// Exercise value of a claim as a function of the asset price.
///
/// put/call use the strike; tabulated payoffs interpolate linearly between
/// (price, value) knots and extrapolate with constant values beyond them.
/// Every evaluation is clamped below by `floor`, keeping the payoff bounded
/// below as the claim class requires.
struct Payoff {
    PayoffKind kind = PayoffKind::put;
    double strike = 0.0;
    double floor = 0.0;
    std::vector<std::pair<double, double>> table; // ascending prices

    static Payoff make_put(double strike, double floor = 0.0) {
        Payoff p;
        p.kind = PayoffKind::put;
        p.strike = strike;
        p.floor = floor;
        p.validate();
        return p;
    }

    static Payoff make_call(double strike, double floor = 0.0) {
        Payoff p;
        p.kind = PayoffKind::call;
        p.strike = strike;
        p.floor = floor;
        p.validate();
        return p;
    }

    static Payoff make_tabulated(std::vector<std::pair<double, double>> knots, double floor = 0.0) {
        Payoff p;
        p.kind = PayoffKind::tabulated;
        p.table = std::move(knots);
        p.floor = floor;
        p.validate();
        return p;
    }

    void validate() const {
        if (kind != PayoffKind::tabulated) {
            if (!(strike > 0.0)) throw ConfigError("Payoff: strike must be > 0");
        } else {
            if (table.size() < 2) throw ConfigError("Payoff: tabulated needs >= 2 knots");
            for (std::size_t i = 1; i < table.size(); ++i)
                if (!(table[i].first > table[i - 1].first))
                    throw ConfigError("Payoff: tabulated knot prices must be strictly increasing");
        }
    }

    double operator()(double price) const {
        double raw;
        switch (kind) {
            case PayoffKind::put: raw = strike - price; break;
            case PayoffKind::call: raw = price - strike; break;
            default: raw = interpolate(price); break;
        }
        if (kind != PayoffKind::tabulated) raw = std::max(raw, 0.0);
        return std::max(raw, floor);
    }

private:
    double interpolate(double price) const {
        if (price <= table.front().first) return table.front().second;
        if (price >= table.back().first) return table.back().second;
        auto it = std::upper_bound(table.begin(), table.end(), price,
                                   [](double x, const auto& knot) { return x < knot.first; });
        const auto& [x1, y1] = *it;
        const auto& [x0, y0] = *(it - 1);
        const double w = (price - x0) / (x1 - x0);
        return y0 + w * (y1 - y0);
    }
};

/// Piecewise-linear view of a payoff (before the floor clamp): breakpoints
/// plus terminal slopes. The PDE module uses it for exact kink smoothing.
struct PiecewiseLinear {
    std::vector<double> xs;   // ascending breakpoints
    std::vector<double> ys;   // values at breakpoints
    double left_slope = 0.0;  // slope for x < xs.front()
    double right_slope = 0.0; // slope for x > xs.back()

    double raw(double x) const {
        if (x <= xs.front()) return ys.front() + left_slope * (x - xs.front());
        if (x >= xs.back()) return ys.back() + right_slope * (x - xs.back());
        auto it = std::upper_bound(xs.begin(), xs.end(), x);
        std::size_t i = static_cast<std::size_t>(it - xs.begin());
        const double w = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
        return ys[i - 1] + w * (ys[i] - ys[i - 1]);
    }

    /// Exact integral of max(raw, floor) over [a, b], a <= b.
    double floored_integral(double a, double b, double floor) const {
        double total = 0.0;
        std::vector<double> cuts;
        cuts.push_back(a);
        for (double x : xs)
            if (x > a && x < b) cuts.push_back(x);
        cuts.push_back(b);
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
            total += clipped_segment_integral(cuts[i], cuts[i + 1], floor);
        return total;
    }

private:
    // integral of max(linear, floor) over one breakpoint-free interval
    double clipped_segment_integral(double lo, double hi, double floor) const {
        const double ylo = raw(lo), yhi = raw(hi);
        const double w = hi - lo;
        if (w <= 0.0) return 0.0;
        const bool lo_above = ylo >= floor, hi_above = yhi >= floor;
        if (lo_above && hi_above) return 0.5 * (ylo + yhi) * w;
        if (!lo_above && !hi_above) return floor * w;
        const double t = (floor - ylo) / (yhi - ylo); // crossing fraction
        const double xc = lo + t * w;
        if (lo_above)
            return 0.5 * (ylo + floor) * (xc - lo) + floor * (hi - xc);
        return floor * (xc - lo) + 0.5 * (floor + yhi) * (hi - xc);
    }
};

/// Exact piecewise-linear representation of the raw payoff (floor excluded;
/// the floor is applied pointwise by the consumers).
inline PiecewiseLinear to_piecewise_linear(const Payoff& payoff) {
    PiecewiseLinear pl;
    switch (payoff.kind) {
        case PayoffKind::put:
            pl.xs = {0.0, payoff.strike};
            pl.ys = {payoff.strike, 0.0};
            pl.left_slope = -1.0;
            pl.right_slope = 0.0;
            break;
        case PayoffKind::call:
            pl.xs = {0.0, payoff.strike};
            pl.ys = {0.0, 0.0};
            pl.left_slope = 0.0;
            pl.right_slope = 1.0;
            break;
        default:
            for (const auto& [x, y] : payoff.table) {
                pl.xs.push_back(x);
                pl.ys.push_back(y);
            }
            break;
    }
    return pl;
}

} // namespace gclaim
