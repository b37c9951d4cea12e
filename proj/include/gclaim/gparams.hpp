#pragma once

#include "gclaim/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace gclaim {

/// Which side of the sublinear expectation an operation works on.
/// Upper drives ask prices (worst case for the seller), lower drives bids.
enum class Side { upper, lower };

inline const char* to_string(Side s) { return s == Side::upper ? "upper" : "lower"; }

/// Market uncertainty intervals and the short rate.
///
/// Volatilities are per sqrt(year), drifts and the rate per year. The drift
/// interval [mu_low, mu_high] is carried for completeness only: under the
/// pricing dynamics the drift is replaced by the short rate, so mu_* never
/// enters a price.
struct GParams {
    double sigma_low = 0.0;
    double sigma_high = 0.0;
    double mu_low = 0.0;
    double mu_high = 0.0;
    double rate = 0.0;

    bool is_classical() const { return sigma_low == sigma_high; }

    void validate() const {
        if (!(sigma_low >= 0.0) || !(sigma_high >= sigma_low))
            throw ConfigError("GParams: need 0 <= sigma_low <= sigma_high");
        if (!(mu_low <= mu_high))
            throw ConfigError("GParams: need mu_low <= mu_high");
        if (!(rate >= 0.0))
            throw ConfigError("GParams: need rate >= 0");
    }
};

/// The one-dimensional sublinear function
///   G(a) = 1/2 * sup { s * a : s in [sigma_low^2, sigma_high^2] }
///        = 1/2 * (sigma_high^2 * a+  -  sigma_low^2 * a-).
/// Positively homogeneous and subadditive in a.
inline double g_function(double a, const GParams& p) {
    const double lo = p.sigma_low * p.sigma_low;
    const double hi = p.sigma_high * p.sigma_high;
    return 0.5 * (a >= 0.0 ? hi * a : lo * a);
}

/// Conjugate of g_function: -G(-a) = 1/2 * inf { s * a : s in [sigma_low^2, sigma_high^2] }.
inline double g_lower(double a, const GParams& p) {
    return -g_function(-a, p);
}

/// One-step trinomial transition probabilities at both volatility endpoints.
/// Order within each triple is (down, mid, up). Probabilities are affine in
/// sigma^2, so the one-step expectation over [sigma_low^2, sigma_high^2] is
/// attained at an endpoint.
struct StepStencil {
    std::array<double, 3> low{};  // at sigma_low^2
    std::array<double, 3> high{}; // at sigma_high^2

    bool valid(double tol = 1e-12) const {
        auto ok = [tol](const std::array<double, 3>& q) {
            double sum = 0.0;
            for (double v : q) {
                if (v < -tol || v > 1.0 + tol) return false;
                sum += v;
            }
            return std::abs(sum - 1.0) <= 1e-9;
        };
        return ok(low) && ok(high);
    }
};

/// One-step conditional G-expectation of three child values (down, mid, up).
/// Upper side maximizes over the two volatility endpoints, lower minimizes;
/// endpoint search is exact because the expectation is affine in sigma^2.
/// Throws InvalidStencil on malformed probabilities.
inline double step_expectation(const std::array<double, 3>& child_values,
                               const StepStencil& stencil, const GParams& params, Side side) {
    if (!stencil.valid())
        throw InvalidStencil("step_expectation: transition probabilities outside [0,1]");
    auto dot = [&](const std::array<double, 3>& q) {
        return q[0] * child_values[0] + q[1] * child_values[1] + q[2] * child_values[2];
    };
    const double at_low = dot(stencil.low);
    if (params.is_classical()) return at_low;
    const double at_high = dot(stencil.high);
    return side == Side::upper ? std::max(at_low, at_high) : std::min(at_low, at_high);
}

} // namespace gclaim
