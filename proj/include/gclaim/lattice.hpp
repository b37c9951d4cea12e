#pragma once

#include "gclaim/errors.hpp"
#include "gclaim/gparams.hpp"
#include "gclaim/payoff.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace gclaim {

/// Recombining trinomial lattice for the risk-neutral asset dynamics
/// dS = S (r dt + dB) under volatility uncertainty.
///
/// Nodes are indexed by time step k in 0..n_steps and log-offset j in -k..k;
/// node (k, j) carries price spot * exp(j * log_step). A single stencil of
/// transition probabilities serves every node: the spatial increment is tied
/// to sigma_high (h = sigma_high * sqrt(stretch * dt)) so that both
/// volatility endpoints admit valid probabilities, and the volatility choice
/// lives in the probabilities, not in the node positions.
///
/// Probabilities match E[exp(dlog S)] = exp(r dt) exactly and the one-step
/// log-variance exactly; the log-mean then matches (r - sigma^2/2) dt to
/// O(dt^2). They are affine in sigma^2, which makes endpoint enumeration in
/// step_expectation exact.
struct Lattice {
    double spot = 0.0;
    double maturity = 0.0;
    int n_steps = 0;
    double dt = 0.0;
    double log_step = 0.0;
    double stretch = 1.5;
    GParams params;
    StepStencil stencil;

    int width(int k) const { return 2 * k + 1; }

    bool contains(int k, int j) const {
        return k >= 0 && k <= n_steps && j >= -k && j <= k;
    }

    std::size_t node_index(int k, int j) const {
        // nodes of steps 0..k-1 occupy k^2 slots
        return static_cast<std::size_t>(k) * static_cast<std::size_t>(k) +
               static_cast<std::size_t>(j + k);
    }

    std::size_t node_count() const {
        auto n = static_cast<std::size_t>(n_steps) + 1;
        return n * n;
    }

    double discount() const { return std::exp(-params.rate * dt); }
};

inline double node_price(const Lattice& lat, int k, int j) {
    if (!lat.contains(k, j))
        throw IndexOutOfRange("node_price: node (" + std::to_string(k) + "," +
                              std::to_string(j) + ") outside lattice");
    return lat.spot * std::exp(j * lat.log_step);
}

namespace detail {

inline std::array<double, 3> endpoint_probabilities(double sigma_sq, double rate, double dt,
                                                    double h) {
    // price-martingale-exact trinomial weights, affine in sigma^2
    const double q = sigma_sq * dt / (h * h);
    const double drift = (std::exp(rate * dt) - 1.0 - q * (std::cosh(h) - 1.0)) / std::sinh(h);
    return {0.5 * (q - drift), 1.0 - q, 0.5 * (q + drift)}; // down, mid, up
}

} // namespace detail

/// Construct the lattice. Throws InvalidGrid when no valid stencil exists for
/// the requested step count (e.g. dt too large relative to rate and
/// sigma_high, or sigma vanishes while the drift does not).
inline Lattice build_lattice(double spot, double maturity, int n_steps, const GParams& params,
                             double stretch = 1.5) {
    params.validate();
    if (!(spot > 0.0)) throw InvalidGrid("build_lattice: spot must be > 0");
    if (!(maturity > 0.0)) throw InvalidGrid("build_lattice: maturity must be > 0");
    if (n_steps < 1) throw InvalidGrid("build_lattice: n_steps must be >= 1");
    if (!(stretch >= 1.0)) throw InvalidGrid("build_lattice: stretch must be >= 1");

    Lattice lat;
    lat.spot = spot;
    lat.maturity = maturity;
    lat.n_steps = n_steps;
    lat.dt = maturity / n_steps;
    lat.stretch = stretch;
    lat.params = params;
    lat.log_step = params.sigma_high * std::sqrt(stretch * lat.dt);

    if (lat.log_step == 0.0) {
        // frozen asset: representable only when the drift vanishes as well
        if (std::abs(std::exp(params.rate * lat.dt) - 1.0) > 1e-15)
            throw InvalidGrid("build_lattice: sigma_high = 0 with rate > 0 has no lattice");
        lat.stencil.low = {0.0, 1.0, 0.0};
        lat.stencil.high = {0.0, 1.0, 0.0};
        return lat;
    }

    lat.stencil.low = detail::endpoint_probabilities(params.sigma_low * params.sigma_low,
                                                     params.rate, lat.dt, lat.log_step);
    lat.stencil.high = detail::endpoint_probabilities(params.sigma_high * params.sigma_high,
                                                      params.rate, lat.dt, lat.log_step);
    if (!lat.stencil.valid())
        throw InvalidGrid(
            "build_lattice: no valid stencil (dt too large relative to rate and the "
            "volatility interval); increase n_steps");
    return lat;
}

enum class SurfaceTag { upper, lower, plain };

inline SurfaceTag to_surface_tag(Side s) {
    return s == Side::upper ? SurfaceTag::upper : SurfaceTag::lower;
}

/// Money units a surface is expressed in: cash-at-node-time, or deflated to
/// time-0 by exp(-r k dt).
enum class Numeraire { cash, deflated };

/// An adapted process on the lattice: one real per node.
struct ValueSurface {
    Lattice lattice;
    std::vector<double> values;
    SurfaceTag tag = SurfaceTag::plain;
    Numeraire numeraire = Numeraire::cash;

    ValueSurface() = default;
    explicit ValueSurface(const Lattice& lat, SurfaceTag t = SurfaceTag::plain,
                          Numeraire n = Numeraire::cash)
        : lattice(lat), values(lat.node_count(), 0.0), tag(t), numeraire(n) {}

    double& at(int k, int j) {
        if (!lattice.contains(k, j))
            throw IndexOutOfRange("ValueSurface::at: bad node index");
        return values[lattice.node_index(k, j)];
    }
    double at(int k, int j) const {
        if (!lattice.contains(k, j))
            throw IndexOutOfRange("ValueSurface::at: bad node index");
        return values[lattice.node_index(k, j)];
    }
};

/// Evaluate the payoff at every node.
inline ValueSurface payoff_surface(const Lattice& lat, const Payoff& payoff) {
    ValueSurface surf(lat, SurfaceTag::plain, Numeraire::cash);
    for (int k = 0; k <= lat.n_steps; ++k)
        for (int j = -k; j <= k; ++j)
            surf.at(k, j) = payoff(node_price(lat, k, j));
    return surf;
}

} // namespace gclaim
