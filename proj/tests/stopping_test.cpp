#include "gclaim/stopping.hpp"

#include "gclaim/oracle.hpp"

#include <doctest.h>

#include <cmath>

using namespace gclaim;

namespace {

const GParams kUncertainR0{0.1, 0.3, 0.0, 0.0, 0.0};
const GParams kUncertainR2{0.1, 0.3, 0.0, 0.0, 0.02};
const GParams kClassical{0.2, 0.2, 0.0, 0.0, 0.05};

} // namespace

TEST_CASE("constant payoff gives a constant surface on both sides") {
    const Lattice lat = build_lattice(100.0, 1.0, 5, kUncertainR0);
    const Payoff flat = Payoff::make_tabulated({{1.0, 3.5}, {1000.0, 3.5}});
    for (Side side : {Side::upper, Side::lower}) {
        const ValueSurface s = snell_envelope(lat, flat, side);
        for (int k = 0; k <= lat.n_steps; ++k)
            for (int j = -k; j <= k; ++j)
                CHECK(s.at(k, j) == doctest::Approx(3.5).epsilon(1e-13));
    }
}

TEST_CASE("frozen asset exercises immediately") {
    const GParams frozen{0.0, 0.0, 0.0, 0.0, 0.0};
    const Lattice lat = build_lattice(90.0, 1.0, 4, frozen);
    const ValueSurface s = snell_envelope(lat, Payoff::make_put(100.0), Side::upper);
    CHECK(s.at(0, 0) == doctest::Approx(10.0).epsilon(1e-14));
}

TEST_CASE("snell envelope matches the brute-force oracle on a 2-step lattice") {
    const Lattice lat = build_lattice(100.0, 1.0, 2, kUncertainR0);
    const Payoff put = Payoff::make_put(100.0);
    for (Side side : {Side::upper, Side::lower}) {
        const double engine = snell_envelope(lat, put, side).at(0, 0);
        const double brute = oracle::brute_force_value(lat, put, side);
        CHECK(engine == doctest::Approx(brute).epsilon(1e-12));
        CHECK(std::abs(engine - brute) <= 1e-10);
    }
}

TEST_CASE("degenerate interval collapses bid and ask to the classical price") {
    const Lattice lat = build_lattice(100.0, 1.0, 64, kClassical);
    const Payoff put = Payoff::make_put(100.0);
    const BidAskQuote q = bid_ask(lat, put);
    CHECK(q.bid == q.ask);
    // classical trinomial price converges to the CRR benchmark
    const Lattice fine = build_lattice(100.0, 1.0, 512, kClassical);
    const double tri = bid_ask(fine, put).ask;
    const double crr =
        oracle::crr_reference(100.0, 100.0, 1.0, 0.2, 0.05, 2000, true, PayoffKind::put);
    CHECK(std::abs(tri - crr) / crr < 5e-3);
}

TEST_CASE("widening the volatility interval widens the quote") {
    const Payoff put = Payoff::make_put(100.0);
    const GParams narrow{0.15, 0.25, 0.0, 0.0, 0.02};
    const GParams wide{0.10, 0.30, 0.0, 0.0, 0.02};
    const BidAskQuote qn = bid_ask(build_lattice(100.0, 1.0, 32, narrow), put);
    const BidAskQuote qw = bid_ask(build_lattice(100.0, 1.0, 32, wide), put);
    CHECK(qw.ask >= qn.ask - 1e-12);
    CHECK(qw.bid <= qn.bid + 1e-12);
    CHECK(qn.bid <= qn.ask);
    CHECK(qw.bid <= qw.ask);
}

TEST_CASE("upper snell surface is a G-supermartingale with snell dominance") {
    const Lattice lat = build_lattice(100.0, 1.0, 16, kUncertainR2);
    const Payoff put = Payoff::make_put(105.0);
    const ValueSurface s = snell_envelope(lat, put, Side::upper);
    const double disc = lat.discount();
    for (int k = 0; k < lat.n_steps; ++k) {
        for (int j = -k; j <= k; ++j) {
            const std::array<double, 3> kids{s.at(k + 1, j - 1), s.at(k + 1, j),
                                             s.at(k + 1, j + 1)};
            const double cond =
                disc * step_expectation(kids, lat.stencil, lat.params, Side::upper);
            CHECK(cond <= s.at(k, j) + 1e-9);
            CHECK(s.at(k, j) >= put(node_price(lat, k, j)) - 1e-12);
        }
    }
}

TEST_CASE("bid is below ask node-wise and american dominates european") {
    const Lattice lat = build_lattice(100.0, 1.0, 24, kUncertainR2);
    const Payoff put = Payoff::make_put(100.0);
    const ValueSurface upper = snell_envelope(lat, put, Side::upper);
    const ValueSurface lower = snell_envelope(lat, put, Side::lower);
    const ValueSurface euro = european_surface(lat, put, Side::upper);
    for (int k = 0; k <= lat.n_steps; ++k) {
        for (int j = -k; j <= k; ++j) {
            CHECK(lower.at(k, j) <= upper.at(k, j) + 1e-12);
            CHECK(upper.at(k, j) >= euro.at(k, j) - 1e-12);
        }
    }
}

TEST_CASE("dynamic programming consistency from any intermediate slice") {
    const Lattice lat = build_lattice(100.0, 1.0, 12, kUncertainR2);
    const Payoff put = Payoff::make_put(100.0);
    const ValueSurface s = snell_envelope(lat, put, Side::upper);
    const double disc = lat.discount();
    for (int k0 : {3, 7, 11}) {
        // refold from slice k0 exactly as the engine does
        std::vector<double> roll(static_cast<std::size_t>(lat.width(k0)));
        for (int j = -k0; j <= k0; ++j) roll[static_cast<std::size_t>(j + k0)] = s.at(k0, j);
        for (int k = k0 - 1; k >= 0; --k) {
            std::vector<double> next(static_cast<std::size_t>(lat.width(k)));
            for (int j = -k; j <= k; ++j) {
                const std::array<double, 3> kids{roll[j + k], roll[j + k + 1],
                                                 roll[j + k + 2]};
                const double cont =
                    disc * step_expectation(kids, lat.stencil, lat.params, Side::upper);
                next[static_cast<std::size_t>(j + k)] =
                    std::max(put(node_price(lat, k, j)), cont);
            }
            roll.swap(next);
        }
        CHECK(roll[0] == s.at(0, 0));
    }
}

TEST_CASE("european envelopes of a convex claim reduce to single-measure prices") {
    // upper picks sigma_high, lower sigma_low, on every node of a convex claim
    const GParams p{0.1, 0.3, 0.0, 0.0, 0.05};
    const Lattice lat = build_lattice(100.0, 1.0, 1000, p);
    const Payoff call = Payoff::make_call(100.0);
    const double upper = european_surface(lat, call, Side::upper).at(0, 0);
    const double lower = european_surface(lat, call, Side::lower).at(0, 0);
    const double bs_hi = oracle::bs_closed_form(100.0, 100.0, 1.0, 0.3, 0.05, PayoffKind::call);
    const double bs_lo = oracle::bs_closed_form(100.0, 100.0, 1.0, 0.1, 0.05, PayoffKind::call);
    CHECK(std::abs(upper - bs_hi) / bs_hi < 2e-3);
    CHECK(std::abs(lower - bs_lo) / bs_lo < 2e-3);
}

TEST_CASE("literal bid diagnostic agrees with its oracle and sits below intrinsic") {
    const Lattice lat = build_lattice(100.0, 1.0, 3, kUncertainR2);
    const Payoff put = Payoff::make_put(110.0);
    const BidAskQuote q = bid_ask(lat, put);
    CHECK(q.bid_literal ==
          doctest::Approx(oracle::brute_force_literal_bid(lat, put)).epsilon(1e-12));
    CHECK(q.bid_literal <= put(100.0) + 1e-12);
    CHECK(q.bid_literal <= q.bid + 1e-12);
}

TEST_CASE("terminal exercise region edge is reported at maturity") {
    const Lattice lat = build_lattice(100.0, 1.0, 6, kUncertainR2);
    const Payoff put = Payoff::make_put(100.0);
    const ValueSurface s = snell_envelope(lat, put, Side::upper);
    const ExerciseBoundary b = exercise_boundary(s, put, 1e-8 * put.strike);
    REQUIRE(!b.points.empty());
    const auto& last = b.points.back();
    CHECK(last.step == lat.n_steps);
    // edge of {K - S > 0} at maturity: the largest node price below the strike
    double edge = 0.0;
    for (int j = -lat.n_steps; j <= lat.n_steps; ++j) {
        const double price = node_price(lat, lat.n_steps, j);
        if (put(price) > 1e-8 * put.strike) edge = std::max(edge, price);
    }
    CHECK(last.price == doctest::Approx(edge).epsilon(1e-14));
}

TEST_CASE("put boundary is non-decreasing toward the strike") {
    const Lattice lat = build_lattice(100.0, 1.0, 64, {0.1, 0.3, 0.0, 0.0, 0.06});
    const Payoff put = Payoff::make_put(100.0);
    const ValueSurface s = snell_envelope(lat, put, Side::upper);
    const ExerciseBoundary b = exercise_boundary(s, put, 1e-8 * put.strike);
    REQUIRE(b.points.size() > 4);
    for (std::size_t i = 1; i < b.points.size(); ++i) {
        CHECK(b.points[i].step > b.points[i - 1].step);
        CHECK(b.points[i].price >= b.points[i - 1].price - 1e-9);
        CHECK(b.points[i].price <= put.strike + 1e-9);
    }
}

TEST_CASE("positive-rate call never exercises before maturity") {
    const Lattice lat = build_lattice(100.0, 1.0, 12, {0.1, 0.3, 0.0, 0.0, 0.03});
    const Payoff call = Payoff::make_call(100.0);
    const ValueSurface s = snell_envelope(lat, call, Side::upper);
    const ExerciseBoundary b = exercise_boundary(s, call, 1e-8 * call.strike);
    for (const auto& pt : b.points) CHECK(pt.step == lat.n_steps);
    for (int k = 0; k < lat.n_steps; ++k)
        for (int j = -k; j <= k; ++j)
            if (call(node_price(lat, k, j)) > 0.0)
                CHECK(s.at(k, j) > call(node_price(lat, k, j)));
}

TEST_CASE("zero-rate call contact before maturity is exactly the truncation fan") {
    // At r = 0 every node whose whole subtree finishes in the money carries
    // zero continuation premium on a bounded lattice, so the contact set
    // before maturity is the top fan j >= n - k and nothing else.
    const int n = 6;
    const Lattice lat = build_lattice(100.0, 1.0, n, kUncertainR0);
    const Payoff call = Payoff::make_call(100.0);
    const ValueSurface s = snell_envelope(lat, call, Side::upper);
    const ExerciseBoundary b = exercise_boundary(s, call, 1e-8 * call.strike);
    for (const auto& pt : b.points) {
        if (pt.step == n) continue;
        CHECK(pt.step >= (n + 1) / 2);
        const double fan_edge = 100.0 * std::exp((n - pt.step) * lat.log_step);
        CHECK(pt.price == doctest::Approx(fan_edge).epsilon(1e-12));
    }
    for (int k = 0; k < (n + 1) / 2; ++k)
        for (const auto& pt : b.points) CHECK(pt.step != k);
}
