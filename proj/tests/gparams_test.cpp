#include "gclaim/gparams.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace gclaim;

namespace {

GParams uncertain() { return {0.1, 0.3, 0.0, 0.0, 0.0}; }
GParams classical(double sigma) { return {sigma, sigma, 0.0, 0.0, 0.0}; }

// symmetric stencil used by the step_expectation examples
StepStencil symmetric_stencil() {
    StepStencil s;
    s.low = {0.05, 0.90, 0.05};
    s.high = {0.30, 0.40, 0.30};
    return s;
}

} // namespace

TEST_CASE("g_function closed form") {
    CHECK(g_function(0.0, uncertain()) == 0.0);
    CHECK(g_function(5.0, classical(0.2)) == doctest::Approx(0.1).epsilon(1e-14));

    // endpoint enumeration oracle: maximize sigma^2 * a over {0.01, 0.09}, halve
    const double a = -1.0;
    const double by_enumeration = 0.5 * std::max(0.01 * a, 0.09 * a);
    CHECK(by_enumeration == doctest::Approx(-0.005).epsilon(1e-14));
    CHECK(g_function(a, uncertain()) == doctest::Approx(by_enumeration).epsilon(1e-14));
}

TEST_CASE("g_lower mirrors g_function") {
    CHECK(g_lower(0.0, uncertain()) == 0.0);
    CHECK(g_lower(5.0, classical(0.2)) == doctest::Approx(0.1).epsilon(1e-14));

    const double a = 1.0;
    const double by_enumeration = 0.5 * std::min(0.01 * a, 0.09 * a);
    CHECK(by_enumeration == doctest::Approx(0.005).epsilon(1e-14));
    CHECK(g_lower(a, uncertain()) == doctest::Approx(by_enumeration).epsilon(1e-14));

    testsupport::Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        const double x = rng.uniform(-10.0, 10.0);
        CHECK(g_lower(x, uncertain()) == doctest::Approx(-g_function(-x, uncertain())));
    }
}

TEST_CASE("g_function is subadditive and positively homogeneous") {
    testsupport::Rng rng(11);
    const GParams p = uncertain();
    for (int i = 0; i < 500; ++i) {
        const double a = rng.uniform(-5.0, 5.0);
        const double b = rng.uniform(-5.0, 5.0);
        CHECK(g_function(a + b, p) <= g_function(a, p) + g_function(b, p) + 1e-12);
        const double lambda = rng.uniform(0.0, 4.0);
        CHECK(g_function(lambda * a, p) ==
              doctest::Approx(lambda * g_function(a, p)).epsilon(1e-12));
    }
}

TEST_CASE("step_expectation preserves constants") {
    const StepStencil s = symmetric_stencil();
    for (double c : {-3.0, 0.0, 42.0}) {
        CHECK(step_expectation({c, c, c}, s, uncertain(), Side::upper) ==
              doctest::Approx(c).epsilon(1e-14));
        CHECK(step_expectation({c, c, c}, s, uncertain(), Side::lower) ==
              doctest::Approx(c).epsilon(1e-14));
    }
}

TEST_CASE("step_expectation collapses for a degenerate interval") {
    StepStencil s;
    s.low = {0.2, 0.5, 0.3};
    s.high = s.low;
    const std::array<double, 3> v{1.0, -2.0, 0.5};
    CHECK(step_expectation(v, s, classical(0.2), Side::upper) ==
          step_expectation(v, s, classical(0.2), Side::lower));
}

TEST_CASE("step_expectation matches direct endpoint evaluation") {
    const StepStencil s = symmetric_stencil();
    const GParams p = uncertain();
    const std::array<double, 3> v{-1.0, 0.0, 1.0}; // (down, mid, up)
    const double at_low = 0.05 * -1.0 + 0.90 * 0.0 + 0.05 * 1.0;
    const double at_high = 0.30 * -1.0 + 0.40 * 0.0 + 0.30 * 1.0;
    CHECK(step_expectation(v, s, p, Side::upper) ==
          doctest::Approx(std::max(at_low, at_high)).epsilon(1e-14));
    CHECK(step_expectation(v, s, p, Side::lower) ==
          doctest::Approx(std::min(at_low, at_high)).epsilon(1e-14));
}

TEST_CASE("step_expectation rejects invalid stencils") {
    StepStencil bad;
    bad.low = {-0.1, 0.6, 0.5};
    bad.high = {0.3, 0.4, 0.3};
    CHECK_THROWS_AS(step_expectation({1.0, 2.0, 3.0}, bad, uncertain(), Side::upper),
                    InvalidStencil);
}

TEST_CASE("upper dominates lower and both are monotone in child values") {
    testsupport::Rng rng(23);
    const StepStencil s = symmetric_stencil();
    const GParams p = uncertain();
    for (int i = 0; i < 300; ++i) {
        std::array<double, 3> v{rng.uniform(-10, 10), rng.uniform(-10, 10),
                                rng.uniform(-10, 10)};
        const double up = step_expectation(v, s, p, Side::upper);
        const double lo = step_expectation(v, s, p, Side::lower);
        CHECK(up >= lo - 1e-12);

        std::array<double, 3> w = v;
        for (auto& x : w) x += rng.uniform(0.0, 2.0);
        CHECK(step_expectation(w, s, p, Side::upper) >= up - 1e-12);
        CHECK(step_expectation(w, s, p, Side::lower) >= lo - 1e-12);
    }
}

TEST_CASE("upper step expectation is convex in child values") {
    testsupport::Rng rng(31);
    const StepStencil s = symmetric_stencil();
    const GParams p = uncertain();
    for (int i = 0; i < 300; ++i) {
        std::array<double, 3> a{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
        std::array<double, 3> b{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
        std::array<double, 3> mid{};
        for (int k = 0; k < 3; ++k) mid[k] = 0.5 * (a[k] + b[k]);
        const double lhs = step_expectation(mid, s, p, Side::upper);
        const double rhs = 0.5 * (step_expectation(a, s, p, Side::upper) +
                                  step_expectation(b, s, p, Side::upper));
        CHECK(lhs <= rhs + 1e-12);
    }
}

TEST_CASE("GParams validation and the classical flag") {
    CHECK(classical(0.2).is_classical());
    CHECK_FALSE(uncertain().is_classical());
    GParams bad{0.3, 0.1, 0.0, 0.0, 0.0};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    GParams negative_rate{0.1, 0.2, 0.0, 0.0, -0.01};
    CHECK_THROWS_AS(negative_rate.validate(), ConfigError);
    GParams bad_mu{0.1, 0.2, 0.3, 0.1, 0.0};
    CHECK_THROWS_AS(bad_mu.validate(), ConfigError);
}
