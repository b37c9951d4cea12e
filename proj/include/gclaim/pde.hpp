#pragma once

#include "gclaim/errors.hpp"
#include "gclaim/gparams.hpp"
#include "gclaim/payoff.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace gclaim {

/// Spatial operator variant. `bsb` is the dynamics-consistent
/// Black-Scholes-Barenblatt form  G(S^2 u_SS) + r S u_S - r u;  `literal`
/// keeps constant coefficients,  G(u_SS) + r u_S - r u,  for comparison runs.
enum class OperatorForm { bsb, literal };

/// Space-time grid for the free-boundary solvers. Prices are log-spaced.
struct PdeGrid {
    std::vector<double> prices;
    int n_time = 0;
    double maturity = 0.0;
    GParams params;
    OperatorForm form = OperatorForm::bsb;
    Side side = Side::upper;

    int n_space() const { return static_cast<int>(prices.size()); }
    double dt() const { return maturity / n_time; }

    void validate(double spot_hint = 0.0) const {
        params.validate();
        if (n_space() < 3) throw InvalidGrid("PdeGrid: need at least 3 price nodes");
        if (n_time < 1) throw InvalidGrid("PdeGrid: need at least 1 time step");
        if (!(maturity > 0.0)) throw InvalidGrid("PdeGrid: maturity must be > 0");
        for (int i = 1; i < n_space(); ++i)
            if (!(prices[i] > prices[i - 1]))
                throw InvalidGrid("PdeGrid: prices must be strictly increasing");
        if (spot_hint > 0.0 && (spot_hint <= prices.front() || spot_hint >= prices.back()))
            throw InvalidGrid("PdeGrid: spot outside the truncated domain");
    }
};

/// Truncated cylinder with S_{min,max} = spot * exp(-+ width * sigma_high * sqrt(T)).
inline PdeGrid make_pde_grid(double spot, double maturity, int n_space, int n_time,
                             const GParams& params, double width_sigmas = 4.0,
                             OperatorForm form = OperatorForm::bsb, Side side = Side::upper) {
    params.validate();
    if (!(spot > 0.0)) throw InvalidGrid("make_pde_grid: spot must be > 0");
    if (!(params.sigma_high > 0.0))
        throw InvalidGrid("make_pde_grid: sigma_high must be > 0 for a PDE domain");
    PdeGrid g;
    g.n_time = n_time;
    g.maturity = maturity;
    g.params = params;
    g.form = form;
    g.side = side;
    const double half_width = width_sigmas * params.sigma_high * std::sqrt(maturity);
    const double x_lo = std::log(spot) - half_width;
    const double x_hi = std::log(spot) + half_width;
    g.prices.resize(static_cast<std::size_t>(n_space));
    for (int i = 0; i < n_space; ++i)
        g.prices[static_cast<std::size_t>(i)] =
            std::exp(x_lo + (x_hi - x_lo) * i / (n_space - 1));
    g.validate(spot);
    return g;
}

/// Penalty epsilon schedule and payoff regularization width.
struct PenaltySchedule {
    std::vector<double> epsilons{1e-2, 1e-3, 1e-4};
    double delta = -1.0;     // mollification width; < 0 means one price step at the spot
    int max_inner = 60;      // per-time-step Newton iterations
    double inner_tol = 1e-8; // absolute tolerance on the Newton update
    bool strict = true;      // throw NoConvergence instead of only flagging

    void validate() const {
        if (epsilons.empty()) throw ConfigError("PenaltySchedule: empty epsilon sequence");
        double prev = 2.0;
        for (double e : epsilons) {
            if (!(e > 0.0) || !(e <= 1.0))
                throw ConfigError("PenaltySchedule: epsilons must lie in (0, 1]");
            if (!(e < prev)) throw ConfigError("PenaltySchedule: epsilons must strictly decrease");
            prev = e;
        }
        if (max_inner < 1) throw ConfigError("PenaltySchedule: max_inner must be >= 1");
        if (!(inner_tol > 0.0)) throw ConfigError("PenaltySchedule: inner_tol must be > 0");
    }
};

/// Penalty function: the clamp of s/epsilon to [-1/eps^2, eps] with C^1
/// quadratic knees of half-width eps^2/2. Increasing, bounded, derivative
/// bounded by 1/eps, beta(s) <= eps for s > 0, and beta(s) -> -inf for s < 0
/// as eps -> 0.
inline double penalty_beta(double s, double epsilon) {
    const double e = epsilon;
    const double knee = 0.5 * e * e;
    const double s_top = e * e;    // where s/e meets the upper clamp
    const double s_bot = -1.0 / e; // where s/e meets the lower clamp
    if (s >= s_top + knee) return e;
    if (s > s_top - knee) {
        const double d = s_top + knee - s;
        return e - d * d / (4.0 * knee * e);
    }
    if (s <= s_bot - knee) return -1.0 / (e * e);
    if (s < s_bot + knee) {
        const double d = s - (s_bot - knee);
        return -1.0 / (e * e) + d * d / (4.0 * knee * e);
    }
    return s / e;
}

inline double penalty_beta_derivative(double s, double epsilon) {
    const double e = epsilon;
    const double knee = 0.5 * e * e;
    const double s_top = e * e;
    const double s_bot = -1.0 / e;
    if (s >= s_top + knee || s <= s_bot - knee) return 0.0;
    if (s > s_top - knee) return (s_top + knee - s) / (2.0 * knee * e);
    if (s < s_bot + knee) return (s - (s_bot - knee)) / (2.0 * knee * e);
    return 1.0 / e;
}

/// Payoff regularization f^delta: the sliding average of the payoff over
/// [S - delta, S + delta], evaluated exactly from the piecewise-linear
/// representation. Kinks become quadratic blends; f^delta -> f uniformly as
/// delta -> 0 and f^delta >= f - delta for 1-Lipschitz payoffs.
struct MollifiedPayoff {
    Payoff payoff;
    PiecewiseLinear shape;
    double delta = 0.0;

    double operator()(double price) const {
        if (delta <= 0.0) return payoff(price);
        return shape.floored_integral(price - delta, price + delta, payoff.floor) /
               (2.0 * delta);
    }
};

inline MollifiedPayoff mollify_payoff(const Payoff& payoff, double delta) {
    if (delta < 0.0) throw ConfigError("mollify_payoff: delta must be >= 0");
    return MollifiedPayoff{payoff, to_piecewise_linear(payoff), delta};
}

namespace detail {

struct Tridiagonal {
    std::vector<double> lower, diag, upper; // lower[i] couples row i to i-1

    explicit Tridiagonal(int n)
        : lower(static_cast<std::size_t>(n), 0.0),
          diag(static_cast<std::size_t>(n), 0.0),
          upper(static_cast<std::size_t>(n), 0.0) {}

    // Thomas algorithm; overwrites rhs with the solution.
    void solve(std::vector<double>& rhs, std::vector<double>& scratch) const {
        const std::size_t n = diag.size();
        scratch.resize(n);
        double d = diag[0];
        scratch[0] = upper[0] / d;
        rhs[0] /= d;
        for (std::size_t i = 1; i < n; ++i) {
            d = diag[i] - lower[i] * scratch[i - 1];
            scratch[i] = upper[i] / d;
            rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / d;
        }
        for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= scratch[i] * rhs[i + 1];
    }
};

struct CurvatureStencil {
    double wm, w0, wp; // nonuniform central second-difference weights
};

inline CurvatureStencil curvature_stencil(const PdeGrid& g, int i) {
    const double hm = g.prices[i] - g.prices[i - 1];
    const double hp = g.prices[i + 1] - g.prices[i];
    return {2.0 / (hm * (hm + hp)), -2.0 / (hm * hp), 2.0 / (hp * (hm + hp))};
}

inline double curvature_weight(const PdeGrid& g, int i) {
    return g.form == OperatorForm::bsb ? g.prices[i] * g.prices[i] : 1.0;
}

inline double convection_coefficient(const PdeGrid& g, int i) {
    return g.form == OperatorForm::bsb ? g.params.rate * g.prices[i] : g.params.rate;
}

// diffusion branch chosen by the sign of the curvature argument; ties at
// zero go to sigma_high^2 on the upper side
inline double branch_sigma_sq(double curvature_arg, const GParams& p, Side side) {
    const double lo = p.sigma_low * p.sigma_low;
    const double hi = p.sigma_high * p.sigma_high;
    if (side == Side::upper) return curvature_arg >= 0.0 ? hi : lo;
    return curvature_arg >= 0.0 ? lo : hi;
}

struct ImplicitRow {
    double lower, diag, upper; // coefficients of u_{i-1}, u_i, u_{i+1} in u - dt*(Lu - ru)
    double sigma_sq;
};

// row of the implicit operator I - dt*(L - r), with the diffusion branch
// frozen from the curvature of `u_branch`
inline ImplicitRow implicit_row(const PdeGrid& g, const std::vector<double>& u_branch, int i,
                                double dt) {
    const auto st = curvature_stencil(g, i);
    const double w = curvature_weight(g, i);
    const double curv =
        w * (st.wm * u_branch[i - 1] + st.w0 * u_branch[i] + st.wp * u_branch[i + 1]);
    const double s2 = branch_sigma_sq(curv, g.params, g.side);
    const double diff = 0.5 * s2 * w;
    const double hp = g.prices[i + 1] - g.prices[i];
    const double conv = convection_coefficient(g, i) / hp;
    ImplicitRow row;
    row.lower = -dt * diff * st.wm;
    row.diag = 1.0 - dt * (diff * st.w0 - conv - g.params.rate);
    row.upper = -dt * (diff * st.wp + conv);
    row.sigma_sq = s2;
    return row;
}

inline double auto_delta(const PdeGrid& g) {
    const int mid = g.n_space() / 2;
    return g.prices[mid + 1] - g.prices[mid];
}

} // namespace detail

/// Spatial part of Lu - ru at every grid node (zero on the boundary rows):
/// central second differences feed the sublinear function node by node, the
/// convection term r S u_S is upwinded.
inline std::vector<double> assemble_operator(const PdeGrid& grid, const GParams& params,
                                             const std::vector<double>& u) {
    const int n = grid.n_space();
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    for (int i = 1; i + 1 < n; ++i) {
        const auto st = detail::curvature_stencil(grid, i);
        const double curv = detail::curvature_weight(grid, i) *
                            (st.wm * u[i - 1] + st.w0 * u[i] + st.wp * u[i + 1]);
        const double diffusion =
            grid.side == Side::upper ? g_function(curv, params) : g_lower(curv, params);
        const double hp = grid.prices[i + 1] - grid.prices[i];
        const double convection =
            detail::convection_coefficient(grid, i) * (u[i + 1] - u[i]) / hp;
        out[static_cast<std::size_t>(i)] = diffusion + convection - params.rate * u[i];
    }
    return out;
}

/// Solved value field with penalty and complementarity diagnostics.
/// Row t of `field` is the slice at time t * maturity / n_time; row 0 is the
/// valuation date, row n_time the terminal condition.
struct PdeSolution {
    PdeGrid grid;
    std::vector<double> field;
    std::vector<double> penalty_field;  // beta_eps(u - f^delta) at the final epsilon
    std::vector<double> residual_field; // max{Lu - ru, f - u}
    std::vector<std::pair<double, double>> penalty_sup_by_epsilon; // (eps, max |beta|)
    bool converged = true;
    double delta_used = 0.0;

    double at(int t_index, int i) const {
        return field[static_cast<std::size_t>(t_index) * grid.prices.size() +
                     static_cast<std::size_t>(i)];
    }

    /// Valuation-date value, interpolated linearly in log price.
    double value_at(double price) const {
        const auto& s = grid.prices;
        if (price <= s.front()) return at(0, 0);
        if (price >= s.back()) return at(0, grid.n_space() - 1);
        auto it = std::upper_bound(s.begin(), s.end(), price);
        const int i = static_cast<int>(it - s.begin());
        const double w = std::log(price / s[i - 1]) / std::log(s[i] / s[i - 1]);
        return (1.0 - w) * at(0, i - 1) + w * at(0, i);
    }
};

namespace detail {

inline void fill_residual_field(PdeSolution& sol, const std::vector<double>& obstacle) {
    const PdeGrid& grid = sol.grid;
    const int n = grid.n_space();
    sol.residual_field.assign(sol.field.size(), 0.0);
    std::vector<double> slice(static_cast<std::size_t>(n));
    for (int t = 0; t < grid.n_time; ++t) {
        for (int i = 0; i < n; ++i) slice[static_cast<std::size_t>(i)] = sol.at(t, i);
        const auto lu = assemble_operator(grid, grid.params, slice);
        for (int i = 1; i + 1 < n; ++i) {
            const double time_term = (sol.at(t + 1, i) - sol.at(t, i)) / grid.dt();
            const double complement = obstacle[static_cast<std::size_t>(i)] - sol.at(t, i);
            sol.residual_field[static_cast<std::size_t>(t) * n + i] =
                std::max(time_term + lu[static_cast<std::size_t>(i)], complement);
        }
    }
}

// one implicit backward step of the penalized problem: semismooth Newton on
// F(u) = u - dt*(Lu - ru) + dt*beta_eps(u - f^d) - u_next with the diffusion
// branch refrozen every iteration and the penalty slope clamped by 1/eps.
// Convergence is declared on the true nonlinear residual, so branch flips at
// round-off-level curvature cannot stall the iteration.
inline bool penalized_step(const PdeGrid& g, const std::vector<double>& u_next,
                           const std::vector<double>& obstacle, double epsilon,
                           const PenaltySchedule& sched, int step_index,
                           std::vector<double>& u, Tridiagonal& mat, std::vector<double>& rhs,
                           std::vector<double>& scratch) {
    const int n = g.n_space();
    const double dt = g.dt();
    double last_residual = 0.0;
    for (int it = 0; it < sched.max_inner; ++it) {
        mat.diag[0] = 1.0;
        mat.upper[0] = 0.0;
        rhs[0] = obstacle[0] - u[0];
        mat.diag[static_cast<std::size_t>(n - 1)] = 1.0;
        mat.lower[static_cast<std::size_t>(n - 1)] = 0.0;
        rhs[static_cast<std::size_t>(n - 1)] =
            obstacle[static_cast<std::size_t>(n - 1)] - u[static_cast<std::size_t>(n - 1)];
        last_residual = std::max(std::abs(rhs[0]), std::abs(rhs[static_cast<std::size_t>(n - 1)]));
        for (int i = 1; i + 1 < n; ++i) {
            const auto row = implicit_row(g, u, i, dt);
            const double pen_arg = u[i] - obstacle[static_cast<std::size_t>(i)];
            const double f_i = row.lower * u[i - 1] + row.diag * u[i] + row.upper * u[i + 1] +
                               dt * penalty_beta(pen_arg, epsilon) - u_next[i];
            last_residual = std::max(last_residual, std::abs(f_i));
            mat.lower[static_cast<std::size_t>(i)] = row.lower;
            mat.diag[static_cast<std::size_t>(i)] =
                row.diag + dt * penalty_beta_derivative(pen_arg, epsilon);
            mat.upper[static_cast<std::size_t>(i)] = row.upper;
            rhs[static_cast<std::size_t>(i)] = -f_i;
        }
        if (last_residual <= sched.inner_tol) return true;
        mat.solve(rhs, scratch);
        for (int i = 0; i < n; ++i) u[static_cast<std::size_t>(i)] += rhs[static_cast<std::size_t>(i)];
    }
    if (sched.strict)
        throw NoConvergence("pde_solve_penalized: inner iteration cap reached at time step " +
                                std::to_string(step_index),
                            step_index, sched.max_inner, last_residual);
    return false;
}

} // namespace detail

/// Solve the penalized and regularized free-boundary problem
///   Lu - ru = beta_eps(u - f^delta),  u = f^delta on the parabolic boundary,
/// by fully implicit backward steps, sweeping the epsilon schedule. The
/// returned field is the final epsilon's solution.
inline PdeSolution pde_solve_penalized(const PdeGrid& grid, const Payoff& payoff,
                                       const PenaltySchedule& schedule) {
    grid.validate();
    schedule.validate();
    const int n = grid.n_space();
    const double delta = schedule.delta < 0.0 ? detail::auto_delta(grid) : schedule.delta;
    const MollifiedPayoff smooth = mollify_payoff(payoff, delta);

    std::vector<double> obstacle(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) obstacle[static_cast<std::size_t>(i)] = smooth(grid.prices[i]);

    PdeSolution sol;
    sol.grid = grid;
    sol.delta_used = delta;
    sol.field.assign(static_cast<std::size_t>(grid.n_time + 1) * n, 0.0);
    sol.penalty_field.assign(sol.field.size(), 0.0);

    detail::Tridiagonal mat(n);
    std::vector<double> rhs(static_cast<std::size_t>(n)), scratch, u, u_next;
    for (double eps : schedule.epsilons) {
        const bool record = eps == schedule.epsilons.back();
        u_next = obstacle;
        u = u_next;
        double sup_beta = 0.0;
        for (int step = grid.n_time - 1; step >= 0; --step) {
            if (!detail::penalized_step(grid, u_next, obstacle, eps, schedule, step, u, mat,
                                        rhs, scratch))
                sol.converged = false;
            for (int i = 1; i + 1 < n; ++i)
                sup_beta = std::max(sup_beta,
                                    std::abs(penalty_beta(u[static_cast<std::size_t>(i)] -
                                                              obstacle[static_cast<std::size_t>(i)],
                                                          eps)));
            if (record) {
                for (int i = 0; i < n; ++i) {
                    sol.field[static_cast<std::size_t>(step) * n + i] =
                        u[static_cast<std::size_t>(i)];
                    sol.penalty_field[static_cast<std::size_t>(step) * n + i] = penalty_beta(
                        u[static_cast<std::size_t>(i)] - obstacle[static_cast<std::size_t>(i)],
                        eps);
                }
            }
            u_next = u;
        }
        sol.penalty_sup_by_epsilon.emplace_back(eps, sup_beta);
    }
    for (int i = 0; i < n; ++i)
        sol.field[static_cast<std::size_t>(grid.n_time) * n + i] =
            obstacle[static_cast<std::size_t>(i)];

    detail::fill_residual_field(sol, obstacle);
    return sol;
}

/// Unconstrained backward solve (penalty and obstacle off): the plain
/// parabolic problem with the same operator and boundary data, for
/// closed-form validation runs.
inline PdeSolution pde_solve_european(const PdeGrid& grid, const Payoff& payoff,
                                      double delta = 0.0) {
    grid.validate();
    const int n = grid.n_space();
    const MollifiedPayoff smooth = mollify_payoff(payoff, delta);
    PdeSolution sol;
    sol.grid = grid;
    sol.delta_used = delta;
    sol.field.assign(static_cast<std::size_t>(grid.n_time + 1) * n, 0.0);

    std::vector<double> boundary(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) boundary[static_cast<std::size_t>(i)] = smooth(grid.prices[i]);
    for (int i = 0; i < n; ++i)
        sol.field[static_cast<std::size_t>(grid.n_time) * n + i] =
            boundary[static_cast<std::size_t>(i)];

    const double dt = grid.dt();
    const double scale = 1.0 + std::abs(*std::max_element(
                                   boundary.begin(), boundary.end(), [](double a, double b) {
                                       return std::abs(a) < std::abs(b);
                                   }));
    detail::Tridiagonal mat(n);
    std::vector<double> rhs(static_cast<std::size_t>(n)), scratch;
    std::vector<double> u = boundary, u_next = boundary;
    for (int step = grid.n_time - 1; step >= 0; --step) {
        for (int it = 0; it < 12; ++it) {
            mat.diag[0] = 1.0;
            mat.upper[0] = 0.0;
            rhs[0] = boundary[0];
            mat.diag[static_cast<std::size_t>(n - 1)] = 1.0;
            mat.lower[static_cast<std::size_t>(n - 1)] = 0.0;
            rhs[static_cast<std::size_t>(n - 1)] = boundary[static_cast<std::size_t>(n - 1)];
            for (int i = 1; i + 1 < n; ++i) {
                const auto row = detail::implicit_row(grid, u, i, dt);
                mat.lower[static_cast<std::size_t>(i)] = row.lower;
                mat.diag[static_cast<std::size_t>(i)] = row.diag;
                mat.upper[static_cast<std::size_t>(i)] = row.upper;
                rhs[static_cast<std::size_t>(i)] = u_next[static_cast<std::size_t>(i)];
            }
            std::vector<double> candidate = rhs;
            mat.solve(candidate, scratch);
            double change = 0.0;
            for (int i = 0; i < n; ++i)
                change = std::max(change, std::abs(candidate[static_cast<std::size_t>(i)] -
                                                   u[static_cast<std::size_t>(i)]));
            u = candidate;
            if (change <= 1e-13 * scale) break;
        }
        for (int i = 0; i < n; ++i)
            sol.field[static_cast<std::size_t>(step) * n + i] = u[static_cast<std::size_t>(i)];
        u_next = u;
    }
    return sol;
}

/// Obstacle route: per implicit step solve the linear complementarity problem
///   min(u - dt (Lu - ru) - u_next, u - f) = 0
/// by policy iteration over {exercise, continue} with the diffusion branch
/// refrozen between sweeps. u >= f holds exactly on grid nodes.
inline PdeSolution pde_solve_projected(const PdeGrid& grid, const Payoff& payoff) {
    grid.validate();
    const int n = grid.n_space();
    PdeSolution sol;
    sol.grid = grid;
    sol.field.assign(static_cast<std::size_t>(grid.n_time + 1) * n, 0.0);

    std::vector<double> obstacle(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) obstacle[static_cast<std::size_t>(i)] = payoff(grid.prices[i]);
    for (int i = 0; i < n; ++i)
        sol.field[static_cast<std::size_t>(grid.n_time) * n + i] =
            obstacle[static_cast<std::size_t>(i)];

    const double dt = grid.dt();
    const double scale = 1.0 + std::abs(*std::max_element(
                                   obstacle.begin(), obstacle.end(), [](double a, double b) {
                                       return std::abs(a) < std::abs(b);
                                   }));
    detail::Tridiagonal mat(n);
    std::vector<double> rhs(static_cast<std::size_t>(n)), scratch;
    std::vector<double> u = obstacle, u_next = obstacle;
    std::vector<std::uint8_t> active(static_cast<std::size_t>(n), 0);

    for (int step = grid.n_time - 1; step >= 0; --step) {
        for (int i = 0; i < n; ++i)
            active[static_cast<std::size_t>(i)] =
                u[static_cast<std::size_t>(i)] <= obstacle[static_cast<std::size_t>(i)] + 1e-14;
        constexpr int kMaxPolicy = 200;
        int it = 0;
        for (; it < kMaxPolicy; ++it) {
            mat.diag[0] = 1.0;
            mat.upper[0] = 0.0;
            rhs[0] = obstacle[0];
            mat.diag[static_cast<std::size_t>(n - 1)] = 1.0;
            mat.lower[static_cast<std::size_t>(n - 1)] = 0.0;
            rhs[static_cast<std::size_t>(n - 1)] = obstacle[static_cast<std::size_t>(n - 1)];
            for (int i = 1; i + 1 < n; ++i) {
                const auto row = detail::implicit_row(grid, u, i, dt);
                if (active[static_cast<std::size_t>(i)]) {
                    mat.lower[static_cast<std::size_t>(i)] = 0.0;
                    mat.diag[static_cast<std::size_t>(i)] = 1.0;
                    mat.upper[static_cast<std::size_t>(i)] = 0.0;
                    rhs[static_cast<std::size_t>(i)] = obstacle[static_cast<std::size_t>(i)];
                } else {
                    mat.lower[static_cast<std::size_t>(i)] = row.lower;
                    mat.diag[static_cast<std::size_t>(i)] = row.diag;
                    mat.upper[static_cast<std::size_t>(i)] = row.upper;
                    rhs[static_cast<std::size_t>(i)] = u_next[static_cast<std::size_t>(i)];
                }
            }
            std::vector<double> candidate = rhs;
            mat.solve(candidate, scratch);
            double change = 0.0;
            for (int i = 0; i < n; ++i)
                change = std::max(change, std::abs(candidate[static_cast<std::size_t>(i)] -
                                                   u[static_cast<std::size_t>(i)]));
            u = candidate;
            // policy improvement: exercise wherever the obstacle beats the
            // one-row continuation value given the current neighbours
            bool policy_stable = true;
            for (int i = 1; i + 1 < n; ++i) {
                const auto row = detail::implicit_row(grid, u, i, dt);
                const double q_continue =
                    (u_next[static_cast<std::size_t>(i)] - row.lower * u[i - 1] -
                     row.upper * u[i + 1]) /
                    row.diag;
                const std::uint8_t want =
                    obstacle[static_cast<std::size_t>(i)] > q_continue + 1e-14 ? 1 : 0;
                if (want != active[static_cast<std::size_t>(i)]) policy_stable = false;
                active[static_cast<std::size_t>(i)] = want;
            }
            if (policy_stable && change <= 1e-12 * scale) break;
        }
        if (it == kMaxPolicy)
            throw NoConvergence("pde_solve_projected: policy iteration cap at time step " +
                                    std::to_string(step),
                                step, kMaxPolicy, 0.0);
        for (int i = 0; i < n; ++i) {
            u[static_cast<std::size_t>(i)] =
                std::max(u[static_cast<std::size_t>(i)], obstacle[static_cast<std::size_t>(i)]);
            sol.field[static_cast<std::size_t>(step) * n + i] = u[static_cast<std::size_t>(i)];
        }
        u_next = u;
    }

    detail::fill_residual_field(sol, obstacle);
    return sol;
}

/// Worst complementarity violation of a solved field: at interior space-time
/// nodes the discrete Lu - ru and f - u must both be <= tol while their
/// maximum stays >= -tol.
struct ResidualReport {
    double worst = 0.0;
    int t_index = 0;
    int space_index = 0;
};

inline ResidualReport residual_check(const PdeSolution& sol, const Payoff& payoff) {
    const PdeGrid& grid = sol.grid;
    const int n = grid.n_space();
    ResidualReport rep;
    std::vector<double> slice(static_cast<std::size_t>(n));
    for (int t = 0; t < grid.n_time; ++t) {
        for (int i = 0; i < n; ++i) slice[static_cast<std::size_t>(i)] = sol.at(t, i);
        const auto lu = assemble_operator(grid, grid.params, slice);
        for (int i = 1; i + 1 < n; ++i) {
            const double ldisc =
                (sol.at(t + 1, i) - sol.at(t, i)) / grid.dt() + lu[static_cast<std::size_t>(i)];
            const double complement = payoff(grid.prices[i]) - sol.at(t, i);
            const double violation =
                std::max({ldisc, complement, -std::max(ldisc, complement)});
            if (violation > rep.worst) {
                rep.worst = violation;
                rep.t_index = t;
                rep.space_index = i;
            }
        }
    }
    return rep;
}

/// Contact-set edge of a solved field, one critical price per time slice
/// where the value touches the payoff within tol (largest such price for
/// puts, smallest for calls).
inline std::vector<std::pair<double, double>> pde_exercise_boundary(const PdeSolution& sol,
                                                                    const Payoff& payoff,
                                                                    double tol) {
    const PdeGrid& grid = sol.grid;
    const bool from_above = payoff.kind == PayoffKind::call;
    std::vector<std::pair<double, double>> out;
    for (int t = 0; t <= grid.n_time; ++t) {
        bool found = false;
        double critical = 0.0;
        for (int i = 0; i < grid.n_space(); ++i) {
            const double f = payoff(grid.prices[i]);
            if (f - payoff.floor <= tol) continue;
            if (std::abs(sol.at(t, i) - f) > tol) continue;
            if (!found) {
                critical = grid.prices[i];
                found = true;
            } else {
                critical = from_above ? std::min(critical, grid.prices[i])
                                      : std::max(critical, grid.prices[i]);
            }
        }
        if (found) out.emplace_back(t * grid.dt(), critical);
    }
    return out;
}

/// Where the payoff regularization fails the uniform concavity-type bound
/// -G(-D^2 f^delta) >= c. Vanilla payoffs satisfy it only piecewise; the
/// solver does not require it, this is reporting only.
struct CurvatureReport {
    double min_value = 0.0; // min over interior nodes of -G(-D^2 f^delta)
    int argmin = 0;
    int nodes_below = 0; // count of nodes with value < c
};

inline CurvatureReport check_payoff_curvature(const PdeGrid& grid, const MollifiedPayoff& f,
                                              double c) {
    const int n = grid.n_space();
    std::vector<double> fd(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) fd[static_cast<std::size_t>(i)] = f(grid.prices[i]);
    CurvatureReport rep;
    rep.min_value = 1e300;
    for (int i = 1; i + 1 < n; ++i) {
        const auto st = detail::curvature_stencil(grid, i);
        const double d2 = st.wm * fd[i - 1] + st.w0 * fd[i] + st.wp * fd[i + 1];
        const double v = -g_function(-d2, grid.params);
        if (v < rep.min_value) {
            rep.min_value = v;
            rep.argmin = i;
        }
        if (v < c) ++rep.nodes_below;
    }
    return rep;
}

} // namespace gclaim
