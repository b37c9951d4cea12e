#pragma once

#include "gclaim/errors.hpp"
#include "gclaim/gparams.hpp"
#include "gclaim/payoff.hpp"
#include "gclaim/pde.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace gclaim {

enum class Engine { tree, pde, both };

inline const char* to_string(Engine e) {
    switch (e) {
        case Engine::tree: return "tree";
        case Engine::pde: return "pde";
        default: return "both";
    }
}

/// Validated run configuration shared by all CLI subcommands. Parsed from a
/// JSON document; command-line flags override individual fields.
struct RunConfig {
    Engine engine = Engine::tree;
    Payoff payoff;
    double maturity = 1.0;
    GParams params;
    double spot = 0.0;
    int n_steps = 500;
    int n_space = 400;
    int n_time = 400;
    double stretch = 1.5;
    OperatorForm operator_form = OperatorForm::bsb;
    PenaltySchedule schedule;
    std::string out_dir = ".";
    double tolerance = 0.005;     // crosscheck gap tolerance, relative to spot scale
    bool force_oracle = false;    // crosscheck: demand the brute-force rows regardless of size
    bool seedless = true;         // reserved; the engines are deterministic
    double boundary_tol_scale = 1e-8; // boundary contact tolerance = scale * strike

    void validate() const {
        params.validate();
        payoff.validate();
        if (!(spot > 0.0)) throw ConfigError("market.spot must be > 0");
        if (!(maturity > 0.0)) throw ConfigError("product.maturity must be > 0");
        if (n_steps < 1) throw ConfigError("discretization.n_steps must be >= 1");
        if (n_space < 3) throw ConfigError("discretization.n_space must be >= 3");
        if (n_time < 1) throw ConfigError("discretization.n_time must be >= 1");
        if (!(stretch >= 1.0)) throw ConfigError("discretization.stretch must be >= 1");
        if (!(tolerance >= 0.0)) throw ConfigError("crosscheck.tolerance must be >= 0");
        schedule.validate();
    }

    /// Strike-like scale for boundary and residual tolerances.
    double strike_scale() const {
        if (payoff.kind != PayoffKind::tabulated) return payoff.strike;
        return spot;
    }
};

namespace detail {

template <typename T>
T field_or(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("config field '") + key + "' has the wrong type");
    }
}

} // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
    RunConfig cfg;

    const std::string engine = detail::field_or<std::string>(j, "engine", "tree");
    if (engine == "tree")
        cfg.engine = Engine::tree;
    else if (engine == "pde")
        cfg.engine = Engine::pde;
    else if (engine == "both")
        cfg.engine = Engine::both;
    else
        throw ConfigError("engine must be one of tree|pde|both");

    if (!j.contains("product")) throw ConfigError("missing section 'product'");
    const auto& prod = j.at("product");
    const std::string kind = detail::field_or<std::string>(prod, "kind", "");
    const double floor = detail::field_or<double>(prod, "floor", 0.0);
    if (kind == "put" || kind == "call") {
        if (!prod.contains("strike"))
            throw ConfigError("missing field 'product.strike' for kind=" + kind);
        const double strike = prod.at("strike").get<double>();
        cfg.payoff = kind == "put" ? Payoff::make_put(strike, floor)
                                   : Payoff::make_call(strike, floor);
    } else if (kind == "tabulated") {
        if (!prod.contains("table")) throw ConfigError("missing field 'product.table'");
        std::vector<std::pair<double, double>> knots;
        for (const auto& row : prod.at("table")) {
            if (!row.is_array() || row.size() != 2)
                throw ConfigError("product.table rows must be [price, value] pairs");
            knots.emplace_back(row[0].get<double>(), row[1].get<double>());
        }
        cfg.payoff = Payoff::make_tabulated(std::move(knots), floor);
    } else {
        throw ConfigError("product.kind must be one of put|call|tabulated");
    }
    if (!prod.contains("maturity")) throw ConfigError("missing field 'product.maturity'");
    cfg.maturity = prod.at("maturity").get<double>();

    if (!j.contains("market")) throw ConfigError("missing section 'market'");
    const auto& mkt = j.at("market");
    if (!mkt.contains("spot")) throw ConfigError("missing field 'market.spot'");
    cfg.spot = mkt.at("spot").get<double>();
    cfg.params.sigma_low = detail::field_or<double>(mkt, "sigma_low", 0.0);
    cfg.params.sigma_high = detail::field_or<double>(mkt, "sigma_high", 0.0);
    cfg.params.mu_low = detail::field_or<double>(mkt, "mu_low", 0.0);
    cfg.params.mu_high = detail::field_or<double>(mkt, "mu_high", 0.0);
    cfg.params.rate = detail::field_or<double>(mkt, "rate", 0.0);

    if (j.contains("discretization")) {
        const auto& d = j.at("discretization");
        cfg.n_steps = detail::field_or<int>(d, "n_steps", cfg.n_steps);
        cfg.n_space = detail::field_or<int>(d, "n_space", cfg.n_space);
        cfg.n_time = detail::field_or<int>(d, "n_time", cfg.n_time);
        cfg.stretch = detail::field_or<double>(d, "stretch", cfg.stretch);
        const std::string op = detail::field_or<std::string>(d, "operator", "bsb");
        if (op == "bsb")
            cfg.operator_form = OperatorForm::bsb;
        else if (op == "literal")
            cfg.operator_form = OperatorForm::literal;
        else
            throw ConfigError("discretization.operator must be bsb|literal");
    }

    if (j.contains("schedule")) {
        const auto& s = j.at("schedule");
        if (s.contains("epsilons"))
            cfg.schedule.epsilons = s.at("epsilons").get<std::vector<double>>();
        cfg.schedule.delta = detail::field_or<double>(s, "delta", cfg.schedule.delta);
        cfg.schedule.max_inner = detail::field_or<int>(s, "max_inner", cfg.schedule.max_inner);
        cfg.schedule.inner_tol =
            detail::field_or<double>(s, "inner_tol", cfg.schedule.inner_tol);
    }

    if (j.contains("outputs")) {
        cfg.out_dir = detail::field_or<std::string>(j.at("outputs"), "dir", cfg.out_dir);
    }

    if (j.contains("crosscheck")) {
        const auto& c = j.at("crosscheck");
        cfg.tolerance = detail::field_or<double>(c, "tolerance", cfg.tolerance);
        cfg.force_oracle = detail::field_or<bool>(c, "force_oracle", cfg.force_oracle);
    }
    cfg.boundary_tol_scale =
        detail::field_or<double>(j, "boundary_tol_scale", cfg.boundary_tol_scale);

    cfg.validate();
    return cfg;
}

/// Effective-config echo; parse_run_config(to_json(cfg)) reproduces the run.
inline nlohmann::json to_json(const RunConfig& cfg) {
    nlohmann::json j;
    j["engine"] = to_string(cfg.engine);
    nlohmann::json prod;
    prod["kind"] = to_string(cfg.payoff.kind);
    prod["maturity"] = cfg.maturity;
    prod["floor"] = cfg.payoff.floor;
    if (cfg.payoff.kind != PayoffKind::tabulated) {
        prod["strike"] = cfg.payoff.strike;
    } else {
        nlohmann::json table = nlohmann::json::array();
        for (const auto& [s, v] : cfg.payoff.table) table.push_back({s, v});
        prod["table"] = table;
    }
    j["product"] = prod;
    j["market"] = {{"spot", cfg.spot},
                   {"sigma_low", cfg.params.sigma_low},
                   {"sigma_high", cfg.params.sigma_high},
                   {"mu_low", cfg.params.mu_low},
                   {"mu_high", cfg.params.mu_high},
                   {"rate", cfg.params.rate}};
    j["discretization"] = {
        {"n_steps", cfg.n_steps},
        {"n_space", cfg.n_space},
        {"n_time", cfg.n_time},
        {"stretch", cfg.stretch},
        {"operator", cfg.operator_form == OperatorForm::bsb ? "bsb" : "literal"}};
    j["schedule"] = {{"epsilons", cfg.schedule.epsilons},
                     {"delta", cfg.schedule.delta},
                     {"max_inner", cfg.schedule.max_inner},
                     {"inner_tol", cfg.schedule.inner_tol}};
    j["outputs"] = {{"dir", cfg.out_dir}};
    j["crosscheck"] = {{"tolerance", cfg.tolerance}, {"force_oracle", cfg.force_oracle}};
    j["boundary_tol_scale"] = cfg.boundary_tol_scale;
    return j;
}

} // namespace gclaim
