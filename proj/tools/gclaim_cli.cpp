#include "gclaim/gclaim.hpp"
#include "gclaim/report.hpp"
#include "gclaim/runconfig.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace gclaim;
using nlohmann::json;

struct CliOverrides {
    std::string config_path;
    std::string engine;
    std::string out_dir;
    double tolerance = -1.0;
    bool seedless = false;
};

RunConfig load_config(const CliOverrides& o) {
    std::ifstream in(o.config_path);
    if (!in) throw ConfigError("cannot read config file '" + o.config_path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!o.engine.empty()) j["engine"] = o.engine;
    if (!o.out_dir.empty()) j["outputs"]["dir"] = o.out_dir;
    if (o.tolerance > 0.0) j["crosscheck"]["tolerance"] = o.tolerance;
    return parse_run_config(j);
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
    if (cfg.out_dir.empty() || cfg.out_dir == ".") return name;
    return cfg.out_dir + "/" + name;
}

struct PdeQuote {
    double ask = 0.0;
    double bid = 0.0;
    PdeSolution ask_solution;
};

PdeQuote run_pde(const RunConfig& cfg) {
    PdeQuote q;
    PdeGrid up = make_pde_grid(cfg.spot, cfg.maturity, cfg.n_space, cfg.n_time, cfg.params,
                               4.0, cfg.operator_form, Side::upper);
    q.ask_solution = pde_solve_penalized(up, cfg.payoff, cfg.schedule);
    q.ask = q.ask_solution.value_at(cfg.spot);
    PdeGrid low = make_pde_grid(cfg.spot, cfg.maturity, cfg.n_space, cfg.n_time, cfg.params,
                                4.0, cfg.operator_form, Side::lower);
    q.bid = pde_solve_penalized(low, cfg.payoff, cfg.schedule).value_at(cfg.spot);
    return q;
}

int cmd_price(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    json summary;
    summary["command"] = "price";
    summary["effective_config"] = to_json(cfg);

    std::optional<BidAskQuote> tree;
    std::optional<PdeQuote> pde;
    if (cfg.engine == Engine::tree || cfg.engine == Engine::both) {
        const Lattice lat =
            build_lattice(cfg.spot, cfg.maturity, cfg.n_steps, cfg.params, cfg.stretch);
        tree = bid_ask(lat, cfg.payoff);
        summary["tree"] = {{"bid", tree->bid},
                           {"ask", tree->ask},
                           {"bid_literal", tree->bid_literal}};
    }
    if (cfg.engine == Engine::pde || cfg.engine == Engine::both) {
        pde = run_pde(cfg);
        summary["pde"] = {{"bid", pde->bid}, {"ask", pde->ask}};
    }
    if (tree && pde) {
        summary["gap"] = {{"ask", std::abs(tree->ask - pde->ask)},
                          {"bid", std::abs(tree->bid - pde->bid)}};
    }
    const double bid = tree ? tree->bid : pde->bid;
    const double ask = tree ? tree->ask : pde->ask;
    summary["bid"] = bid;
    summary["ask"] = ask;
    const double runtime =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    summary["runtime_seconds"] = runtime;
    write_text_file(out_path(cfg, "price_summary.json"), summary.dump(2) + "\n");

    std::cout << "engine     " << to_string(cfg.engine) << "\n"
              << "bid        " << format_number(bid) << "\n"
              << "ask        " << format_number(ask) << "\n";
    if (tree)
        std::cout << "bid(inf-inf diagnostic) " << format_number(tree->bid_literal)
                  << "\n";
    if (tree && pde)
        std::cout << "|tree-pde| ask " << format_number(std::abs(tree->ask - pde->ask))
                  << "  bid " << format_number(std::abs(tree->bid - pde->bid)) << "\n";
    std::cout << "runtime    " << format_number(runtime) << " s\n";
    return 0;
}

int cmd_decompose(const RunConfig& cfg) {
    if (cfg.engine == Engine::pde)
        throw ConfigError("decompose requires the tree engine");
    const Lattice lat =
        build_lattice(cfg.spot, cfg.maturity, cfg.n_steps, cfg.params, cfg.stretch);
    const ValueSurface surf = snell_envelope(lat, cfg.payoff, Side::upper);
    const GdmDecomposition dec = gdm_decompose(surf, Side::upper);

    CsvWriter csv(out_path(cfg, "decompose.csv"),
                  {"command=decompose", "units=deflated-to-time-0", "side=upper"},
                  {"k", "j", "S", "X", "M", "A", "pi"});
    for (int k = 0; k <= lat.n_steps; ++k) {
        for (int j = -k; j <= k; ++j) {
            csv.row({std::to_string(k), std::to_string(j),
                     format_number(node_price(lat, k, j)), format_number(dec.x.at(k, j)),
                     format_number(dec.m.at(k, j)), format_number(dec.a.at(k, j)),
                     k < lat.n_steps ? format_number(dec.pi.at(k, j)) : ""});
        }
    }
    const double mviol = max_martingale_violation(dec);
    csv.comment("residual=" + format_number(dec.residual));
    csv.comment("martingale_violation=" + format_number(mviol));
    std::cout << "decompose: " << lat.node_count() << " nodes, residual "
              << format_number(dec.residual) << ", martingale violation "
              << format_number(mviol) << "\n";
    return 0;
}

int cmd_boundary(const RunConfig& cfg) {
    const double tol = cfg.boundary_tol_scale * cfg.strike_scale();
    auto write_tree_side = [&](Side side, const std::string& name) {
        const Lattice lat =
            build_lattice(cfg.spot, cfg.maturity, cfg.n_steps, cfg.params, cfg.stretch);
        const ValueSurface surf = snell_envelope(lat, cfg.payoff, side);
        const ExerciseBoundary b = exercise_boundary(surf, cfg.payoff, tol);
        CsvWriter csv(out_path(cfg, name),
                      {"command=boundary", std::string("side=") + to_string(side),
                       "engine=tree", "early_exercise_only=1"},
                      {"t", "critical_price"});
        for (const auto& pt : b.points)
            if (pt.step < lat.n_steps)
                csv.row({format_number(pt.step * lat.dt), format_number(pt.price)});
    };
    auto write_pde_side = [&](Side side, const std::string& name) {
        PdeGrid grid = make_pde_grid(cfg.spot, cfg.maturity, cfg.n_space, cfg.n_time,
                                     cfg.params, 4.0, cfg.operator_form, side);
        const PdeSolution sol = pde_solve_projected(grid, cfg.payoff);
        CsvWriter csv(out_path(cfg, name),
                      {"command=boundary", std::string("side=") + to_string(side),
                       "engine=pde", "early_exercise_only=1"},
                      {"t", "critical_price"});
        for (const auto& [t, price] : pde_exercise_boundary(sol, cfg.payoff, tol))
            if (t < cfg.maturity - 0.5 * grid.dt())
                csv.row({format_number(t), format_number(price)});
    };
    if (cfg.engine == Engine::tree || cfg.engine == Engine::both) {
        write_tree_side(Side::upper, "boundary_upper.csv");
        write_tree_side(Side::lower, "boundary_lower.csv");
    }
    if (cfg.engine == Engine::pde || cfg.engine == Engine::both) {
        const bool suffix = cfg.engine == Engine::both;
        write_pde_side(Side::upper, suffix ? "boundary_upper_pde.csv" : "boundary_upper.csv");
        write_pde_side(Side::lower, suffix ? "boundary_lower_pde.csv" : "boundary_lower.csv");
    }
    std::cout << "boundary files written to " << cfg.out_dir << "\n";
    return 0;
}

struct CheckRow {
    std::string name;
    double a, b, tol;
    bool pass() const { return std::abs(a - b) <= tol; }
};

int cmd_crosscheck(const RunConfig& cfg) {
    std::vector<CheckRow> rows;
    const Lattice lat =
        build_lattice(cfg.spot, cfg.maturity, cfg.n_steps, cfg.params, cfg.stretch);
    const BidAskQuote quote = bid_ask(lat, cfg.payoff);
    const double scale = cfg.strike_scale();

    const bool oracle_feasible = cfg.n_steps <= 4;
    if (oracle_feasible || cfg.force_oracle) {
        const double up = oracle::brute_force_value(lat, cfg.payoff, Side::upper);
        const double lo = oracle::brute_force_value(lat, cfg.payoff, Side::lower);
        rows.push_back({"tree_ask_vs_bruteforce", quote.ask, up, 1e-10});
        rows.push_back({"tree_bid_vs_bruteforce", quote.bid, lo, 1e-10});
    }
    if (cfg.params.is_classical() && cfg.payoff.kind != PayoffKind::tabulated) {
        const double crr =
            oracle::crr_reference(cfg.spot, cfg.payoff.strike, cfg.maturity,
                                  cfg.params.sigma_high, cfg.params.rate, 2000, true,
                                  cfg.payoff.kind);
        rows.push_back({"degenerate_ask_vs_crr", quote.ask, crr, cfg.tolerance * scale});
        rows.push_back({"degenerate_bid_eq_ask", quote.bid, quote.ask, 1e-12 * scale});
    }
    {
        const PdeQuote pde = run_pde(cfg);
        rows.push_back({"tree_vs_pde_ask", quote.ask, pde.ask, cfg.tolerance * scale});
        rows.push_back({"tree_vs_pde_bid", quote.bid, pde.bid, cfg.tolerance * scale});
    }
    if (cfg.payoff.kind != PayoffKind::tabulated) {
        const double euro_upper = european_surface(lat, cfg.payoff, Side::upper).at(0, 0);
        const double bs = oracle::bs_closed_form(cfg.spot, cfg.payoff.strike, cfg.maturity,
                                                 cfg.params.sigma_high, cfg.params.rate,
                                                 cfg.payoff.kind);
        rows.push_back({"euro_upper_vs_bs_sigma_high", euro_upper, bs, cfg.tolerance * scale});
    }

    CsvWriter csv(out_path(cfg, "crosscheck.csv"), {"command=crosscheck"},
                  {"check", "value_a", "value_b", "gap", "tolerance", "pass"});
    bool all_pass = true;
    for (const auto& r : rows) {
        const bool ok = r.pass();
        all_pass = all_pass && ok;
        csv.row({r.name, format_number(r.a), format_number(r.b),
                 format_number(std::abs(r.a - r.b)), format_number(r.tol), ok ? "1" : "0"});
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << r.name << "  a=" << format_number(r.a)
                  << "  b=" << format_number(r.b)
                  << "  gap=" << format_number(std::abs(r.a - r.b))
                  << "  tol=" << format_number(r.tol) << "\n";
    }
    return all_pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"bid-ask pricing of American claims under volatility uncertainty"};
    app.require_subcommand(1);

    CliOverrides o;
    std::string command;
    for (const char* name : {"price", "decompose", "boundary", "crosscheck"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", o.config_path, "JSON run configuration")->required();
        sub->add_option("--engine", o.engine, "override engine: tree|pde|both");
        sub->add_option("--out-dir", o.out_dir, "override output directory");
        sub->add_option("--tolerance", o.tolerance, "override crosscheck tolerance");
        sub->add_flag("--seedless", o.seedless,
                      "reserved; the engines are deterministic already");
        sub->callback([&command, name] { command = name; });
    }

    CLI11_PARSE(app, argc, argv);

    try {
        const RunConfig cfg = load_config(o);
        if (command == "price") return cmd_price(cfg);
        if (command == "decompose") return cmd_decompose(cfg);
        if (command == "boundary") return cmd_boundary(cfg);
        return cmd_crosscheck(cfg);
    } catch (const gclaim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const gclaim::Error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
