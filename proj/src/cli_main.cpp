#include "qdd/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "qdd/dp.hpp"
#include "qdd/errors.hpp"
#include "qdd/experiments.hpp"
#include "qdd/filter.hpp"
#include "qdd/risk.hpp"
#include "qdd/shiryaev.hpp"
#include "qdd/sim.hpp"

#include "CLI11.hpp"

namespace qdd {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open output file: " + path);
    return out;
}

std::string sibling_json(const std::string& path) {
    const auto dot = path.find_last_of('.');
    const auto slash = path.find_last_of('/');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
        return path + ".json";
    return path.substr(0, dot) + ".json";
}

TimeGrid make_grid(const ModelSpec& model, double dt, double horizon) {
    return TimeGrid::make(dt,
                          horizon > 0.0 ? horizon : default_horizon(model, dt));
}

StrategySpec parse_strategy(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos)
        throw InputError("strategy must be kind:args, e.g. fixed:2.5");
    const std::string kind = text.substr(0, colon);
    std::vector<double> args;
    {
        std::stringstream ss(text.substr(colon + 1));
        std::string item;
        while (std::getline(ss, item, ','))
            args.push_back(std::stod(item));
    }
    if (kind == "fixed" && args.size() == 1) return FixedTime{args[0]};
    if (kind == "true" && args.size() == 1) return ThresholdOnTrue{args[0]};
    if (kind == "mismatch" && args.size() == 3)
        return ThresholdMismatched{args[0], args[1], args[2]};
    throw InputError(
        "strategy forms: fixed:T | true:A | mismatch:DRIFT,RATE,A");
}

int run_simulate(const std::string& model_file, double dt, double horizon,
                 std::int64_t paths, std::uint64_t seed,
                 const std::string& out_prefix) {
    const auto model = load_model(model_file);
    const auto grid = make_grid(model, dt, horizon);
    for (std::int64_t p = 0; p < paths; ++p) {
        auto path =
            simulate_scenario(model, grid, seed, static_cast<std::uint64_t>(p));
        auto out = open_out(out_prefix + "path_" + std::to_string(p) + ".csv");
        write_path_csv(path, out);
    }
    return 0;
}

int run_filter(const std::string& model_file, double dt, double horizon,
               std::uint64_t seed, std::int64_t path_index,
               const std::string& method, const std::string& out_file) {
    const auto model = load_model(model_file);
    const auto grid = make_grid(model, dt, horizon);
    const auto path = simulate_scenario(model, grid, seed,
                                        static_cast<std::uint64_t>(path_index));
    const auto posterior =
        method == "sde" ? filter_sde(model, path) : filter_exact(model, path);
    auto out = open_out(out_file);
    out << "t";
    for (std::size_t i = 1; i <= model.n(); ++i) out << ",pi_" << i;
    out << ",pi_tilde,x_hat\n";
    for (std::int64_t k = 0; k <= grid.steps; ++k) {
        out << fmt(grid.time(k));
        for (std::size_t i = 0; i < model.n(); ++i)
            out << ',' << fmt(posterior.component(k, i));
        out << ',' << fmt(posterior.pi_tilde[static_cast<std::size_t>(k)])
            << ',' << fmt(posterior.x_hat[static_cast<std::size_t>(k)]) << '\n';
    }
    return 0;
}

int run_solve(double b, double sigma, double lambda, double c, int grid_points,
              const std::string& out_file) {
    SolveOptions opts;
    opts.grid_points = grid_points;
    const auto sol = solve_shiryaev({b, sigma, lambda, c}, opts);
    auto out = open_out(out_file);
    out << "pi,U,U_prime\n";
    const double h = 1.0 / (grid_points - 1);
    for (int k = 0; k < grid_points; ++k)
        out << fmt(k * h) << ',' << fmt(sol.value[static_cast<std::size_t>(k)])
            << ',' << fmt(sol.derivative[static_cast<std::size_t>(k)]) << '\n';
    nlohmann::json header = {{"threshold", sol.threshold},
                             {"root_tol", sol.root_tol},
                             {"deriv_tol", sol.deriv_tol},
                             {"grid_points", grid_points},
                             {"params",
                              {{"b", b},
                               {"sigma", sigma},
                               {"lambda", lambda},
                               {"c", c}}}};
    auto meta = open_out(sibling_json(out_file));
    meta << header.dump(2) << '\n';
    std::cout << "threshold " << fmt(sol.threshold) << "\n";
    return 0;
}

void write_estimate_row(std::ostream& out, const std::string& label,
                        const RiskEstimate& e) {
    out << label << ',' << fmt(e.mean) << ',' << fmt(e.half_width) << ','
        << fmt(e.false_alarm_rate) << ',' << fmt(e.mean_delay) << ','
        << e.truncated << '\n';
}

int run_risk(const std::string& model_file, const std::string& strategy_text,
             std::int64_t paths, double dt, double horizon, std::uint64_t seed,
             int threads, const std::string& out_file) {
    const auto model = load_model(model_file);
    const auto grid = make_grid(model, dt, horizon);
    auto out = open_out(out_file);
    if (strategy_text.rfind("scan:", 0) == 0) {
        std::vector<double> args;
        std::stringstream ss(strategy_text.substr(5));
        std::string item;
        while (std::getline(ss, item, ',')) args.push_back(std::stod(item));
        if (args.size() != 2) throw InputError("scan needs scan:LO,HI");
        const auto opt = optimize_threshold(model, grid, paths, seed,
                                            {args[0], args[1]},
                                            /*refine=*/true, threads);
        out << "a,mean,half_width,false_alarm,delay\n";
        auto dump = [&](const ScanTable& t) {
            for (std::size_t j = 0; j < t.thresholds.size(); ++j) {
                const auto& e = t.at(j);
                out << fmt(t.thresholds[j]) << ',' << fmt(e.mean) << ','
                    << fmt(e.half_width) << ',' << fmt(e.false_alarm_rate)
                    << ',' << fmt(e.mean_delay) << '\n';
            }
        };
        dump(opt.coarse);
        if (opt.fine) dump(*opt.fine);
        std::cout << "a_star " << fmt(opt.a_star) << " risk "
                  << fmt(opt.best.mean) << "\n";
        return 0;
    }
    const auto strategy = parse_strategy(strategy_text);
    const auto estimate =
        estimate_risk(model, strategy, grid, paths, seed, threads);
    if (estimate.horizon_warning)
        std::cerr << "warning: HorizonTooShort, " << estimate.truncated
                  << " truncated paths\n";
    out << "strategy,mean,half_width,false_alarm,delay,truncated\n";
    write_estimate_row(out, strategy_text, estimate);
    std::cout << "risk " << fmt(estimate.mean) << " +- "
              << fmt(estimate.half_width) << "\n";
    return 0;
}

int run_dp(const std::string& model_file, double h, double dt, int threads,
           const std::string& out_prefix) {
    const auto model = load_model(model_file);
    DpOptions opts;
    opts.h = h;
    opts.dt = dt;
    opts.threads = threads;
    const auto sol = solve_dp(model, opts);
    {
        auto out = open_out(out_prefix + "value.csv");
        if (sol.n == 1) {
            out << "pi_1,value,stop\n";
            for (int i = 0; i <= sol.m; ++i)
                out << fmt(i * sol.h) << ','
                    << fmt(sol.value[static_cast<std::size_t>(i)]) << ','
                    << int(sol.stop[static_cast<std::size_t>(i)]) << '\n';
        } else {
            out << "pi_1,pi_2,value,stop\n";
            for (int i = 0; i <= sol.m; ++i)
                for (int j = 0; j + i <= sol.m; ++j)
                    out << fmt(i * sol.h) << ',' << fmt(j * sol.h) << ','
                        << fmt(sol.value[sol.index(i, j)]) << ','
                        << int(sol.stop[sol.index(i, j)]) << '\n';
        }
    }
    if (sol.n == 2) {
        auto out = open_out(out_prefix + "boundary.csv");
        out << "pi_1,pi_2,l1\n";
        for (const auto& node : extract_boundary(sol))
            out << fmt(node.pi1) << ',' << fmt(node.pi2) << ',' << fmt(node.l1)
                << '\n';
    }
    std::cout << "iterations " << sol.iterations << " sup_change "
              << fmt(sol.sup_change) << "\n";
    return 0;
}

int run_experiment_cmd(const std::string& config_file,
                       const std::string& out_prefix,
                       const std::string& format) {
    const auto cfg = load_experiment_config(config_file);
    const auto report = run_experiment(cfg);
    if (!out_prefix.empty()) {
        if (format == "csv" || format == "both") {
            auto out = open_out(out_prefix + ".csv");
            out << report_to_csv(report);
        }
        if (format == "json" || format == "both") {
            auto out = open_out(out_prefix + ".json");
            out << report_to_json(report).dump(2) << '\n';
        }
    }
    int failures = 0;
    for (const auto& row : report.rows) {
        const char* tag = row.pass == 1 ? "pass" : row.pass == 0 ? "FAIL" : "info";
        std::cout << tag << "  " << row.label;
        if (!row.inequality.empty())
            std::cout << "  [" << row.inequality << "]  slack "
                      << fmt(row.slack);
        else
            std::cout << "  = " << fmt(row.statistic);
        std::cout << "  (" << row.claim_id << ")\n";
        if (row.pass == 0) ++failures;
    }
    if (failures > 0) {
        std::cout << failures << " failed rows in " << report.name << "\n";
        return 1;
    }
    return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
    CLI::App app{"Quickest-disorder-detection toolkit"};
    app.require_subcommand(1);

    std::string model_file, out = "out.csv", out_prefix = "qdd_";
    std::string strategy = "true:0.5", method = "exact", format = "both";
    std::string config_file;
    double dt = 1e-3, horizon = 0.0, h = 1.0 / 400;
    double b = 1.0, sigma = 1.0, lambda = 0.1, c = 1.0;
    int grid_points = 2001, threads = 0;
    std::int64_t paths = 1, path_index = 0;
    std::uint64_t seed = 1;

    auto* sim = app.add_subcommand("simulate", "write scenario CSV dumps");
    sim->add_option("--model", model_file)->required();
    sim->add_option("--dt", dt);
    sim->add_option("--horizon", horizon);
    sim->add_option("--paths", paths);
    sim->add_option("--seed", seed);
    sim->add_option("--out", out_prefix);

    auto* fil = app.add_subcommand("filter", "posterior trajectory on one path");
    fil->add_option("--model", model_file)->required();
    fil->add_option("--dt", dt);
    fil->add_option("--horizon", horizon);
    fil->add_option("--seed", seed);
    fil->add_option("--path-index", path_index);
    fil->add_option("--method", method)
        ->check(CLI::IsMember({"exact", "sde"}));
    fil->add_option("--out", out);

    auto* sol = app.add_subcommand("solve", "classical threshold and value");
    sol->add_option("--b", b);
    sol->add_option("--sigma", sigma);
    sol->add_option("--lambda", lambda);
    sol->add_option("--c", c);
    sol->add_option("--grid-points", grid_points);
    sol->add_option("--out", out);

    auto* rsk = app.add_subcommand("risk", "Monte Carlo Bayes risk");
    rsk->add_option("--model", model_file)->required();
    rsk->add_option("--strategy", strategy,
                    "fixed:T | true:A | mismatch:L,RATE,A | scan:LO,HI");
    rsk->add_option("--paths", paths);
    rsk->add_option("--dt", dt);
    rsk->add_option("--horizon", horizon);
    rsk->add_option("--seed", seed);
    rsk->add_option("--threads", threads);
    rsk->add_option("--out", out);

    auto* dp = app.add_subcommand("dp", "value iteration on the simplex");
    dp->add_option("--model", model_file)->required();
    dp->add_option("--h", h);
    dp->add_option("--dt", dt);
    dp->add_option("--threads", threads);
    dp->add_option("--out", out_prefix);

    auto* exp = app.add_subcommand("experiment", "run a named suite");
    exp->add_option("--config", config_file)->required();
    exp->add_option("--out", out_prefix);
    exp->add_option("--format", format)
        ->check(CLI::IsMember({"csv", "json", "both"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (sim->parsed())
            return run_simulate(model_file, dt, horizon, paths, seed,
                                out_prefix);
        if (fil->parsed())
            return run_filter(model_file, dt, horizon, seed, path_index,
                              method, out);
        if (sol->parsed())
            return run_solve(b, sigma, lambda, c, grid_points, out);
        if (rsk->parsed())
            return run_risk(model_file, strategy, paths, dt, horizon, seed,
                            threads, out);
        if (dp->parsed()) return run_dp(model_file, h, dt, threads, out_prefix);
        if (exp->parsed())
            return run_experiment_cmd(config_file, out_prefix, format);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

}  // namespace qdd
