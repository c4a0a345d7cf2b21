#pragma once

#include <filesystem>
#include <iostream>

#include "nldiff/config.hpp"
#include "nldiff/girsanov.hpp"
#include "nldiff/semigroup.hpp"

namespace nldiff {

/// Exit codes of a run: 0 all verdicts pass, 2 some verdict failed,
/// 1 config or runtime error (thrown, mapped by the caller).
struct RunResult {
    int exit_code = 0;
    std::string summary;
};

namespace runner_detail {

inline Method parse_method(const Json& cmd) {
    const std::string m = cfg::get_or<std::string>(cmd, "method", "command", "dp");
    if (m == "pde") return Method::Pde;
    if (m == "dp") return Method::Dp;
    throw ConfigError("config: unknown method at command.method");
}

/// Quadrature evaluation of E[psi(x + drift t + sqrt(t) Z)], the closed-form
/// benchmark for the constant-coefficient 1-d models.
inline double gaussian_convolution(const TestFunction& psi, double x, double drift, double t,
                                   const QuadratureRule& rule) {
    KahanSum s;
    for (std::size_t j = 0; j < rule.nodes.size(); ++j)
        s.add(rule.weights[j] * psi(Vec{x + drift * t + std::sqrt(t) * rule.nodes[j][0]}));
    return s.value();
}

inline double oracle_error(const RunConfig& rc, const ValueGrid& v, const std::string& name,
                           double t) {
    if (rc.model.d != 1) throw ConfigError("config: command.oracle requires dimension 1");
    const QuadratureRule rule = gauss_hermite(60, 1);
    double worst = 0.0;
    for (std::size_t idx = 0; idx < v.values.size(); ++idx) {
        const Vec x = v.grid.coord(idx);
        if (!v.grid.in_middle_half(x)) continue;
        double ref = 0.0;
        if (name == "heat-gauss") {
            ref = gaussian_convolution(rc.function, x[0], 0.0, t, rule);
        } else if (name == "drift-tanh") {
            ref = gaussian_convolution(rc.function, x[0], rc.model.control_box.hi[0], t, rule);
        } else if (name == "halfspace-cdf") {
            const double c = -rc.model.control_box.lo[0];
            ref = normal_cdf((c * t - x[0]) / std::sqrt(t));
        } else {
            throw ConfigError("config: unknown oracle at command.oracle.name");
        }
        worst = std::max(worst, std::abs(v.values[idx] - ref));
    }
    return worst;
}

inline void write_json(const Json& j, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out << j.dump(2) << "\n";
}

inline Json grid_sidecar(const RunConfig& rc, const ValueGrid& v, const std::string& method) {
    return Json{{"t", v.time_label},
                {"dx", rc.grid.space.dx},
                {"dt", rc.grid.dt},
                {"domain", {{"lo", rc.grid.space.domain.lo}, {"hi", rc.grid.space.domain.hi}}},
                {"model_hash", rc.model_hash},
                {"config_hash", rc.hash},
                {"method", method}};
}

}  // namespace runner_detail

/**
 * Executes the single command of a parsed config and writes its artifacts
 * under the output directory. Throws ConfigError / std::exception on invalid
 * input; verdict failures are reported through the exit code instead.
 */
inline RunResult run_config(const RunConfig& rc, const std::string& out_override = "",
                            std::int64_t seed_override = -1) {
    namespace fs = std::filesystem;
    using namespace runner_detail;

    const Json& cmd = rc.command;
    const std::string name = cfg::require<std::string>(cmd, "name", "command");
    const std::uint64_t seed =
        seed_override >= 0 ? std::uint64_t(seed_override)
                           : cfg::get_or<std::uint64_t>(cmd, "seed", "command", 1);
    const std::string out_dir =
        !out_override.empty() ? out_override : cfg::get_or<std::string>(cmd, "out", "command", "out");
    const unsigned workers = unsigned(cfg::get_or<std::size_t>(cmd, "workers", "command", 0));
    if (workers > 0) set_worker_count(workers);

    fs::create_directories(out_dir);
    Json echo = rc.echo;
    echo["config_hash"] = rc.hash;
    write_json(echo, fs::path(out_dir) / "config_echo.json");

    const ControlMesh mesh = make_control_mesh(rc.model.control_box, rc.control_points_per_axis);
    RunResult res;
    std::string summary;
    auto verdict_line = [&](const std::string& what, bool ok) {
        summary += (ok ? "[pass] " : "[FAIL] ") + what + "\n";
        if (!ok) res.exit_code = 2;
    };

    if (name == "check-conditions") {
        cfg::reject_unknown(cmd, {"name", "seed", "out", "workers", "n_samples"}, "command");
        const std::size_t n = cfg::get_or<std::size_t>(cmd, "n_samples", "command", 2000);
        const ConditionReport rep = check_conditions(rc.model, rc.grid.space.domain, n, seed);
        verdict_line("drift bound ||b|| <= C", rep.bound_ok == Verdict::Pass);
        verdict_line("ellipticity 1/C <= eig(a) <= C", rep.ellipticity_ok == Verdict::Pass);
        summary += std::string("convexity of {b(f,x)}: ") + to_string(rep.convexity_ok) + "\n";
        write_json(Json{{"drift_bound_max", rep.drift_bound_max},
                        {"eig_min", rep.eig_min},
                        {"eig_max", rep.eig_max},
                        {"bound_ok", to_string(rep.bound_ok)},
                        {"ellipticity_ok", to_string(rep.ellipticity_ok)},
                        {"convexity_ok", to_string(rep.convexity_ok)},
                        {"lipschitz_b", rep.lipschitz_b},
                        {"lipschitz_sigma", rep.lipschitz_sigma},
                        {"config_hash", rc.hash}},
                   fs::path(out_dir) / "conditions.json");
    } else if (name == "solve-pde" || name == "solve-dp") {
        cfg::reject_unknown(cmd,
                            {"name", "seed", "out", "workers", "t", "n_steps", "quad_order",
                             "oracle"},
                            "command");
        const double t = cfg::require<double>(cmd, "t", "command");
        ValueGrid v;
        std::string method;
        if (name == "solve-pde") {
            method = "pde";
            PdeSolver solver(rc.model, mesh, rc.grid);
            v = solver.solve(rc.function, t);
        } else {
            method = "dp";
            const std::size_t q = cfg::get_or<std::size_t>(cmd, "quad_order", "command", 5);
            const std::size_t n_steps = cfg::get_or<std::size_t>(
                cmd, "n_steps", "command", std::max<std::size_t>(1, std::size_t(t * 100)));
            DpSolver solver(rc.model, mesh, rc.grid.space, gauss_hermite(q, rc.model.d));
            v = solver.solve(rc.function, t, n_steps);
        }
        write_value_grid_csv(v, (fs::path(out_dir) / ("values_" + method + ".csv")).string());
        write_json(grid_sidecar(rc, v, method), fs::path(out_dir) / ("values_" + method + ".json"));
        summary += "solved to t = " + std::to_string(t) + " (" + method + ")\n";
        if (cmd.contains("oracle")) {
            cfg::reject_unknown(cmd.at("oracle"), {"name", "tol"}, "command.oracle");
            const std::string oname =
                cfg::require<std::string>(cmd.at("oracle"), "name", "command.oracle");
            const double tol = cfg::require<double>(cmd.at("oracle"), "tol", "command.oracle");
            const double err = oracle_error(rc, v, oname, t);
            summary += "oracle " + oname + " sup-error (middle half) = " + std::to_string(err) +
                       "\n";
            verdict_line("oracle error <= " + std::to_string(tol), err <= tol);
        }
    } else if (name == "semigroup-gap") {
        cfg::reject_unknown(cmd, {"name", "seed", "out", "workers", "s", "t", "method", "tol"},
                            "command");
        const double s = cfg::require<double>(cmd, "s", "command");
        const double t = cfg::require<double>(cmd, "t", "command");
        const double tol = cfg::get_or<double>(cmd, "tol", "command", 1e-2);
        const Method method = parse_method(cmd);
        Semigroup sg(rc.model, mesh, rc.grid);
        const double gap = sg.semigroup_gap(rc.function, s, t, method);
        summary += "semigroup gap = " + std::to_string(gap) + "\n";
        verdict_line("||T_s T_t - T_{s+t}|| <= " + std::to_string(tol), gap <= tol);
        write_json(Json{{"s", s}, {"t", t}, {"gap", gap}, {"tol", tol},
                        {"method", to_string(method)}, {"config_hash", rc.hash}},
                   fs::path(out_dir) / "semigroup_gap.json");
    } else if (name == "axiom-suite") {
        cfg::reject_unknown(cmd,
                            {"name", "seed", "out", "workers", "n_pairs", "t_pool", "method",
                             "tol"},
                            "command");
        const std::size_t n_pairs = cfg::get_or<std::size_t>(cmd, "n_pairs", "command", 50);
        const Vec t_pool = cfg::get_or<Vec>(cmd, "t_pool", "command", Vec{0.1, 0.25});
        const double tol = cfg::get_or<double>(cmd, "tol", "command", 1e-8);
        const Method method = parse_method(cmd);
        Semigroup sg(rc.model, mesh, rc.grid);
        const auto pool = random_function_pool(rc.model.d, 2 * n_pairs, seed);
        const AxiomReport rep = axiom_suite(sg, pool, t_pool, method, seed + 1);
        summary += "pairs: " + std::to_string(rep.n_pairs) + "\n";
        verdict_line("monotonicity violation <= " + std::to_string(tol),
                     rep.worst_monotonicity <= tol);
        verdict_line("subadditivity violation <= " + std::to_string(tol),
                     rep.worst_subadditivity <= tol);
        verdict_line("translation violation <= " + std::to_string(tol),
                     rep.worst_translation <= tol);
        verdict_line("constants preserved", rep.worst_constant <= 1e-10);
        write_json(Json{{"worst_monotonicity", rep.worst_monotonicity},
                        {"worst_subadditivity", rep.worst_subadditivity},
                        {"worst_translation", rep.worst_translation},
                        {"worst_constant", rep.worst_constant},
                        {"n_pairs", rep.n_pairs},
                        {"method", to_string(method)},
                        {"config_hash", rc.hash}},
                   fs::path(out_dir) / "axioms.json");
    } else if (name == "feller-report") {
        cfg::reject_unknown(cmd, {"name", "seed", "out", "workers", "t", "deltas", "method", "tol"},
                            "command");
        const double t = cfg::require<double>(cmd, "t", "command");
        const Vec deltas = cfg::get_or<Vec>(cmd, "deltas", "command", Vec{0.2, 0.1, 0.05});
        const double tol = cfg::get_or<double>(cmd, "tol", "command", 1e-2);
        const Method method = parse_method(cmd);
        Semigroup sg(rc.model, mesh, rc.grid);
        const ModulusReport rep = feller_modulus(sg, rc.function, t, deltas, method);
        verdict_line("omega monotone in delta", rep.monotone);
        if (!rep.oracle.empty()) {
            double worst = 0.0;
            for (std::size_t i = 0; i < rep.deltas.size(); ++i)
                worst = std::max(worst, std::abs(rep.omegas[i] - rep.oracle[i]));
            verdict_line("|omega - oracle| <= " + std::to_string(tol), worst <= tol);
        }
        std::ofstream csv(fs::path(out_dir) / "modulus.csv");
        csv << "delta,omega" << (rep.oracle.empty() ? "" : ",oracle") << "\n";
        for (std::size_t i = 0; i < rep.deltas.size(); ++i) {
            csv << rep.deltas[i] << "," << rep.omegas[i];
            if (!rep.oracle.empty()) csv << "," << rep.oracle[i];
            csv << "\n";
        }
        write_json(Json{{"t", rep.t},
                        {"deltas", rep.deltas},
                        {"omegas", rep.omegas},
                        {"oracle", rep.oracle},
                        {"data_modulus", rep.data_modulus},
                        {"omega_origin", rep.omega_origin},
                        {"monotone", rep.monotone},
                        {"method", to_string(method)},
                        {"config_hash", rc.hash}},
                   fs::path(out_dir) / "modulus.json");
    } else if (name == "mc-lower-bound") {
        cfg::reject_unknown(cmd,
                            {"name", "seed", "out", "workers", "t", "x", "n_paths", "n_steps",
                             "use_feedback", "slack"},
                            "command");
        const double t = cfg::require<double>(cmd, "t", "command");
        const Vec x = cfg::require<Vec>(cmd, "x", "command");
        const std::size_t n_paths = cfg::get_or<std::size_t>(cmd, "n_paths", "command", 10000);
        const std::size_t n_steps = cfg::get_or<std::size_t>(cmd, "n_steps", "command", 100);
        const bool use_feedback = cfg::get_or<bool>(cmd, "use_feedback", "command", true);
        const double slack = cfg::get_or<double>(cmd, "slack", "command", 2e-2);

        DpSolver dp(rc.model, mesh, rc.grid.space, gauss_hermite(5, rc.model.d));
        std::vector<std::vector<std::uint32_t>> tables;
        const std::size_t dp_steps = std::max<std::size_t>(1, std::size_t(t * 100));
        const ValueGrid dp_value = dp.solve(rc.function, t, dp_steps, &tables);

        std::vector<Policy> policies;
        for (std::size_t i = 0; i < mesh.points.size(); ++i) policies.push_back(constant_policy(i));
        if (use_feedback) policies.push_back(feedback_policy(rc.grid.space, tables));
        const LowerBoundResult lb =
            lower_bound(rc.model, mesh, rc.function, x, t, policies, n_paths, n_steps, seed);

        const double dp_at_x = dp_value.interpolate(x);
        summary += "dp value = " + std::to_string(dp_at_x) + ", best MC bound = " +
                   std::to_string(lb.best_value) + " +/- " + std::to_string(lb.best_std_error) +
                   " (policy " + policies[lb.best_policy].name + ")\n";
        verdict_line("lower bound - 3 SE <= dp + slack",
                     lb.best_value - 3.0 * lb.best_std_error <= dp_at_x + slack);
        Json per;
        for (std::size_t i = 0; i < policies.size(); ++i)
            per.push_back(Json{{"policy", policies[i].name},
                               {"mean", lb.per_policy[i].mean},
                               {"se", lb.per_policy[i].std_error}});
        write_json(Json{{"x", x}, {"t", t}, {"n_paths", n_paths}, {"seed", seed},
                        {"dp_value", dp_at_x}, {"best", lb.best_value},
                        {"best_se", lb.best_std_error},
                        {"best_policy", policies[lb.best_policy].name},
                        {"policies", per}, {"config_hash", rc.hash}},
                   fs::path(out_dir) / "mc_lower_bound.json");
    } else if (name == "girsanov-check") {
        cfg::reject_unknown(
            cmd, {"name", "seed", "out", "workers", "t", "x", "n_paths", "n_steps", "policy_index"},
            "command");
        const double t = cfg::require<double>(cmd, "t", "command");
        const Vec x = cfg::get_or<Vec>(cmd, "x", "command", Vec(rc.model.d, 0.0));
        const std::size_t n_paths = cfg::get_or<std::size_t>(cmd, "n_paths", "command", 100000);
        const std::size_t n_steps = cfg::get_or<std::size_t>(cmd, "n_steps", "command", 400);
        const std::size_t pidx = cfg::get_or<std::size_t>(cmd, "policy_index", "command",
                                                          mesh.points.size() - 1);
        const GirsanovReport rep =
            verify_bounds(rc.model, mesh, constant_policy(pidx), x, t, n_paths, n_steps, seed,
                          rc.grid.space.domain);
        verdict_line("|E[Z] - 1| within tolerance", rep.martingale_ok == Verdict::Pass);
        verdict_line("E[Z^2] <= e^{C t}", rep.second_moment_ok == Verdict::Pass);
        verdict_line("(E|1-Z|)^2 <= e^{C t} - 1", rep.l1_bound_ok == Verdict::Pass);
        write_json(Json{{"t", rep.t},
                        {"policy", rep.policy_name},
                        {"C", rep.bound_constant},
                        {"E_Z", rep.z_mean.mean}, {"SE_Z", rep.z_mean.std_error},
                        {"E_Z2", rep.z_sq.mean}, {"SE_Z2", rep.z_sq.std_error},
                        {"E_abs_1mZ", rep.abs_one_minus_z.mean},
                        {"SE_abs_1mZ", rep.abs_one_minus_z.std_error},
                        {"exp_bound", rep.exp_bound},
                        {"martingale_ok", to_string(rep.martingale_ok)},
                        {"second_moment_ok", to_string(rep.second_moment_ok)},
                        {"l1_bound_ok", to_string(rep.l1_bound_ok)},
                        {"seed", seed},
                        {"config_hash", rc.hash}},
                   fs::path(out_dir) / "girsanov.json");
    } else if (name == "residual-study") {
        cfg::reject_unknown(cmd, {"name", "seed", "out", "workers", "t", "min_factor"}, "command");
        const double t = cfg::require<double>(cmd, "t", "command");
        const double min_factor = cfg::get_or<double>(cmd, "min_factor", "command", 1.2);

        auto residual_at = [&](const GridSpec& grid) {
            PdeSolver solver(rc.model, mesh, grid);
            const std::size_t n = std::size_t(std::ceil(t / grid.dt - 1e-9));
            const std::size_t stride = std::max<std::size_t>(1, n / 64);
            std::vector<ValueGrid> slices;
            solver.solve_with_slices(ValueGrid::sample(grid.space, rc.function), t, stride, slices);
            return solver.residual(slices);
        };
        const ResidualReport coarse = residual_at(rc.grid);
        Vec fine_dx = rc.grid.space.dx;
        for (double& h : fine_dx) h /= 2.0;
        const GridSpec fine(SpatialGrid(rc.grid.space.domain, fine_dx), rc.grid.dt / 4.0,
                            rc.grid.t_end);
        const ResidualReport refined = residual_at(fine);
        const double factor = refined.sup > 0.0 ? coarse.sup / refined.sup
                                                : std::numeric_limits<double>::infinity();
        summary += "residual sup: coarse = " + std::to_string(coarse.sup) +
                   ", refined = " + std::to_string(refined.sup) + "\n";
        verdict_line("refinement reduces residual by >= " + std::to_string(min_factor),
                     factor >= min_factor);
        write_json(Json{{"t", t},
                        {"coarse_sup", coarse.sup}, {"coarse_mean", coarse.mean},
                        {"refined_sup", refined.sup}, {"refined_mean", refined.mean},
                        {"factor", factor}, {"config_hash", rc.hash}},
                   fs::path(out_dir) / "residual.json");
    } else {
        throw ConfigError("config: unknown command at command.name: " + name);
    }

    res.summary = summary;
    std::ofstream sum(fs::path(out_dir) / "summary.txt");
    sum << summary;
    return res;
}

}  // namespace nldiff
