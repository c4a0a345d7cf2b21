// Acceptance gate: one line per criterion, nonzero exit if any fails.
#include <chrono>
#include <cstdio>

#include "models.hpp"
#include "nldiff/nldiff.hpp"
#include "oracles.hpp"

using namespace nldiff;

namespace {

int failures = 0;

void report(int id, const char* what, bool ok, double measured, double tol) {
    std::printf("[%s] criterion %d: %-52s measured %.3e tol %.3e\n", ok ? "PASS" : "FAIL", id, what,
                measured, tol);
    if (!ok) ++failures;
}

double sup_error_middle(const ValueGrid& v, const std::function<double(double)>& ref) {
    double worst = 0.0;
    for (std::size_t i = 0; i < v.values.size(); ++i) {
        const Vec x = v.grid.coord(i);
        if (!v.grid.in_middle_half(x)) continue;
        worst = std::max(worst, std::abs(v.values[i] - ref(x[0])));
    }
    return worst;
}

GridSpec oracle_grid(const ModelSpec& m, const ControlMesh& mesh, double dx) {
    const SpatialGrid space(Box{Vec(m.d, -8.0), Vec(m.d, 8.0)}, Vec(m.d, dx));
    return GridSpec(space, cfl_limit(m, mesh, space), 1.0);
}

// criteria 2, 3, 9 share these solves
struct OracleErrors {
    double pde = 0.0, dp = 0.0;
};

OracleErrors oracle_errors(const ModelSpec& m, const TestFunction& psi,
                           const std::function<double(double)>& ref, double dx, double t,
                           std::size_t dp_steps) {
    const ControlMesh mesh = testmodels::mesh_of(m);
    const GridSpec grid = oracle_grid(m, mesh, dx);
    OracleErrors err;
    err.pde = sup_error_middle(PdeSolver(m, mesh, grid).solve(psi, t), ref);
    err.dp = sup_error_middle(
        DpSolver(m, mesh, grid.space, gauss_hermite(5, 1)).solve(psi, t, dp_steps), ref);
    return err;
}

}  // namespace

int main() {
    const auto t_start = std::chrono::steady_clock::now();

    // 1. constant preservation at t in {0.1, 0.5, 1.0}
    {
        const ModelSpec m = testmodels::shear_diag();
        const ControlMesh mesh = testmodels::mesh_of(m);
        const SpatialGrid space(Box{{-6.0}, {6.0}}, {0.05});
        const GridSpec grid(space, 0.95 * cfl_limit(m, mesh, space), 1.0);
        const PdeSolver pde(m, mesh, grid);
        const DpSolver dp(m, mesh, space, gauss_hermite(5, 1));
        double worst_pde = 0.0, worst_dp = 0.0;
        for (double t : {0.1, 0.5, 1.0}) {
            const ValueGrid vp = pde.solve(constant_fn(3.0), t);
            const ValueGrid vd = dp.solve(constant_fn(3.0), t, std::size_t(t * 100));
            for (double v : vp.values) worst_pde = std::max(worst_pde, std::abs(v - 3.0));
            for (double v : vd.values) worst_dp = std::max(worst_dp, std::abs(v - 3.0));
        }
        report(1, "constants preserved (PDE)", worst_pde <= 1e-10, worst_pde, 1e-10);
        report(1, "constants preserved (DP)", worst_dp <= 1e-12, worst_dp, 1e-12);
    }

    const TestFunction bump = gaussian_bump_fn(1);
    const TestFunction tanh1 = tanh_fn(1);
    const auto heat_ref = [&](double x) {
        return oracle::heat_value([&](double y) { return bump(Vec{y}); }, x, 0.5);
    };
    const auto drift_ref = [&](double x) {
        return oracle::drifted_value([&](double y) { return tanh1(Vec{y}); }, x, 1.0, 0.5);
    };

    // 2. heat oracle at dx = 0.02 (also feeds criterion 9)
    const OracleErrors heat_fine = oracle_errors(testmodels::heat(), bump, heat_ref, 0.02, 0.5, 50);
    report(2, "heat oracle sup error (PDE)", heat_fine.pde <= 5e-3, heat_fine.pde, 5e-3);
    report(2, "heat oracle sup error (DP)", heat_fine.dp <= 5e-3, heat_fine.dp, 5e-3);

    // 3. drift-uncertainty oracle
    const OracleErrors drift_fine =
        oracle_errors(testmodels::box_drift(), tanh1, drift_ref, 0.02, 0.5, 50);
    report(3, "drift-tanh oracle sup error (PDE)", drift_fine.pde <= 5e-3, drift_fine.pde, 5e-3);
    report(3, "drift-tanh oracle sup error (DP)", drift_fine.dp <= 5e-3, drift_fine.dp, 5e-3);

    // 4. semigroup identity, three models, both methods
    {
        double worst = 0.0;
        for (const ModelSpec& m :
             {testmodels::heat(), testmodels::box_drift(), testmodels::shear_diag()}) {
            const ControlMesh mesh = testmodels::mesh_of(m);
            const SpatialGrid space(Box{{-6.0}, {6.0}}, {0.05});
            const GridSpec grid(space, 0.95 * cfl_limit(m, mesh, space), 1.0);
            const Semigroup sg(m, mesh, grid);
            for (Method method : {Method::Pde, Method::Dp})
                worst = std::max(worst, sg.semigroup_gap(bump, 0.2, 0.3, method));
        }
        report(4, "semigroup gap (s,t)=(0.2,0.3), 3 models", worst <= 1e-2, worst, 1e-2);
    }

    // 5. Feller smoothing against the CDF modulus oracle
    {
        const ModelSpec m = testmodels::box_drift();
        const ControlMesh mesh = testmodels::mesh_of(m);
        const GridSpec grid = oracle_grid(m, mesh, 0.02);
        const Semigroup sg(m, mesh, grid);
        const ModulusReport rep =
            feller_modulus(sg, halfspace_fn(1), 0.25, {0.05, 0.1, 0.2}, Method::Pde);
        double worst = 0.0;
        for (std::size_t i = 0; i < rep.deltas.size(); ++i)
            worst = std::max(worst, std::abs(rep.omegas[i] - rep.oracle[i]));
        report(5, "modulus matches CDF oracle", worst <= 1e-2, worst, 1e-2);
        report(5, "smoothing: omega(0.2) < 0.5, data modulus 1",
               rep.omegas[0] < 0.5 && rep.data_modulus == 1.0, rep.omegas[0], 0.5);
    }

    // 6. Girsanov density bounds, b = 1, a = 1
    {
        const ModelSpec m = testmodels::box_drift();
        const ControlMesh mesh = testmodels::mesh_of(m);
        bool all_ok = true;
        double worst_gap = 0.0;
        for (double t : {0.01, 0.05, 0.1, 0.25}) {
            const GirsanovReport rep =
                verify_bounds(m, mesh, constant_policy(mesh.points.size() - 1), {0.0}, t, 100000,
                              400, 2718, Box{{-4.0}, {4.0}});
            all_ok = all_ok && rep.martingale_ok == Verdict::Pass &&
                     rep.second_moment_ok == Verdict::Pass && rep.l1_bound_ok == Verdict::Pass;
            worst_gap = std::max(worst_gap, std::abs(rep.z_mean.mean - 1.0));
        }
        report(6, "Girsanov moment bounds, 4 horizons", all_ok, worst_gap, 1e-2);
    }

    // 7. MC sandwich at five probe points
    {
        bool all_ok = true, fb_ok = true;
        double worst_excess = -1.0;
        const Vec probes{-2.0, -1.0, 0.0, 0.7, 2.0};
        for (const ModelSpec& m :
             {testmodels::heat(), testmodels::box_drift(), testmodels::shear_diag()}) {
            const ControlMesh mesh = testmodels::mesh_of(m);
            const SpatialGrid space(Box{{-6.0}, {6.0}}, {0.05});
            const DpSolver dp(m, mesh, space, gauss_hermite(5, 1));
            for (const TestFunction& psi : {tanh1, bump, halfspace_fn(1)}) {
                const double t = 0.25;
                const std::size_t n_steps = 25;
                std::vector<std::vector<std::uint32_t>> tables;
                const ValueGrid dpv = dp.solve(psi, t, n_steps, &tables);
                std::vector<Policy> policies;
                for (std::size_t i = 0; i < mesh.points.size(); ++i)
                    policies.push_back(constant_policy(i));
                policies.push_back(feedback_policy(space, tables));
                for (double x0 : probes) {
                    const LowerBoundResult lb =
                        lower_bound(m, mesh, psi, {x0}, t, policies, 4000, n_steps, 97);
                    const double dp_at = dpv.interpolate({x0});
                    const double excess = lb.best_value - 3.0 * lb.best_std_error - dp_at;
                    worst_excess = std::max(worst_excess, excess);
                    all_ok = all_ok && excess <= 2e-2;
                    const McEstimate& fb = lb.per_policy.back();
                    fb_ok = fb_ok && dp_at - fb.mean <= 2e-2 + 3.0 * fb.std_error;
                }
            }
        }
        report(7, "MC lower bound <= DP + slack (45 cases)", all_ok, worst_excess, 2e-2);
        report(7, "feedback policy closes the gap", fb_ok, fb_ok ? 0.0 : 1.0, 2e-2);
    }

    // 8. axiom suite over 50 seeded pairs (DP)
    {
        const ModelSpec m = testmodels::box_drift();
        const ControlMesh mesh = testmodels::mesh_of(m);
        const SpatialGrid space(Box{{-4.0}, {4.0}}, {0.1});
        const GridSpec grid(space, 0.95 * cfl_limit(m, mesh, space), 1.0);
        const Semigroup sg(m, mesh, grid);
        const AxiomReport rep =
            axiom_suite(sg, random_function_pool(1, 100, 424242), {0.1, 0.25}, Method::Dp, 7);
        const double worst = std::max({rep.worst_monotonicity, rep.worst_subadditivity,
                                       rep.worst_translation, rep.worst_constant});
        report(8, "axioms over 50 random pairs (DP)", rep.n_pairs == 50 && worst <= 1e-8, worst,
               1e-8);
    }

    // 9. refinement: dx halved (dt scales with the CFL bound) improves 2-3
    {
        const OracleErrors heat_coarse =
            oracle_errors(testmodels::heat(), bump, heat_ref, 0.04, 0.5, 50);
        const OracleErrors drift_coarse =
            oracle_errors(testmodels::box_drift(), tanh1, drift_ref, 0.04, 0.5, 50);
        const double f1 = heat_coarse.pde / heat_fine.pde;
        const double f2 = heat_coarse.dp / heat_fine.dp;
        const double f3 = drift_coarse.pde / drift_fine.pde;
        const double f4 = drift_coarse.dp / drift_fine.dp;
        const double worst = std::min({f1, f2, f3, f4});
        report(9, "refinement factor >= 1.5 (both oracles, both methods)", worst >= 1.5, worst,
               1.5);
    }

    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start);
    std::printf("%d criterion check(s) failed; total runtime %.1f s\n", failures, elapsed.count());
    return failures == 0 ? 0 : 1;
}
