#include <catch2/catch_amalgamated.hpp>

#include "models.hpp"
#include "nldiff/dp.hpp"
#include "nldiff/montecarlo.hpp"
#include "oracles.hpp"

using namespace nldiff;

TEST_CASE("counter RNG is deterministic and statistically sane") {
    const CounterRng rng(123);
    CHECK(rng.gauss(4, 7, 0) == CounterRng(123).gauss(4, 7, 0));
    CHECK(rng.gauss(4, 7, 0) != CounterRng(124).gauss(4, 7, 0));

    KahanSum m1, m2;
    const std::size_t n = 200000;
    for (std::size_t i = 0; i < n; ++i) {
        const double z = rng.gauss(i, 0, 0);
        m1.add(z);
        m2.add(z * z);
    }
    CHECK(m1.value() / double(n) == Catch::Approx(0.0).margin(0.01));
    CHECK(m2.value() / double(n) == Catch::Approx(1.0).margin(0.02));
}

TEST_CASE("ensembles are bitwise reproducible and worker-count independent") {
    const ModelSpec m = testmodels::shear_diag();
    const ControlMesh mesh = testmodels::mesh_of(m);
    const Policy pol = constant_policy(2);
    const auto run = [&] { return simulate(m, mesh, pol, {0.3}, 0.25, 200, 40, 99); };
    const PathEnsemble a = run();
    set_worker_count(3);
    const PathEnsemble b = run();
    set_worker_count(1);
    REQUIRE(a.endpoints.size() == b.endpoints.size());
    for (std::size_t p = 0; p < a.endpoints.size(); ++p)
        CHECK(a.endpoints[p][0] == b.endpoints[p][0]);

    const PathEnsemble c = simulate(m, mesh, pol, {0.3}, 0.25, 200, 40, 100);
    CHECK(a.endpoints[0][0] != c.endpoints[0][0]);
}

TEST_CASE("recorded first path satisfies the Euler recursion") {
    const ModelSpec m = testmodels::shear_diag();
    const ControlMesh mesh = testmodels::mesh_of(m);
    SimulateOptions opts;
    opts.record_first_path = true;
    const double t = 0.2;
    const std::size_t n_steps = 10;
    const PathEnsemble ens = simulate(m, mesh, constant_policy(0), {0.5}, t, 3, n_steps, 7, opts);
    REQUIRE(ens.first_path_states.size() == n_steps + 1);
    REQUIRE(ens.first_path_noise.size() == n_steps);
    const double dt = t / double(n_steps);
    for (std::size_t k = 0; k < n_steps; ++k) {
        const Vec& x = ens.first_path_states[k];
        const Vec b = m.drift(mesh.points[ens.first_path_controls[k]], x);
        const double next =
            x[0] + b[0] * dt + m.sigma(x)(0, 0) * ens.first_path_noise[k][0];
        CHECK(ens.first_path_states[k + 1][0] == Catch::Approx(next).margin(1e-15));
    }
    CHECK(ens.first_path_states.back()[0] == ens.endpoints[0][0]);
}

TEST_CASE("constant-coefficient ensembles match the Gaussian law") {
    // X_t = x + t + W_t exactly (no Euler bias), so compare against quadrature
    const ModelSpec m = testmodels::box_drift();
    const ControlMesh mesh = testmodels::mesh_of(m);
    const std::size_t up = mesh.points.size() - 1;
    REQUIRE(mesh.points[up][0] == 1.0);
    const TestFunction psi = tanh_fn(1);
    const double t = 0.5, x0 = -0.3;
    const PathEnsemble ens = simulate(m, mesh, constant_policy(up), {x0}, t, 40000, 20, 2024);
    const McEstimate est = mc_estimate(ens, [&](const Vec& e) { return psi(e); });
    const double exact = oracle::drifted_value([&](double y) { return psi(Vec{y}); }, x0, 1.0, t);
    CHECK(std::abs(est.mean - exact) < 4.0 * est.std_error + 1e-4);
    CHECK(est.std_error < 5e-3);
}

TEST_CASE("piecewise-constant policy switches segments at the given times") {
    const ModelSpec m = testmodels::box_drift();
    const ControlMesh mesh = testmodels::mesh_of(m);
    Policy pol;
    pol.kind = Policy::Kind::PiecewiseConstant;
    pol.switch_times = {0.25};
    pol.segment_indices = {mesh.points.size() - 1, 0};  // drift +1 then -1
    SimulateOptions opts;
    opts.record_first_path = true;
    const PathEnsemble ens = simulate(m, mesh, pol, {0.0}, 0.5, 5000, 50, 11, opts);
    for (std::size_t k = 0; k < 25; ++k) CHECK(ens.first_path_controls[k] == mesh.points.size() - 1);
    for (std::size_t k = 25; k < 50; ++k) CHECK(ens.first_path_controls[k] == 0);
    // drifts cancel: endpoint mean is near the start
    const McEstimate est = mc_estimate(ens, [](const Vec& e) { return e[0]; });
    CHECK(std::abs(est.mean) < 4.0 * est.std_error);
}

TEST_CASE("policy validation rejects malformed inputs") {
    const ModelSpec m = testmodels::box_drift();
    const ControlMesh mesh = testmodels::mesh_of(m);
    CHECK_THROWS_AS(simulate(m, mesh, constant_policy(17), {0.0}, 0.1, 2, 2, 1),
                    std::invalid_argument);
    Policy bad;
    bad.kind = Policy::Kind::PiecewiseConstant;
    bad.switch_times = {0.3, 0.2};
    bad.segment_indices = {0, 1, 2};
    CHECK_THROWS_AS(simulate(m, mesh, bad, {0.0}, 0.5, 2, 2, 1), std::invalid_argument);
    Policy empty_fb;
    empty_fb.kind = Policy::Kind::FeedbackTable;
    CHECK_THROWS_AS(simulate(m, mesh, empty_fb, {0.0}, 0.5, 2, 2, 1), std::invalid_argument);
    CHECK_THROWS_AS(simulate(m, mesh, constant_policy(0), {0.0}, 0.1, 0, 2, 1),
                    std::invalid_argument);
}

TEST_CASE("every policy value stays below the DP value within noise") {
    const ModelSpec m = testmodels::box_drift();
    const ControlMesh mesh = testmodels::mesh_of(m);
    const TestFunction psi = gaussian_bump_fn(1);
    const double t = 0.25;
    const Vec x0{0.8};

    const SpatialGrid space(Box{{-6.0}, {6.0}}, {0.05});
    const DpSolver dp(m, mesh, space, gauss_hermite(5, 1));
    std::vector<std::vector<std::uint32_t>> tables;
    const ValueGrid v = dp.solve(psi, t, 25, &tables);
    const double dp_value = v.interpolate(x0);

    std::vector<Policy> policies;
    for (std::size_t i = 0; i < mesh.points.size(); ++i) policies.push_back(constant_policy(i));
    policies.push_back(feedback_policy(space, tables));
    const LowerBoundResult res = lower_bound(m, mesh, psi, x0, t, policies, 20000, 25, 31);
    REQUIRE(res.per_policy.size() == policies.size());
    for (const McEstimate& est : res.per_policy)
        CHECK(est.mean - 3.0 * est.std_error <= dp_value + 2e-2);
    // the feedback policy should do at least as well as every constant one
    const McEstimate& fb = res.per_policy.back();
    for (std::size_t i = 0; i + 1 < res.per_policy.size(); ++i)
        CHECK(fb.mean >= res.per_policy[i].mean - 3.0 * fb.std_error);
    CHECK(res.best_value >= dp_value - 2e-2);
}
