#include <catch2/catch_amalgamated.hpp>

#include "models.hpp"
#include "nldiff/model.hpp"

using namespace nldiff;

TEST_CASE("box-drift evaluates to the control itself") {
    const ModelSpec m = testmodels::box_drift();
    const Vec x{0.7};
    CHECK(m.drift({0.3}, x)[0] == 0.3);
    CHECK(m.drift({0.0}, x)[0] == 0.0);
    CHECK_THROWS_AS(m.drift({1.5}, x), std::domain_error);
}

TEST_CASE("box-drift in two dimensions") {
    ModelSpec m;
    m.d = 2;
    m.control_box = Box{{-1.0, -1.0}, {1.0, 1.0}};
    m.const_matrix = Matrix::identity(2);
    const Vec b = m.drift({0.3, -0.2}, {5.0, -5.0});
    CHECK(b[0] == 0.3);
    CHECK(b[1] == -0.2);
}

TEST_CASE("shear drift vanishes at the origin") {
    const ModelSpec m = testmodels::shear_diag();
    CHECK(m.drift({1.0}, {0.0})[0] == 0.0);
    CHECK(m.drift({1.0}, {100.0})[0] == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("sigma factors the diffusion matrix") {
    // 2-d SPD with off-diagonal entry
    ModelSpec m;
    m.d = 2;
    m.control_box = Box{{0.0, 0.0}, {0.0, 0.0}};
    m.const_matrix = Matrix(2, 2);
    m.const_matrix(0, 0) = 1.5;
    m.const_matrix(0, 1) = m.const_matrix(1, 0) = 0.4;
    m.const_matrix(1, 1) = 1.0;
    const Matrix s = m.sigma({0.0, 0.0});
    const Matrix prod = matmul(s, transpose(s));
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(prod.a[i] == Catch::Approx(m.const_matrix.a[i]).margin(1e-12));

    const ModelSpec diag = testmodels::shear_diag();
    const Vec x{0.8};
    const Matrix sd = diag.sigma(x);
    CHECK(sd(0, 0) * sd(0, 0) == Catch::Approx(diag.diffusion(x)(0, 0)).margin(1e-12));
}

TEST_CASE("control mesh hits all box vertices") {
    const ControlMesh mesh = make_control_mesh(Box{{-1.0, 0.5}, {1.0, 2.0}}, 3);
    REQUIRE(mesh.points.size() == 9);
    int vertices = 0;
    for (const Vec& f : mesh.points) {
        const bool v0 = f[0] == -1.0 || f[0] == 1.0;
        const bool v1 = f[1] == 0.5 || f[1] == 2.0;
        if (v0 && v1) ++vertices;
    }
    CHECK(vertices == 4);
}

TEST_CASE("degenerate control box collapses to one point") {
    const ControlMesh mesh = make_control_mesh(Box{{0.0}, {0.0}}, 5);
    REQUIRE(mesh.points.size() == 1);
    CHECK(mesh.points[0][0] == 0.0);
}

TEST_CASE("eval_G trivial cases") {
    const ModelSpec m = testmodels::box_drift();
    const ControlMesh mesh = testmodels::mesh_of(m);
    const Vec x{0.0};
    CHECK(eval_G(m, mesh, x, {0.0}, Matrix(1, 1)) == 0.0);

    // sup over the box of <f, p> is the l1 norm of p
    ModelSpec m2;
    m2.d = 2;
    m2.control_box = Box{{-1.0, -1.0}, {1.0, 1.0}};
    m2.const_matrix = Matrix::identity(2);
    const ControlMesh mesh2 = testmodels::mesh_of(m2);
    CHECK(eval_G(m2, mesh2, {0.0, 0.0}, {2.0, -3.0}, Matrix(2, 2)) == Catch::Approx(5.0));

    // a = 2I, p = 0, M = I -> half-trace = d
    m2.const_matrix(0, 0) = m2.const_matrix(1, 1) = 2.0;
    CHECK(eval_G(m2, mesh2, {0.0, 0.0}, {0.0, 0.0}, Matrix::identity(2)) == Catch::Approx(2.0));
}

TEST_CASE("eval_G is positively homogeneous and convex in p") {
    const ModelSpec m = testmodels::box_drift();
    const ControlMesh mesh = testmodels::mesh_of(m);
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int rep = 0; rep < 200; ++rep) {
        const Vec x{u(gen)};
        const Vec p1{u(gen)}, p2{u(gen)};
        Matrix mm(1, 1);
        mm(0, 0) = u(gen);
        const double lambda = std::abs(u(gen));
        Matrix mml = mm;
        mml(0, 0) *= lambda;
        CHECK(eval_G(m, mesh, x, {lambda * p1[0]}, mml) ==
              Catch::Approx(lambda * eval_G(m, mesh, x, p1, mm)).margin(1e-12));

        const double alpha = 0.5 * (u(gen) / 2.0 + 1.0);  // in [0,1]
        const Vec pm{alpha * p1[0] + (1.0 - alpha) * p2[0]};
        CHECK(eval_G(m, mesh, x, pm, mm) <= alpha * eval_G(m, mesh, x, p1, mm) +
                                                (1.0 - alpha) * eval_G(m, mesh, x, p2, mm) +
                                                1e-12);
    }
}

TEST_CASE("refining the control mesh never decreases eval_G") {
    const ModelSpec m = testmodels::shear_diag();
    const ControlMesh coarse = testmodels::mesh_of(m, 3);
    const ControlMesh fine = testmodels::mesh_of(m, 5);  // superset of the 3-point mesh
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int rep = 0; rep < 100; ++rep) {
        const Vec x{u(gen)}, p{u(gen)};
        Matrix mm(1, 1);
        mm(0, 0) = u(gen);
        CHECK(eval_G(m, fine, x, p, mm) >= eval_G(m, coarse, x, p, mm) - 1e-14);
    }
}

TEST_CASE("argmax tie-break picks the lowest mesh index") {
    const ModelSpec m = testmodels::box_drift();
    const ControlMesh mesh = testmodels::mesh_of(m);
    std::size_t arg = 99;
    eval_G(m, mesh, {0.0}, {0.0}, Matrix(1, 1), &arg);  // all controls tie at 0
    CHECK(arg == 0);
}

TEST_CASE("check_conditions validates the standard models") {
    const ModelSpec m = testmodels::box_drift();
    const Box domain{{-3.0}, {3.0}};
    const ConditionReport rep = check_conditions(m, domain, 2000, 42);
    CHECK(rep.bound_ok == Verdict::Pass);
    CHECK(rep.ellipticity_ok == Verdict::Pass);
    CHECK(rep.convexity_ok == Verdict::Pass);
}

TEST_CASE("check_conditions flags an unbounded diffusion") {
    // a(x) = 1 + x^2 on [-3, 3]: max eigenvalue 10 > C = 2
    ModelSpec m;
    m.d = 1;
    m.bound_C = 2.0;
    m.control_box = Box{{-1.0}, {1.0}};
    m.diffusion_family = DiffusionFamily::DiagDiffusion;
    m.diag_exprs = {DiagExpr::OnePlusSquare};
    m.diag_params = {1.0};
    const ConditionReport rep = check_conditions(m, Box{{-3.0}, {3.0}}, 5000, 3);
    CHECK(rep.ellipticity_ok == Verdict::Fail);
    CHECK(rep.eig_max > 5.0);
}

TEST_CASE("empirical Lipschitz constant of a shear drift matches the derivative bound") {
    // b(f, x) = tanh(x) f with |f| <= 1: Lipschitz constant sup |f| = 1
    const ModelSpec m = testmodels::shear_diag();
    const ConditionReport rep = check_conditions(m, Box{{-3.0}, {3.0}}, 20000, 5);
    CHECK(rep.lipschitz_b == Catch::Approx(1.0).epsilon(0.05));
}
