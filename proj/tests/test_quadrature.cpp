#include <catch2/catch_amalgamated.hpp>

#include "nldiff/quadrature.hpp"

using namespace nldiff;

TEST_CASE("normalized moments hold to 1e-12") {
    for (std::size_t q : {2, 3, 5, 9, 15}) {
        const QuadratureRule rule = gauss_hermite(q, 1);
        double w = 0.0, m1 = 0.0, m2 = 0.0;
        for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
            w += rule.weights[j];
            m1 += rule.weights[j] * rule.nodes[j][0];
            m2 += rule.weights[j] * rule.nodes[j][0] * rule.nodes[j][0];
        }
        CHECK(w == Catch::Approx(1.0).margin(1e-12));
        CHECK(m1 == Catch::Approx(0.0).margin(1e-12));
        CHECK(m2 == Catch::Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("tensorized rule has identity covariance") {
    const QuadratureRule rule = gauss_hermite(5, 2);
    REQUIRE(rule.nodes.size() == 25);
    double w = 0.0, cov00 = 0.0, cov11 = 0.0, cov01 = 0.0;
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
        w += rule.weights[j];
        cov00 += rule.weights[j] * rule.nodes[j][0] * rule.nodes[j][0];
        cov11 += rule.weights[j] * rule.nodes[j][1] * rule.nodes[j][1];
        cov01 += rule.weights[j] * rule.nodes[j][0] * rule.nodes[j][1];
    }
    CHECK(w == Catch::Approx(1.0).margin(1e-12));
    CHECK(cov00 == Catch::Approx(1.0).margin(1e-12));
    CHECK(cov11 == Catch::Approx(1.0).margin(1e-12));
    CHECK(cov01 == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("order-q rule integrates polynomials up to degree 2q-1 exactly") {
    const QuadratureRule rule = gauss_hermite(5, 1);
    // E[Z^k] for the standard normal: 0, 1, 0, 3, 0, 15, 0, 105 (k = 1..8)
    const double expected[] = {0.0, 1.0, 0.0, 3.0, 0.0, 15.0, 0.0, 105.0, 0.0};
    for (int k = 1; k <= 9; ++k) {
        double m = 0.0;
        for (std::size_t j = 0; j < rule.nodes.size(); ++j)
            m += rule.weights[j] * std::pow(rule.nodes[j][0], k);
        CHECK(m == Catch::Approx(expected[k - 1]).margin(1e-9));
    }
}
