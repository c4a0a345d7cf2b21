#pragma once

#include "nldiff/common.hpp"

namespace nldiff {

/**
 * Tensorized Gauss-Hermite rule normalized against the standard Gaussian:
 * sum w_j = 1, sum w_j xi_j = 0, sum w_j xi_j xi_j^T = I, each to 1e-12.
 */
struct QuadratureRule {
    std::vector<Vec> nodes;
    Vec weights;
    std::size_t order_per_axis = 0;
};

namespace detail {

/// Physicists' Gauss-Hermite nodes/weights by Newton iteration on H_q.
inline void gauss_hermite_physicists(std::size_t q, Vec& x, Vec& w) {
    x.assign(q, 0.0);
    w.assign(q, 0.0);
    const double pim4 = 0.7511255444649425;  // pi^{-1/4}
    const std::size_t m = (q + 1) / 2;
    double z = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        if (i == 0)
            z = std::sqrt(2.0 * q + 1.0) - 1.85575 * std::pow(2.0 * q + 1.0, -0.16667);
        else if (i == 1)
            z -= 1.14 * std::pow(double(q), 0.426) / z;
        else if (i == 2)
            z = 1.86 * z - 0.86 * x[0];
        else if (i == 3)
            z = 1.91 * z - 0.91 * x[1];
        else
            z = 2.0 * z - x[i - 2];
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = pim4, p2 = 0.0;
            for (std::size_t j = 0; j < q; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / double(j + 1)) * p2 -
                     std::sqrt(double(j) / double(j + 1)) * p3;
            }
            pp = std::sqrt(2.0 * q) * p2;
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) < 1e-15) break;
        }
        x[i] = z;
        x[q - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[q - 1 - i] = w[i];
    }
    if (q % 2 == 1) x[q / 2] = 0.0;
}

}  // namespace detail

inline QuadratureRule gauss_hermite(std::size_t order, std::size_t d = 1) {
    if (order < 1) throw std::invalid_argument("gauss_hermite: order >= 1 required");
    Vec x1, w1;
    detail::gauss_hermite_physicists(order, x1, w1);
    // rescale to the standard normal: xi = sqrt(2) x, weights normalized to 1
    double wsum = 0.0;
    for (double w : w1) wsum += w;
    for (std::size_t i = 0; i < order; ++i) {
        x1[i] *= std::sqrt(2.0);
        w1[i] /= wsum;
    }

    QuadratureRule rule;
    rule.order_per_axis = order;
    std::size_t total = 1;
    for (std::size_t i = 0; i < d; ++i) total *= order;
    rule.nodes.reserve(total);
    rule.weights.reserve(total);
    for (std::size_t idx = 0; idx < total; ++idx) {
        Vec node(d);
        double w = 1.0;
        std::size_t rem = idx;
        for (std::size_t i = 0; i < d; ++i) {
            const std::size_t k = rem % order;
            rem /= order;
            node[i] = x1[k];
            w *= w1[k];
        }
        rule.nodes.push_back(std::move(node));
        rule.weights.push_back(w);
    }
    return rule;
}

}  // namespace nldiff
