#pragma once

#include "nldiff/grid.hpp"
#include "nldiff/model.hpp"
#include "nldiff/quadrature.hpp"

namespace nldiff {

/**
 * Backward dynamic programming over piecewise-constant Markov policies:
 *   v_{k+1}(x) = max_f sum_j w_j v_k( x + b(f,x) dt + sigma(x) sqrt(dt) xi_j ),
 * with v_k extended by multilinear interpolation (constant outside the
 * domain). Deterministic; the max is a full enumeration of the control mesh
 * with ties broken toward the lowest index.
 */
class DpSolver {
  public:
    DpSolver(ModelSpec spec, ControlMesh mesh, SpatialGrid grid, QuadratureRule rule)
        : spec_(std::move(spec)), mesh_(std::move(mesh)), grid_(std::move(grid)),
          rule_(std::move(rule)) {
        for (std::size_t ni : grid_.n)
            if (ni < 2) throw std::invalid_argument("DpSolver: need >= 2 nodes per axis");
    }

    const SpatialGrid& grid() const { return grid_; }

    /// Value iteration from nodewise data. When `argmax_tables` is given it
    /// receives one control-index table per step, in forward-time order (the
    /// table applied first along a simulated path comes first).
    ValueGrid solve(const ValueGrid& v0, double t, std::size_t n_steps,
                    std::vector<std::vector<std::uint32_t>>* argmax_tables = nullptr) const {
        if (n_steps < 1) throw std::invalid_argument("solve_dp: n_steps >= 1 required");
        const double dt = t / double(n_steps);
        const double sqdt = std::sqrt(dt);
        ValueGrid v = v0;
        if (argmax_tables) argmax_tables->assign(n_steps, {});
        for (std::size_t k = 0; k < n_steps; ++k) {
            ValueGrid next(grid_, v.time_label + dt);
            std::vector<std::uint32_t>* table = nullptr;
            if (argmax_tables) {
                // step k of the backward recursion is applied last-but-k in
                // forward time
                table = &(*argmax_tables)[n_steps - 1 - k];
                table->assign(grid_.size(), 0);
            }
            parallel_for(grid_.size(), [&](std::size_t idx) {
                const Vec x = grid_.coord(idx);
                const Matrix sig = spec_.sigma(x);
                double best = -std::numeric_limits<double>::infinity();
                std::uint32_t best_f = 0;
                for (std::size_t fi = 0; fi < mesh_.points.size(); ++fi) {
                    const Vec b = spec_.drift(mesh_.points[fi], x);
                    KahanSum acc;
                    for (std::size_t j = 0; j < rule_.nodes.size(); ++j) {
                        Vec y(x.size());
                        for (std::size_t i = 0; i < x.size(); ++i) {
                            double diff = 0.0;
                            for (std::size_t l = 0; l < x.size(); ++l)
                                diff += sig(i, l) * rule_.nodes[j][l];
                            y[i] = x[i] + b[i] * dt + sqdt * diff;
                        }
                        acc.add(rule_.weights[j] * v.interpolate(y));
                    }
                    if (acc.value() > best) {
                        best = acc.value();
                        best_f = std::uint32_t(fi);
                    }
                }
                next.values[idx] = best;
                if (table) (*table)[idx] = best_f;
            });
            v = std::move(next);
        }
        v.time_label = t;
        return v;
    }

    ValueGrid solve(const TestFunction& psi, double t, std::size_t n_steps,
                    std::vector<std::vector<std::uint32_t>>* argmax_tables = nullptr) const {
        return solve(ValueGrid::sample(grid_, psi), t, n_steps, argmax_tables);
    }

    /**
     * Sup-norm gap of the semigroup identity over the middle half:
     * || T_{t}(T_s psi) - T_{s+t} psi ||, with both sides run at the same
     * time-step size.
     */
    double markov_consistency(const TestFunction& psi, double s, double t,
                              double step_size = 0.01) const {
        if (s <= 0.0 || t <= 0.0)
            throw std::invalid_argument("markov_consistency: s, t > 0 required");
        const auto steps = [&](double dur) {
            return std::max<std::size_t>(1, std::size_t(std::llround(dur / step_size)));
        };
        const ValueGrid inner = solve(psi, s, steps(s));
        ValueGrid composed = solve(inner, t, steps(t));
        const ValueGrid direct = solve(psi, s + t, steps(s) + steps(t));
        return composed.sup_diff_middle_half(direct);
    }

  private:
    ModelSpec spec_;
    ControlMesh mesh_;
    SpatialGrid grid_;
    QuadratureRule rule_;
};

}  // namespace nldiff
