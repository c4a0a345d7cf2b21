#pragma once

#include <functional>

#include "nldiff/grid.hpp"
#include "nldiff/model.hpp"

namespace nldiff {

struct ResidualReport {
    double sup = 0.0;
    double mean = 0.0;
};

/// Smooth space-time test function with analytic derivatives, for the
/// viscosity touching check.
struct SmoothTestFn {
    std::function<double(double, const Vec&)> value;
    std::function<double(double, const Vec&)> time_deriv;
    std::function<Vec(double, const Vec&)> gradient;
    std::function<Matrix(double, const Vec&)> hessian;
};

enum class TouchVerdict { NotTouching, Pass, Fail };

struct TouchResult {
    TouchVerdict verdict = TouchVerdict::NotTouching;
    double lhs = 0.0;  // dt(phi) - G(x, grad phi, hess phi) at the touch point
};

/**
 * Explicit monotone upwind scheme for
 *   d/dt u = sup_f <b(f,x), Du> + (1/2) tr[a(x) D^2 u],  u(0,.) = psi.
 *
 * The drift term uses one-sided differences chosen per control candidate
 * (upwinding before the sup, so every stencil weight stays nonnegative under
 * the CFL bound); the diffusion term uses central second differences, with the
 * corner stencil for off-diagonal entries. Boundary nodes use constant
 * extension normal to the boundary.
 */
class PdeSolver {
  public:
    PdeSolver(ModelSpec spec, ControlMesh mesh, GridSpec grid)
        : spec_(std::move(spec)), mesh_(std::move(mesh)), grid_(std::move(grid)) {
        assert_cfl(spec_, mesh_, grid_);
        check_cross_monotonicity();
    }

    const GridSpec& grid() const { return grid_; }

    /// One explicit Euler step u + dt * G_h(x, u).
    ValueGrid step_explicit(const ValueGrid& u, double dt) const {
        ValueGrid out(u.grid, u.time_label + dt);
        parallel_for(u.values.size(), [&](std::size_t idx) {
            out.values[idx] = u.values[idx] + dt * discrete_G(u, idx);
        });
        return out;
    }

    ValueGrid solve(const ValueGrid& u0, double t) const {
        return solve_impl(u0, t, 0, nullptr);
    }

    ValueGrid solve(const TestFunction& psi, double t) const {
        return solve(ValueGrid::sample(grid_.space, psi), t);
    }

    /// Solve while recording every `stride`-th slice (including first/last).
    ValueGrid solve_with_slices(const ValueGrid& u0, double t, std::size_t stride,
                                std::vector<ValueGrid>& slices) const {
        return solve_impl(u0, t, stride, &slices);
    }

    /// Nodewise |d/dt v - G_h(x, v)| from >= 3 equally spaced slices, centered
    /// time differences; reported over the middle half of the domain.
    ResidualReport residual(const std::vector<ValueGrid>& slices) const {
        if (slices.size() < 3) throw std::invalid_argument("residual: need >= 3 time slices");
        const double dt_s = slices[1].time_label - slices[0].time_label;
        ResidualReport rep;
        KahanSum sum;
        std::size_t count = 0;
        for (std::size_t k = 1; k + 1 < slices.size(); ++k) {
            for (std::size_t idx = 0; idx < slices[k].values.size(); ++idx) {
                if (!grid_.space.in_middle_half(grid_.space.coord(idx))) continue;
                const double time_diff =
                    (slices[k + 1].values[idx] - slices[k - 1].values[idx]) / (2.0 * dt_s);
                const double r = std::abs(time_diff - discrete_G(slices[k], idx));
                rep.sup = std::max(rep.sup, r);
                sum.add(r);
                ++count;
            }
        }
        rep.mean = count ? sum.value() / double(count) : 0.0;
        return rep;
    }

    /**
     * Viscosity subsolution check: phi must dominate u on all recorded slices
     * (within 1e-9) and touch it at the node nearest (t0, x0); the verdict is
     * whether dt(phi) - G(x0, grad phi, hess phi) <= tol there. Set
     * `supersolution` to reverse both inequalities.
     */
    TouchResult check_touching(const std::vector<ValueGrid>& slices, const SmoothTestFn& phi,
                               double t0, const Vec& x0, bool supersolution = false,
                               double touch_tol = 1e-6, double tol = 1e-9) const {
        const double sgn = supersolution ? -1.0 : 1.0;
        // nearest slice and node
        std::size_t k_best = 0;
        for (std::size_t k = 1; k < slices.size(); ++k)
            if (std::abs(slices[k].time_label - t0) < std::abs(slices[k_best].time_label - t0))
                k_best = k;
        std::size_t idx_best = 0;
        double dist_best = std::numeric_limits<double>::infinity();
        for (std::size_t idx = 0; idx < slices[k_best].values.size(); ++idx) {
            Vec x = grid_.space.coord(idx);
            double q = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double dd = x[i] - x0[i];
                q += dd * dd;
            }
            if (q < dist_best) {
                dist_best = q;
                idx_best = idx;
            }
        }
        // domination precondition
        for (const ValueGrid& slice : slices)
            for (std::size_t idx = 0; idx < slice.values.size(); ++idx)
                if (sgn * (slice.values[idx] - phi.value(slice.time_label, grid_.space.coord(idx))) >
                    1e-9)
                    return {};
        // equality at the touch node
        const Vec x_touch = grid_.space.coord(idx_best);
        const double t_touch = slices[k_best].time_label;
        if (std::abs(slices[k_best].values[idx_best] - phi.value(t_touch, x_touch)) > touch_tol)
            return {};

        TouchResult res;
        res.lhs = phi.time_deriv(t_touch, x_touch) -
                  eval_G(spec_, mesh_, x_touch, phi.gradient(t_touch, x_touch),
                         phi.hessian(t_touch, x_touch));
        res.verdict = (sgn * res.lhs <= tol) ? TouchVerdict::Pass : TouchVerdict::Fail;
        return res;
    }

    /// The discretized Hamiltonian G_h at one node (sup over the control mesh
    /// taken after upwinding).
    double discrete_G(const ValueGrid& u, std::size_t idx) const {
        const SpatialGrid& g = u.grid;
        const std::size_t d = g.dim();
        const std::vector<std::size_t> mi = g.unflatten(idx);
        const Vec x = g.coord(mi);
        const double u0 = u.values[idx];

        auto neighbor = [&](std::size_t axis, int off, std::size_t axis2 = std::size_t(-1),
                            int off2 = 0) {
            std::vector<std::size_t> mj = mi;
            auto shift = [&](std::size_t ax, int o) {
                const long v = long(mj[ax]) + o;
                // constant extension: clamp to the boundary node
                mj[ax] = std::size_t(std::clamp<long>(v, 0, long(g.n[ax]) - 1));
            };
            shift(axis, off);
            if (axis2 != std::size_t(-1)) shift(axis2, off2);
            return u.values[g.flatten(mj)];
        };

        const Matrix a = spec_.diffusion(x);
        double diff_term = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            diff_term += 0.5 * a(i, i) * (neighbor(i, +1) - 2.0 * u0 + neighbor(i, -1)) /
                         (g.dx[i] * g.dx[i]);
        }
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = i + 1; j < d; ++j) {
                const double aij = a(i, j);
                if (aij == 0.0) continue;
                const double h = 2.0 * g.dx[i] * g.dx[j];
                const double axial = neighbor(i, +1) + neighbor(i, -1) + neighbor(j, +1) +
                                     neighbor(j, -1);
                if (aij > 0.0)
                    diff_term += aij *
                                 (2.0 * u0 + neighbor(i, +1, j, +1) + neighbor(i, -1, j, -1) -
                                  axial) /
                                 h;
                else
                    diff_term += -aij *
                                 (axial - 2.0 * u0 - neighbor(i, +1, j, -1) -
                                  neighbor(i, -1, j, +1)) /
                                 h;
            }
        }

        double best = -std::numeric_limits<double>::infinity();
        for (const Vec& f : mesh_.points) {
            const Vec b = spec_.drift(f, x);
            double drift_term = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                if (b[i] >= 0.0)
                    drift_term += b[i] * (neighbor(i, +1) - u0) / g.dx[i];
                else
                    drift_term += b[i] * (u0 - neighbor(i, -1)) / g.dx[i];
            }
            best = std::max(best, drift_term);
        }
        return best + diff_term;
    }

  private:
    ValueGrid solve_impl(const ValueGrid& u0, double t, std::size_t stride,
                         std::vector<ValueGrid>* slices) const {
        if (t < 0.0 || t > grid_.t_end + 1e-12)
            throw std::invalid_argument("solve: t must lie in [0, t_end]");
        if (t == 0.0) {
            if (slices) slices->push_back(u0);
            return u0;
        }
        // dt adjusted downward so it divides t exactly
        const std::size_t n = std::max<std::size_t>(1, std::size_t(std::ceil(t / grid_.dt - 1e-9)));
        const double dt = t / double(n);
        const double bound = u0.sup_abs();
        ValueGrid u = u0;
        u.time_label = 0.0;
        if (slices) slices->push_back(u);
        for (std::size_t k = 0; k < n; ++k) {
            u = step_explicit(u, dt);
            // recorded slices stay evenly spaced at stride * dt
            if (slices && stride && (k + 1) % stride == 0) slices->push_back(u);
        }
        if (u.sup_abs() > bound + 1e-9)
            throw std::runtime_error("maximum principle violated after solve");
        u.time_label = t;
        return u;
    }

    void check_cross_monotonicity() const {
        const std::size_t d = grid_.space.dim();
        if (d < 2) return;
        for (std::size_t idx = 0; idx < grid_.space.size(); ++idx) {
            const Matrix a = spec_.diffusion(grid_.space.coord(idx));
            for (std::size_t i = 0; i < d; ++i) {
                double cross = 0.0;
                for (std::size_t j = 0; j < d; ++j)
                    if (j != i) cross += std::abs(a(i, j)) * grid_.space.dx[i] / grid_.space.dx[j];
                if (a(i, i) < cross - 1e-12)
                    throw std::runtime_error(
                        "diffusion matrix not diagonally dominant at a grid node; "
                        "monotone cross stencil unavailable");
            }
        }
    }

    ModelSpec spec_;
    ControlMesh mesh_;
    GridSpec grid_;
};

/// phi(t,x) = c0 + ct (t-t0) + ctt (t-t0)^2 + cq ||x-x0||^2 + c4 ||x-x0||^4
inline SmoothTestFn poly_test_fn(double t0, Vec x0, double c0, double ct, double ctt, double cq,
                                 double c4) {
    SmoothTestFn f;
    auto r2 = [x0](const Vec& x) {
        double q = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double dd = x[i] - x0[i];
            q += dd * dd;
        }
        return q;
    };
    f.value = [=](double t, const Vec& x) {
        const double q = r2(x), dt = t - t0;
        return c0 + ct * dt + ctt * dt * dt + cq * q + c4 * q * q;
    };
    f.time_deriv = [=](double t, const Vec&) { return ct + 2.0 * ctt * (t - t0); };
    f.gradient = [=](double, const Vec& x) {
        const double q = r2(x);
        Vec g(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            g[i] = (2.0 * cq + 4.0 * c4 * q) * (x[i] - x0[i]);
        return g;
    };
    f.hessian = [=](double, const Vec& x) {
        const double q = r2(x);
        Matrix h(x.size(), x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            for (std::size_t j = 0; j < x.size(); ++j) {
                if (i == j) h(i, j) = 2.0 * cq + 4.0 * c4 * q;
                h(i, j) += 8.0 * c4 * (x[i] - x0[i]) * (x[j] - x0[j]);
            }
        }
        return h;
    };
    return f;
}

/**
 * Grid-backed touching function: the solution interpolant plus eps ||x-x0||^4,
 * which touches u at x0 from above by construction. Derivatives come from
 * finite differences of the slices; the quartic contributes nothing to the
 * value, gradient, or Hessian at x0 itself.
 */
inline SmoothTestFn grid_touch_fn(const std::vector<ValueGrid>& slices, Vec x0, double eps) {
    SmoothTestFn f;
    auto interp_t = [&slices](double t, const Vec& x) {
        std::size_t k = 0;
        for (std::size_t i = 1; i < slices.size(); ++i)
            if (std::abs(slices[i].time_label - t) < std::abs(slices[k].time_label - t)) k = i;
        return slices[k].interpolate(x);
    };
    f.value = [&slices, interp_t, x0, eps](double t, const Vec& x) {
        double q = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double dd = x[i] - x0[i];
            q += dd * dd;
        }
        return interp_t(t, x) + eps * q * q;
    };
    f.time_deriv = [&slices, interp_t](double t, const Vec& x) {
        const double dts = slices[1].time_label - slices[0].time_label;
        return (interp_t(t + dts, x) - interp_t(t - dts, x)) / (2.0 * dts);
    };
    f.gradient = [&slices, interp_t](double t, const Vec& x) {
        Vec g(x.size());
        const SpatialGrid& sg = slices[0].grid;
        for (std::size_t i = 0; i < x.size(); ++i) {
            Vec xp = x, xm = x;
            xp[i] += sg.dx[i];
            xm[i] -= sg.dx[i];
            g[i] = (interp_t(t, xp) - interp_t(t, xm)) / (2.0 * sg.dx[i]);
        }
        return g;
    };
    f.hessian = [&slices, interp_t](double t, const Vec& x) {
        const SpatialGrid& sg = slices[0].grid;
        Matrix h(x.size(), x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            Vec xp = x, xm = x;
            xp[i] += sg.dx[i];
            xm[i] -= sg.dx[i];
            h(i, i) = (interp_t(t, xp) - 2.0 * interp_t(t, x) + interp_t(t, xm)) /
                      (sg.dx[i] * sg.dx[i]);
        }
        return h;
    };
    return f;
}

}  // namespace nldiff
