#pragma once

#include <cstdio>
#include <fstream>
#include <numeric>

#include "nldiff/common.hpp"
#include "nldiff/functions.hpp"
#include "nldiff/model.hpp"

namespace nldiff {

/// Rectangular spatial lattice over a box. Node counts are derived from the
/// requested spacing; the stored dx hits the box endpoints exactly.
struct SpatialGrid {
    Box domain;
    Vec dx;
    std::vector<std::size_t> n;  // nodes per axis

    SpatialGrid() = default;
    SpatialGrid(Box box, const Vec& spacing) : domain(std::move(box)) {
        const std::size_t d = domain.dim();
        dx.resize(d);
        n.resize(d);
        for (std::size_t i = 0; i < d; ++i) {
            if (spacing[i] <= 0.0) throw std::invalid_argument("SpatialGrid: dx must be positive");
            const double len = domain.hi[i] - domain.lo[i];
            if (len <= 0.0)
                throw std::invalid_argument("SpatialGrid: domain must have positive extent");
            n[i] = std::max<std::size_t>(2, std::size_t(std::llround(len / spacing[i])) + 1);
            dx[i] = len / double(n[i] - 1);
        }
    }

    std::size_t dim() const { return domain.dim(); }

    std::size_t size() const {
        return std::accumulate(n.begin(), n.end(), std::size_t{1}, std::multiplies<>());
    }

    std::vector<std::size_t> unflatten(std::size_t idx) const {
        std::vector<std::size_t> mi(dim());
        for (std::size_t i = 0; i < dim(); ++i) {
            mi[i] = idx % n[i];
            idx /= n[i];
        }
        return mi;
    }

    std::size_t flatten(const std::vector<std::size_t>& mi) const {
        std::size_t idx = 0, stride = 1;
        for (std::size_t i = 0; i < dim(); ++i) {
            idx += mi[i] * stride;
            stride *= n[i];
        }
        return idx;
    }

    Vec coord(const std::vector<std::size_t>& mi) const {
        Vec x(dim());
        for (std::size_t i = 0; i < dim(); ++i) x[i] = domain.lo[i] + double(mi[i]) * dx[i];
        return x;
    }

    Vec coord(std::size_t idx) const { return coord(unflatten(idx)); }

    /// The central reporting region: per-axis middle half of the domain.
    bool in_middle_half(const Vec& x) const {
        for (std::size_t i = 0; i < dim(); ++i) {
            const double q = (domain.hi[i] - domain.lo[i]) / 4.0;
            if (x[i] < domain.lo[i] + q - 1e-12 || x[i] > domain.hi[i] - q + 1e-12) return false;
        }
        return true;
    }
};

/// Time discretization on top of a spatial grid.
struct GridSpec {
    SpatialGrid space;
    double dt = 0.0;
    double t_end = 0.0;

    GridSpec() = default;
    GridSpec(SpatialGrid s, double dt_, double t_end_) : space(std::move(s)), dt(dt_), t_end(t_end_) {
        if (dt <= 0.0 || t_end <= 0.0) throw std::invalid_argument("GridSpec: dt, t_end > 0 required");
    }
};

/**
 * Largest explicit time step keeping the upwind scheme monotone:
 *   dt <= 1 / sum_i ( a_max_ii / dx_i^2 + b_max_i / dx_i ),
 * with the coefficient bounds taken over the grid nodes and control mesh.
 */
inline double cfl_limit(const ModelSpec& spec, const ControlMesh& mesh, const SpatialGrid& grid) {
    const std::size_t d = grid.dim();
    Vec a_max(d, 0.0), b_max(d, 0.0);
    for (std::size_t idx = 0; idx < grid.size(); ++idx) {
        const Vec x = grid.coord(idx);
        const Matrix a = spec.diffusion(x);
        for (std::size_t i = 0; i < d; ++i) a_max[i] = std::max(a_max[i], a(i, i));
        for (const Vec& f : mesh.points) {
            const Vec b = spec.drift(f, x);
            for (std::size_t i = 0; i < d; ++i) b_max[i] = std::max(b_max[i], std::abs(b[i]));
        }
    }
    double denom = 0.0;
    for (std::size_t i = 0; i < d; ++i)
        denom += a_max[i] / (grid.dx[i] * grid.dx[i]) + b_max[i] / grid.dx[i];
    return denom > 0.0 ? 1.0 / denom : std::numeric_limits<double>::infinity();
}

struct CflError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void assert_cfl(const ModelSpec& spec, const ControlMesh& mesh, const GridSpec& grid) {
    const double limit = cfl_limit(spec, mesh, grid.space);
    if (grid.dt > limit * (1.0 + 1e-12))
        throw CflError("CFL violation: dt = " + std::to_string(grid.dt) +
                       " exceeds the monotonicity bound 1/sum_i(a_max_ii/dx_i^2 + b_max_i/dx_i) = " +
                       std::to_string(limit));
}

/// Values of u(t, .) on a spatial grid, with multilinear interpolation and
/// constant extension outside the domain.
struct ValueGrid {
    SpatialGrid grid;
    Vec values;
    double time_label = 0.0;

    ValueGrid() = default;
    ValueGrid(SpatialGrid g, double t) : grid(std::move(g)), values(grid.size(), 0.0), time_label(t) {}

    static ValueGrid sample(const SpatialGrid& g, const TestFunction& psi, double t = 0.0) {
        ValueGrid vg(g, t);
        for (std::size_t idx = 0; idx < g.size(); ++idx) vg.values[idx] = psi(g.coord(idx));
        return vg;
    }

    double interpolate(const Vec& x) const {
        const std::size_t d = grid.dim();
        std::vector<std::size_t> base(d);
        Vec theta(d);
        for (std::size_t i = 0; i < d; ++i) {
            // clamp -> constant extension outside the domain
            double s = (x[i] - grid.domain.lo[i]) / grid.dx[i];
            s = std::clamp(s, 0.0, double(grid.n[i] - 1));
            std::size_t b = std::min<std::size_t>(std::size_t(s), grid.n[i] - 2);
            base[i] = b;
            theta[i] = s - double(b);
        }
        double acc = 0.0;
        const std::size_t corners = std::size_t{1} << d;
        for (std::size_t c = 0; c < corners; ++c) {
            double w = 1.0;
            std::vector<std::size_t> mi(d);
            for (std::size_t i = 0; i < d; ++i) {
                const bool hi = (c >> i) & 1u;
                w *= hi ? theta[i] : 1.0 - theta[i];
                mi[i] = base[i] + (hi ? 1 : 0);
            }
            acc += w * values[grid.flatten(mi)];
        }
        return acc;
    }

    double sup_abs() const {
        double m = 0.0;
        for (double v : values) m = std::max(m, std::abs(v));
        return m;
    }

    double sup_diff_middle_half(const ValueGrid& other) const {
        double m = 0.0;
        for (std::size_t idx = 0; idx < values.size(); ++idx)
            if (grid.in_middle_half(grid.coord(idx)))
                m = std::max(m, std::abs(values[idx] - other.values[idx]));
        return m;
    }
};

/// CSV export: header "x1,...,xd,value", one node per line, %.17g formatting
/// so identical runs produce byte-identical files.
inline void write_value_grid_csv(const ValueGrid& vg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    for (std::size_t i = 0; i < vg.grid.dim(); ++i) out << "x" << (i + 1) << ",";
    out << "value\n";
    char buf[64];
    for (std::size_t idx = 0; idx < vg.values.size(); ++idx) {
        const Vec x = vg.grid.coord(idx);
        for (double xi : x) {
            std::snprintf(buf, sizeof buf, "%.17g", xi);
            out << buf << ",";
        }
        std::snprintf(buf, sizeof buf, "%.17g", vg.values[idx]);
        out << buf << "\n";
    }
}

}  // namespace nldiff
