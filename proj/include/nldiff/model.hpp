#pragma once

#include <limits>
#include <optional>
#include <random>
#include <string>

#include "nldiff/common.hpp"

namespace nldiff {

/// Axis-aligned box, the shape of both the control set F and spatial domains.
struct Box {
    Vec lo, hi;

    std::size_t dim() const { return lo.size(); }

    bool contains(const Vec& p, double tol = 1e-12) const {
        for (std::size_t i = 0; i < dim(); ++i)
            if (p[i] < lo[i] - tol || p[i] > hi[i] + tol) return false;
        return true;
    }
};

enum class DriftFamily { BoxDrift, AffineDrift, Shear };
enum class DiffusionFamily { ConstDiffusion, DiagDiffusion };
enum class AffineMatrixExpr { Identity, DiagTanh };
enum class AffineOffsetExpr { Zero, Const, Tanh };
enum class DiagExpr { Const, OnePlusSin, OnePlusSquare };

/**
 * Coefficient model for a diffusion with uncertain drift: a parametric drift
 * family (f, x) -> b(f, x), a state-dependent diffusion matrix a(x) with a
 * stored factor sigma(x) such that a = sigma sigma^T, the compact control box
 * F, and the bound constant of the ellipticity/boundedness condition.
 *
 * Built-in drift families (all affine in the control f):
 *   - box-drift:    b(f, x) = f
 *   - affine-drift: b(f, x) = A(x) f + c(x), A and c from a small expression set
 *   - shear:        b(f, x) = tanh(x_1) * f
 *
 * Built-in diffusion families:
 *   - const-diffusion: a(x) = given SPD matrix
 *   - diag-diffusion:  a(x) = diag(g_i(x_i)), optionally clamped into [1/C, C]
 */
struct ModelSpec {
    std::size_t d = 1;
    double bound_C = 2.0;

    DriftFamily drift_family = DriftFamily::BoxDrift;
    AffineMatrixExpr affine_matrix = AffineMatrixExpr::Identity;
    double affine_scale = 1.0;
    AffineOffsetExpr affine_offset = AffineOffsetExpr::Zero;
    Vec affine_offset_const;      // used when affine_offset == Const
    double affine_offset_scale = 0.0;  // used when affine_offset == Tanh

    DiffusionFamily diffusion_family = DiffusionFamily::ConstDiffusion;
    Matrix const_matrix;                    // const-diffusion
    std::vector<DiagExpr> diag_exprs;       // diag-diffusion, one per axis
    Vec diag_params;                        // per-axis parameter of g_i
    bool diag_clamp = false;                // clamp g_i into [1/C, C]

    Box control_box;  // F, a box in R^m with m == d for the built-in families

    Vec drift(const Vec& f, const Vec& x) const {
        if (!control_box.contains(f))
            throw std::domain_error("drift: control point outside control_box");
        switch (drift_family) {
            case DriftFamily::BoxDrift:
                return f;
            case DriftFamily::Shear: {
                Vec b(d);
                const double s = std::tanh(x[0]);
                for (std::size_t i = 0; i < d; ++i) b[i] = s * f[i];
                return b;
            }
            case DriftFamily::AffineDrift: {
                Vec b(d);
                for (std::size_t i = 0; i < d; ++i) {
                    const double aii = (affine_matrix == AffineMatrixExpr::Identity)
                                           ? affine_scale
                                           : affine_scale * std::tanh(x[i]);
                    b[i] = aii * f[i] + offset_component(i, x);
                }
                return b;
            }
        }
        throw std::logic_error("unreachable");
    }

    /// True when the drift family is affine in f (all built-ins are); makes
    /// the convexity condition on {b(f,x) : f in F} automatic for box F.
    bool drift_affine_in_f() const { return true; }

    double diag_entry(std::size_t i, double xi) const {
        double g = 1.0;
        switch (diag_exprs[i]) {
            case DiagExpr::Const: g = diag_params[i]; break;
            case DiagExpr::OnePlusSin: g = 1.0 + diag_params[i] * std::sin(xi); break;
            case DiagExpr::OnePlusSquare: g = 1.0 + diag_params[i] * xi * xi; break;
        }
        if (diag_clamp) g = std::clamp(g, 1.0 / bound_C, bound_C);
        return g;
    }

    Matrix diffusion(const Vec& x) const {
        if (diffusion_family == DiffusionFamily::ConstDiffusion) return const_matrix;
        Matrix a(d, d);
        for (std::size_t i = 0; i < d; ++i) a(i, i) = diag_entry(i, x[i]);
        return a;
    }

    Matrix sigma(const Vec& x) const {
        if (diffusion_family == DiffusionFamily::ConstDiffusion) {
            if (!sigma_cache_) sigma_cache_ = cholesky(const_matrix);
            return *sigma_cache_;
        }
        Matrix s(d, d);
        for (std::size_t i = 0; i < d; ++i) s(i, i) = std::sqrt(diag_entry(i, x[i]));
        return s;
    }

  private:
    double offset_component(std::size_t i, const Vec& x) const {
        switch (affine_offset) {
            case AffineOffsetExpr::Zero: return 0.0;
            case AffineOffsetExpr::Const: return affine_offset_const[i];
            case AffineOffsetExpr::Tanh: return affine_offset_scale * std::tanh(x[i]);
        }
        return 0.0;
    }

    mutable std::optional<Matrix> sigma_cache_;
};

/**
 * Finite discretization of the control set F: a tensor mesh over control_box
 * that always contains every box vertex, so the sup of a linear function of f
 * is attained exactly on the mesh.
 */
struct ControlMesh {
    std::vector<Vec> points;
    Vec resolution;  // per-axis spacing (0 for degenerate axes)
};

inline ControlMesh make_control_mesh(const Box& box, std::size_t points_per_axis) {
    const std::size_t m = box.dim();
    std::vector<std::size_t> n(m);
    Vec res(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const bool degenerate = box.hi[i] - box.lo[i] <= 0.0;
        n[i] = degenerate ? 1 : std::max<std::size_t>(2, points_per_axis);
        if (!degenerate) res[i] = (box.hi[i] - box.lo[i]) / double(n[i] - 1);
    }
    std::size_t total = 1;
    for (auto ni : n) total *= ni;
    ControlMesh mesh;
    mesh.resolution = res;
    mesh.points.reserve(total);
    for (std::size_t idx = 0; idx < total; ++idx) {
        Vec f(m);
        std::size_t rem = idx;
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t k = rem % n[i];
            rem /= n[i];
            f[i] = (n[i] == 1) ? box.lo[i] : box.lo[i] + double(k) * res[i];
            if (k == n[i] - 1) f[i] = box.hi[i];  // hit the vertex exactly
        }
        mesh.points.push_back(std::move(f));
    }
    return mesh;
}

/**
 * The Hamiltonian of the Kolmogorov equation:
 *   G(x, p, M) = sup_f <b(f,x), p> + (1/2) tr[a(x) M],
 * with the sup taken over the control mesh. Ties in the argmax break toward
 * the lowest mesh index.
 */
inline double eval_G(const ModelSpec& spec, const ControlMesh& mesh, const Vec& x, const Vec& p,
                     const Matrix& m, std::size_t* argmax = nullptr) {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_idx = 0;
    for (std::size_t k = 0; k < mesh.points.size(); ++k) {
        const double v = dot(spec.drift(mesh.points[k], x), p);
        if (v > best) {
            best = v;
            best_idx = k;
        }
    }
    const Matrix a = spec.diffusion(x);
    double trace_term = 0.0;
    for (std::size_t i = 0; i < spec.d; ++i)
        for (std::size_t j = 0; j < spec.d; ++j) trace_term += a(i, j) * m(j, i);
    if (argmax) *argmax = best_idx;
    return best + 0.5 * trace_term;
}

enum class Verdict { Pass, Fail, Unknown };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "pass";
        case Verdict::Fail: return "fail";
        default: return "unknown";
    }
}

struct ConditionReport {
    double drift_bound_max = 0.0;   // sup of ||b(f,x)|| over samples
    double eig_min = 0.0, eig_max = 0.0;  // eigenvalue range of a over samples
    Verdict bound_ok = Verdict::Unknown;
    Verdict ellipticity_ok = Verdict::Unknown;
    Verdict convexity_ok = Verdict::Unknown;
    double lipschitz_b = 0.0;      // empirical Lipschitz constant of x -> b(f,x)
    double lipschitz_sigma = 0.0;  // empirical Lipschitz constant of x -> sigma(x)
};

/**
 * Samples the boundedness/ellipticity condition, reports a convexity verdict
 * for {b(f,x) : f in F} (exact for the affine-in-f built-ins), and estimates
 * Lipschitz constants of b and sigma in x from difference quotients.
 */
inline ConditionReport check_conditions(const ModelSpec& spec, const Box& sample_domain,
                                        std::size_t n_samples, std::uint64_t seed) {
    if (n_samples < 1) throw std::invalid_argument("check_conditions: n_samples >= 1 required");
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto sample_in = [&](const Box& b) {
        Vec p(b.dim());
        for (std::size_t i = 0; i < b.dim(); ++i)
            p[i] = b.lo[i] + unit(gen) * (b.hi[i] - b.lo[i]);
        return p;
    };

    ConditionReport rep;
    rep.eig_min = std::numeric_limits<double>::infinity();
    rep.eig_max = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n_samples; ++k) {
        const Vec x = sample_in(sample_domain);
        const Vec f = sample_in(spec.control_box);
        rep.drift_bound_max = std::max(rep.drift_bound_max, norm2(spec.drift(f, x)));
        const Vec ev = sym_eigenvalues(spec.diffusion(x));
        rep.eig_min = std::min(rep.eig_min, ev.front());
        rep.eig_max = std::max(rep.eig_max, ev.back());

        // Lipschitz difference quotients, both long-range and short-range pairs.
        Vec y = sample_in(sample_domain);
        if (k % 2 == 0)
            for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] + 1e-4 * (2.0 * unit(gen) - 1.0);
        const double dxy = norm2([&] {
            Vec dv(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) dv[i] = x[i] - y[i];
            return dv;
        }());
        if (dxy > 1e-14) {
            const Vec bx = spec.drift(f, x), by = spec.drift(f, y);
            Vec db(bx.size());
            for (std::size_t i = 0; i < bx.size(); ++i) db[i] = bx[i] - by[i];
            rep.lipschitz_b = std::max(rep.lipschitz_b, norm2(db) / dxy);
            const Matrix sx = spec.sigma(x), sy = spec.sigma(y);
            double fro = 0.0;
            for (std::size_t i = 0; i < sx.a.size(); ++i) {
                const double dd = sx.a[i] - sy.a[i];
                fro += dd * dd;
            }
            rep.lipschitz_sigma = std::max(rep.lipschitz_sigma, std::sqrt(fro) / dxy);
        }
    }
    rep.bound_ok = rep.drift_bound_max <= spec.bound_C + 1e-12 ? Verdict::Pass : Verdict::Fail;
    rep.ellipticity_ok = (rep.eig_min >= 1.0 / spec.bound_C - 1e-12 &&
                          rep.eig_max <= spec.bound_C + 1e-12)
                             ? Verdict::Pass
                             : Verdict::Fail;
    rep.convexity_ok = spec.drift_affine_in_f() ? Verdict::Pass : Verdict::Unknown;
    return rep;
}

}  // namespace nldiff
