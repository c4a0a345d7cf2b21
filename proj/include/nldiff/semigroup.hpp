#pragma once

#include <random>

#include "nldiff/dp.hpp"
#include "nldiff/pde.hpp"

namespace nldiff {

enum class Method { Pde, Dp };

inline const char* to_string(Method m) { return m == Method::Pde ? "pde" : "dp"; }

/// Single facade over both solvers: T_t(psi)(x) on a grid, by the monotone
/// scheme or by backward dynamic programming.
class Semigroup {
  public:
    Semigroup(ModelSpec spec, ControlMesh mesh, GridSpec grid, std::size_t dp_steps_per_unit = 100,
              std::size_t quad_order = 5)
        : spec_(std::move(spec)), mesh_(std::move(mesh)), grid_(grid),
          dp_steps_per_unit_(dp_steps_per_unit),
          pde_(spec_, mesh_, grid_),
          dp_(spec_, mesh_, grid_.space, gauss_hermite(quad_order, spec_.d)) {}

    const GridSpec& grid() const { return grid_; }
    const ControlMesh& mesh() const { return mesh_; }
    const ModelSpec& model() const { return spec_; }
    const DpSolver& dp() const { return dp_; }
    const PdeSolver& pde() const { return pde_; }

    std::size_t dp_steps(double t) const {
        return std::max<std::size_t>(1, std::size_t(std::ceil(t * double(dp_steps_per_unit_))));
    }

    ValueGrid apply(const ValueGrid& data, double t, Method method) const {
        if (t == 0.0) return data;
        return method == Method::Pde ? pde_.solve(data, t) : dp_.solve(data, t, dp_steps(t));
    }

    ValueGrid apply(const TestFunction& psi, double t, Method method) const {
        return apply(ValueGrid::sample(grid_.space, psi), t, method);
    }

    /// || T_s(T_t psi) - T_{s+t} psi || over the middle half. The intermediate
    /// grid is re-fed as nodewise initial datum.
    double semigroup_gap(const TestFunction& psi, double s, double t, Method method) const {
        const ValueGrid inner = apply(psi, t, method);
        const ValueGrid composed = apply(inner, s, method);
        const ValueGrid direct = apply(psi, s + t, method);
        return composed.sup_diff_middle_half(direct);
    }

    ValueGrid sample(const TestFunction& psi) const { return ValueGrid::sample(grid_.space, psi); }

  private:
    ModelSpec spec_;
    ControlMesh mesh_;
    GridSpec grid_;
    std::size_t dp_steps_per_unit_;
    PdeSolver pde_;
    DpSolver dp_;
};

struct AxiomReport {
    double worst_monotonicity = 0.0;  // max over pairs of max(0, T(psi) - T(phi)) with psi <= phi
    double worst_subadditivity = 0.0;  // max of T(psi+phi) - T(psi) - T(phi)
    double worst_translation = 0.0;    // max |T(psi + c) - T(psi) - c|
    double worst_constant = 0.0;       // max |T(c) - c|
    std::size_t n_pairs = 0;
    Verdict ok(double tol_mono = 1e-8, double tol_sub = 1e-8, double tol_tr = 1e-8) const {
        return (worst_monotonicity <= tol_mono && worst_subadditivity <= tol_sub &&
                worst_translation <= tol_tr && worst_constant <= 1e-12)
                   ? Verdict::Pass
                   : Verdict::Fail;
    }
};

/// Seeded pool of smooth bounded test functions for property sweeps.
inline std::vector<TestFunction> random_function_pool(std::size_t d, std::size_t count,
                                                      std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<TestFunction> pool;
    pool.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        TestFunction f;
        switch (i % 3) {
            case 0: {
                f = tanh_fn(d, 0.2 + 1.5 * u(gen), 2.0 * u(gen) - 1.0);
                f.offset = 2.0 * u(gen) - 1.0;
                break;
            }
            case 1:
                f = gaussian_bump_fn(d, 2.0 * u(gen) - 1.0, 0.4 + 1.2 * u(gen));
                f.center = Vec(d, 2.0 * u(gen) - 1.0);
                break;
            default: {
                f.kind = FunctionKind::PiecewiseLinearCapped;
                f.direction = Vec(d, 0.0);
                f.direction[0] = 0.3 + u(gen);
                f.shift = 2.0 * u(gen) - 1.0;
                f.cap_lo = -1.0 - u(gen);
                f.cap_hi = 0.5 + u(gen);
                break;
            }
        }
        pool.push_back(std::move(f));
    }
    return pool;
}

/**
 * Runs the sublinear-semigroup axioms over seeded random data pairs:
 * monotonicity, constant preservation, subadditivity, and translation
 * invariance, reporting worst-case violations.
 */
inline AxiomReport axiom_suite(const Semigroup& sg, const std::vector<TestFunction>& pool,
                               const std::vector<double>& t_pool, Method method,
                               std::uint64_t seed) {
    if (pool.empty() || t_pool.empty())
        throw std::invalid_argument("axiom_suite: nonempty pools required");
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    AxiomReport rep;
    const SpatialGrid& grid = sg.grid().space;

    auto nodewise_max = [&](const Vec& a, const Vec& b, double sign_b, double shift) {
        double worst = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < a.size(); ++i)
            worst = std::max(worst, a[i] + sign_b * b[i] + shift);
        return worst;
    };

    for (std::size_t i = 0; i + 1 < pool.size(); i += 2) {
        const double t = t_pool[i / 2 % t_pool.size()];
        const TestFunction& psi = pool[i];
        const TestFunction& phi = pool[i + 1];
        const ValueGrid vp = ValueGrid::sample(grid, psi);
        const ValueGrid vq = ValueGrid::sample(grid, phi);
        const ValueGrid tp = sg.apply(vp, t, method);
        const ValueGrid tq = sg.apply(vq, t, method);

        // monotonicity: psi <= psi + |phi - min phi|
        ValueGrid dominating = vp;
        double qmin = *std::min_element(vq.values.begin(), vq.values.end());
        for (std::size_t k = 0; k < dominating.values.size(); ++k)
            dominating.values[k] += vq.values[k] - qmin;
        const ValueGrid tdom = sg.apply(dominating, t, method);
        rep.worst_monotonicity = std::max(
            rep.worst_monotonicity, nodewise_max(tp.values, tdom.values, -1.0, 0.0));

        // subadditivity: T(psi + phi) <= T psi + T phi
        ValueGrid sum = vp;
        for (std::size_t k = 0; k < sum.values.size(); ++k) sum.values[k] += vq.values[k];
        const ValueGrid tsum = sg.apply(sum, t, method);
        for (std::size_t k = 0; k < tsum.values.size(); ++k)
            rep.worst_subadditivity = std::max(
                rep.worst_subadditivity, tsum.values[k] - tp.values[k] - tq.values[k]);

        // translation: T(psi + c) = T psi + c
        const double c = 4.0 * u(gen) - 2.0;
        ValueGrid shifted = vp;
        for (double& v : shifted.values) v += c;
        const ValueGrid tshift = sg.apply(shifted, t, method);
        for (std::size_t k = 0; k < tshift.values.size(); ++k)
            rep.worst_translation = std::max(
                rep.worst_translation, std::abs(tshift.values[k] - tp.values[k] - c));

        // constants
        const ValueGrid tconst = sg.apply(constant_fn(c), t, method);
        for (double v : tconst.values)
            rep.worst_constant = std::max(rep.worst_constant, std::abs(v - c));

        ++rep.n_pairs;
    }
    return rep;
}

/// Nodewise comparison: psi <= phi must imply T psi <= T phi + 1e-10.
inline Verdict comparison_test(const Semigroup& sg, const TestFunction& psi,
                               const TestFunction& phi, double t, Method method) {
    const ValueGrid vp = sg.sample(psi), vq = sg.sample(phi);
    for (std::size_t k = 0; k < vp.values.size(); ++k)
        if (vp.values[k] > vq.values[k] + 1e-12)
            throw std::invalid_argument("comparison_test: psi <= phi violated by the data");
    const ValueGrid tp = sg.apply(vp, t, method);
    const ValueGrid tq = sg.apply(vq, t, method);
    for (std::size_t k = 0; k < tp.values.size(); ++k)
        if (tp.values[k] > tq.values[k] + 1e-10) return Verdict::Fail;
    return Verdict::Pass;
}

struct ModulusReport {
    double t = 0.0;
    std::string psi_descriptor;
    Vec deltas;            // descending gaps
    Vec omegas;            // measured moduli, one per delta
    Vec oracle;            // analytic curve when available (else empty)
    double data_modulus = 0.0;   // modulus of the raw data at the largest delta
    double omega_origin = 0.0;   // linear extrapolation of omega to delta -> 0+
    bool monotone = true;
};

/**
 * Empirical modulus of continuity of T_t psi over the middle half:
 * omega(delta) = sup { |v(x) - v(y)| : ||x - y|| <= delta }. Rejects t = 0,
 * where the operator is the identity and no smoothing occurs. For the 1-d
 * unit-diffusion box-drift model with a halfspace indicator, attaches the
 * analytic modulus of the normal-CDF value function.
 */
inline ModulusReport feller_modulus(const Semigroup& sg, const TestFunction& psi, double t,
                                    Vec deltas, Method method) {
    if (t <= 0.0)
        throw std::invalid_argument("feller_modulus: t > 0 required (T_0 preserves the jump)");
    std::sort(deltas.begin(), deltas.end(), std::greater<>());
    const ValueGrid v = sg.apply(psi, t, method);
    const ValueGrid raw = sg.sample(psi);
    const SpatialGrid& grid = v.grid;

    std::vector<std::size_t> mid;
    for (std::size_t idx = 0; idx < v.values.size(); ++idx)
        if (grid.in_middle_half(grid.coord(idx))) mid.push_back(idx);

    ModulusReport rep;
    rep.t = t;
    rep.deltas = deltas;
    rep.omegas.assign(deltas.size(), 0.0);
    auto modulus_of = [&](const Vec& values, double delta) {
        double w = 0.0;
        for (std::size_t a = 0; a < mid.size(); ++a) {
            const Vec xa = grid.coord(mid[a]);
            for (std::size_t b = a + 1; b < mid.size(); ++b) {
                const Vec xb = grid.coord(mid[b]);
                double q = 0.0;
                for (std::size_t i = 0; i < xa.size(); ++i) {
                    const double dd = xa[i] - xb[i];
                    q += dd * dd;
                }
                if (q <= delta * delta + 1e-15)
                    w = std::max(w, std::abs(values[mid[a]] - values[mid[b]]));
            }
        }
        return w;
    };
    for (std::size_t i = 0; i < deltas.size(); ++i) rep.omegas[i] = modulus_of(v.values, deltas[i]);
    rep.data_modulus = modulus_of(raw.values, deltas.front());
    for (std::size_t i = 0; i + 1 < deltas.size(); ++i)
        if (rep.omegas[i] + 1e-12 < rep.omegas[i + 1]) rep.monotone = false;

    if (deltas.size() >= 2) {
        const std::size_t k = deltas.size() - 1;
        const double slope =
            (rep.omegas[k - 1] - rep.omegas[k]) / (deltas[k - 1] - deltas[k]);
        rep.omega_origin = std::max(0.0, rep.omegas[k] - slope * deltas[k]);
    }

    const ModelSpec& m = sg.model();
    const bool oracle_model =
        m.d == 1 && m.drift_family == DriftFamily::BoxDrift &&
        psi.kind == FunctionKind::IndicatorHalfspace &&
        m.diffusion_family == DiffusionFamily::ConstDiffusion &&
        std::abs(m.const_matrix(0, 0) - 1.0) < 1e-12;
    if (oracle_model) {
        // value function Phi((c t - x)/sqrt t) with c = |lower control bound|;
        // its exact modulus over a gap delta is 2 Phi(delta / (2 sqrt t)) - 1
        rep.oracle.assign(deltas.size(), 0.0);
        for (std::size_t i = 0; i < deltas.size(); ++i)
            rep.oracle[i] = 2.0 * normal_cdf(deltas[i] / (2.0 * std::sqrt(t))) - 1.0;
    }
    return rep;
}

}  // namespace nldiff
