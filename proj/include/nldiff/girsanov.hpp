#pragma once

#include "nldiff/montecarlo.hpp"

namespace nldiff {

/**
 * Estimates and verdicts for the exponential-density bounds that drive the
 * smoothing argument: Z is the density of the drifted law against the
 * driftless reference, simulated in forward form under the drifted measure so
 * the Brownian integral is available directly from the stored increments.
 */
struct GirsanovReport {
    double t = 0.0;
    std::string policy_name;
    double bound_constant = 0.0;  // C = sup <b, a^{-1} b> over the sampled graph
    McEstimate z_mean, z_sq, abs_one_minus_z;
    double exp_bound = 0.0;  // e^{C t}
    Verdict martingale_ok = Verdict::Unknown;      // |E[Z] - 1| small
    Verdict second_moment_ok = Verdict::Unknown;   // E[Z^2] <= e^{C t}
    Verdict l1_bound_ok = Verdict::Unknown;        // (E|1-Z|)^2 <= e^{C t} - 1
};

/// Driftless reference diffusion dX = sigma(X) dW: the discrete stand-in for
/// the solution of the martingale problem for (0, a).
inline PathEnsemble simulate_reference(const ModelSpec& spec, const Vec& x, double t,
                                       std::size_t n_paths, std::size_t n_steps,
                                       std::uint64_t seed) {
    ModelSpec driftless = spec;
    driftless.drift_family = DriftFamily::BoxDrift;
    driftless.control_box = Box{Vec(spec.d, 0.0), Vec(spec.d, 0.0)};
    const ControlMesh zero_mesh = make_control_mesh(driftless.control_box, 1);
    return simulate(driftless, zero_mesh, constant_policy(0, "zero-drift"), x, t, n_paths, n_steps,
                    seed);
}

/// Drifted simulation with the per-path density accumulator switched on.
inline PathEnsemble simulate_with_density(const ModelSpec& spec, const ControlMesh& mesh,
                                          const Policy& policy, const Vec& x, double t,
                                          std::size_t n_paths, std::size_t n_steps,
                                          std::uint64_t seed, SimulateOptions opts = {}) {
    opts.accumulate_girsanov = true;
    return simulate(spec, mesh, policy, x, t, n_paths, n_steps, seed, opts);
}

/// Per-path densities Z_t = exp(accumulated log increments).
inline Vec density_Z(const PathEnsemble& ens) {
    if (ens.girsanov_log.empty())
        throw std::invalid_argument("density_Z: ensemble has no density accumulator");
    Vec z(ens.girsanov_log.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = std::exp(ens.girsanov_log[i]);
    return z;
}

/// C = sup over the control mesh and a sample grid of <b(f,x), a^{-1}(x) b(f,x)>;
/// the sharp rate for the exponential second-moment bound.
inline double girsanov_constant(const ModelSpec& spec, const ControlMesh& mesh,
                                const Box& sample_domain, std::size_t samples_per_axis = 33) {
    Vec spacing(sample_domain.dim());
    for (std::size_t i = 0; i < spacing.size(); ++i)
        spacing[i] = (sample_domain.hi[i] - sample_domain.lo[i]) / double(samples_per_axis - 1);
    const SpatialGrid sg(sample_domain, spacing);
    double c = 0.0;
    for (std::size_t idx = 0; idx < sg.size(); ++idx) {
        const Vec x = sg.coord(idx);
        const Matrix a = spec.diffusion(x);
        for (const Vec& f : mesh.points) {
            const Vec b = spec.drift(f, x);
            c = std::max(c, dot(b, spd_solve(a, b)));
        }
    }
    return c;
}

inline McEstimate estimate_of(const Vec& values) {
    KahanSum sum, sumsq;
    for (double v : values) {
        sum.add(v);
        sumsq.add(v * v);
    }
    const double n = double(values.size());
    McEstimate est;
    est.mean = sum.value() / n;
    est.std_error = std::sqrt(std::max(0.0, sumsq.value() / n - est.mean * est.mean) / n);
    return est;
}

/**
 * Verifies, with 3-sigma slack and an Euler-bias allowance of 1e-2, the
 * martingale property E[Z] = 1, the second-moment bound E[Z^2] <= e^{C t},
 * and the chained estimate (E|1 - Z|)^2 <= e^{C t} - 1.
 */
inline GirsanovReport verify_bounds(const ModelSpec& spec, const ControlMesh& mesh,
                                    const Policy& policy, const Vec& x, double t,
                                    std::size_t n_paths, std::size_t n_steps, std::uint64_t seed,
                                    const Box& sample_domain) {
    const PathEnsemble ens = simulate_with_density(spec, mesh, policy, x, t, n_paths, n_steps, seed);
    const Vec z = density_Z(ens);
    Vec z2(z.size()), abs1mz(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        z2[i] = z[i] * z[i];
        abs1mz[i] = std::abs(1.0 - z[i]);
    }
    GirsanovReport rep;
    rep.t = t;
    rep.policy_name = policy.name;
    rep.bound_constant = girsanov_constant(spec, mesh, sample_domain);
    rep.z_mean = estimate_of(z);
    rep.z_sq = estimate_of(z2);
    rep.abs_one_minus_z = estimate_of(abs1mz);
    rep.exp_bound = std::exp(rep.bound_constant * t);

    const double euler_allowance = 1e-2;
    rep.martingale_ok = std::abs(rep.z_mean.mean - 1.0) <= 3.0 * rep.z_mean.std_error +
                                euler_allowance
                            ? Verdict::Pass
                            : Verdict::Fail;
    const double rel_se = rep.z_sq.std_error / std::max(rep.z_sq.mean, 1e-300);
    rep.second_moment_ok =
        rep.z_sq.mean <= rep.exp_bound * (1.0 + 3.0 * rel_se) ? Verdict::Pass : Verdict::Fail;
    const double m = rep.abs_one_minus_z.mean;
    rep.l1_bound_ok = m * m <= rep.exp_bound - 1.0 + 3.0 * rep.abs_one_minus_z.std_error
                          ? Verdict::Pass
                          : Verdict::Fail;
    return rep;
}

}  // namespace nldiff
