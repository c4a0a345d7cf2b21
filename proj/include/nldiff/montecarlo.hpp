#pragma once

#include "nldiff/functions.hpp"
#include "nldiff/grid.hpp"
#include "nldiff/model.hpp"
#include "nldiff/rng.hpp"

namespace nldiff {

/**
 * Admissible control policy for path simulation. Every control it emits is a
 * point of the control mesh, so the simulated (drift, diffusion) pair stays
 * inside Theta pointwise.
 *
 *  - constant: one mesh index for the whole horizon;
 *  - piecewise-constant: strictly increasing switch times with mesh indices;
 *  - feedback-table: per-node control indices over a spatial grid, one table
 *    per forward step (a single table is reused for every step). Tables come
 *    from the DP argmax.
 */
struct Policy {
    enum class Kind { Constant, PiecewiseConstant, FeedbackTable };
    Kind kind = Kind::Constant;
    std::string name = "constant";

    std::size_t control_index = 0;                     // Constant
    std::vector<double> switch_times;                  // PiecewiseConstant
    std::vector<std::size_t> segment_indices;          // PiecewiseConstant (size = switches + 1)
    SpatialGrid table_grid;                            // FeedbackTable
    std::vector<std::vector<std::uint32_t>> tables;    // FeedbackTable, forward-time order

    void validate(const ControlMesh& mesh, double horizon) const {
        auto check_idx = [&](std::size_t i) {
            if (i >= mesh.points.size())
                throw std::invalid_argument("policy: control index outside mesh");
        };
        switch (kind) {
            case Kind::Constant:
                check_idx(control_index);
                break;
            case Kind::PiecewiseConstant: {
                if (segment_indices.size() != switch_times.size() + 1)
                    throw std::invalid_argument("policy: need one segment per switch interval");
                double prev = 0.0;
                for (double s : switch_times) {
                    if (s <= prev || s >= horizon)
                        throw std::invalid_argument(
                            "policy: switch times must be strictly increasing in (0, horizon)");
                    prev = s;
                }
                for (std::size_t i : segment_indices) check_idx(i);
                break;
            }
            case Kind::FeedbackTable:
                if (tables.empty()) throw std::invalid_argument("policy: empty feedback table");
                for (const auto& tab : tables) {
                    if (tab.size() != table_grid.size())
                        throw std::invalid_argument("policy: table size mismatch with grid");
                    for (std::uint32_t i : tab) check_idx(i);
                }
                break;
        }
    }

    std::size_t control_at(const ControlMesh&, double time_frac_step, std::size_t step,
                           const Vec& x) const {
        switch (kind) {
            case Kind::Constant:
                return control_index;
            case Kind::PiecewiseConstant: {
                std::size_t seg = 0;
                while (seg < switch_times.size() && time_frac_step >= switch_times[seg]) ++seg;
                return segment_indices[seg];
            }
            case Kind::FeedbackTable: {
                const auto& tab = tables[std::min(step, tables.size() - 1)];
                // nearest grid node (clamped)
                std::vector<std::size_t> mi(table_grid.dim());
                for (std::size_t i = 0; i < table_grid.dim(); ++i) {
                    const double s =
                        (x[i] - table_grid.domain.lo[i]) / table_grid.dx[i];
                    mi[i] = std::size_t(std::clamp(std::llround(s), 0ll,
                                                   (long long)(table_grid.n[i] - 1)));
                }
                return tab[table_grid.flatten(mi)];
            }
        }
        return 0;
    }
};

inline Policy constant_policy(std::size_t mesh_index, std::string name = "") {
    Policy p;
    p.kind = Policy::Kind::Constant;
    p.control_index = mesh_index;
    p.name = name.empty() ? "constant-" + std::to_string(mesh_index) : std::move(name);
    return p;
}

/// Wraps DP argmax tables (already in forward-time order) as a policy.
inline Policy feedback_policy(SpatialGrid grid, std::vector<std::vector<std::uint32_t>> tables) {
    Policy p;
    p.kind = Policy::Kind::FeedbackTable;
    p.name = "feedback-dp";
    p.table_grid = std::move(grid);
    p.tables = std::move(tables);
    return p;
}

struct PathEnsemble {
    Vec start;
    double horizon = 0.0;
    std::size_t n_paths = 0, n_steps = 0;
    std::uint64_t seed = 0;
    std::vector<Vec> endpoints;
    Vec girsanov_log;  // per-path log-density accumulator (empty unless requested)
    std::vector<Vec> girsanov_log_snapshots;  // one per snapshot step, per path

    // diagnostics for the first path, filled when record_first_path is set
    std::vector<Vec> first_path_states;
    std::vector<std::size_t> first_path_controls;
    std::vector<Vec> first_path_noise;
};

struct SimulateOptions {
    bool record_first_path = false;
    /// Accumulate the Girsanov log-density of the drifted law against the
    /// driftless reference along each path.
    bool accumulate_girsanov = false;
    /// Step counts (ascending) after which to snapshot the per-path log
    /// density; requires accumulate_girsanov.
    std::vector<std::size_t> snapshot_steps;
};

/**
 * Euler-Maruyama under a control policy:
 *   X_{k+1} = X_k + b(f_k, X_k) dt + sigma(X_k) sqrt(dt) Z_k,
 * with counter-based Gaussians keyed by (seed, path, step). Identical
 * (inputs, seed) reproduce the ensemble bitwise.
 */
inline PathEnsemble simulate(const ModelSpec& spec, const ControlMesh& mesh, const Policy& policy,
                             const Vec& x, double t, std::size_t n_paths, std::size_t n_steps,
                             std::uint64_t seed, const SimulateOptions& opts = {}) {
    if (n_paths < 1 || n_steps < 1)
        throw std::invalid_argument("simulate: n_paths, n_steps >= 1 required");
    policy.validate(mesh, t);
    const std::size_t d = spec.d;
    const double dt = t / double(n_steps);
    const double sqdt = std::sqrt(dt);
    const CounterRng rng(seed);

    PathEnsemble ens;
    ens.start = x;
    ens.horizon = t;
    ens.n_paths = n_paths;
    ens.n_steps = n_steps;
    ens.seed = seed;
    ens.endpoints.assign(n_paths, Vec(d));
    if (opts.accumulate_girsanov) {
        ens.girsanov_log.assign(n_paths, 0.0);
        ens.girsanov_log_snapshots.assign(opts.snapshot_steps.size(), Vec(n_paths, 0.0));
    }

    parallel_for(n_paths, [&](std::size_t p) {
        Vec state = x, z(d), b(d), dw(d);
        double logz = 0.0;
        if (opts.record_first_path && p == 0) ens.first_path_states.push_back(state);
        for (std::size_t k = 0; k < n_steps; ++k) {
            const std::size_t fi = policy.control_at(mesh, double(k) * dt, k, state);
            b = spec.drift(mesh.points[fi], state);
            const Matrix sig = spec.sigma(state);
            rng.fill_gauss(p, k, z);
            for (std::size_t i = 0; i < d; ++i) {
                dw[i] = sqdt * z[i];
            }
            if (opts.accumulate_girsanov) {
                // dlogZ = -<a^{-1} b, sigma dW> - (1/2) <b, a^{-1} b> dt
                const Vec ainv_b = spd_solve(spec.diffusion(state), b);
                const Vec sig_dw = matvec(sig, dw);
                logz += -dot(ainv_b, sig_dw) - 0.5 * dot(b, ainv_b) * dt;
            }
            for (std::size_t i = 0; i < d; ++i) {
                double diff = 0.0;
                for (std::size_t l = 0; l < d; ++l) diff += sig(i, l) * dw[l];
                state[i] += b[i] * dt + diff;
            }
            if (opts.record_first_path && p == 0) {
                ens.first_path_states.push_back(state);
                ens.first_path_controls.push_back(fi);
                ens.first_path_noise.push_back(dw);
            }
            if (opts.accumulate_girsanov)
                for (std::size_t s = 0; s < opts.snapshot_steps.size(); ++s)
                    if (opts.snapshot_steps[s] == k + 1) ens.girsanov_log_snapshots[s][p] = logz;
        }
        ens.endpoints[p] = state;
        if (opts.accumulate_girsanov) ens.girsanov_log[p] = logz;
    });
    return ens;
}

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

/// Sample mean and standard error of g over the ensemble endpoints; the
/// reduction is a fixed-order compensated sum, independent of worker count.
template <class Fn>
McEstimate mc_estimate(const PathEnsemble& ens, Fn&& g) {
    KahanSum sum, sumsq;
    for (const Vec& e : ens.endpoints) {
        const double v = g(e);
        sum.add(v);
        sumsq.add(v * v);
    }
    const double n = double(ens.n_paths);
    McEstimate est;
    est.mean = sum.value() / n;
    const double var = std::max(0.0, sumsq.value() / n - est.mean * est.mean);
    est.std_error = std::sqrt(var / n);
    return est;
}

struct LowerBoundResult {
    double best_value = -std::numeric_limits<double>::infinity();
    double best_std_error = 0.0;
    std::size_t best_policy = 0;
    std::vector<McEstimate> per_policy;
};

/**
 * Statistically certified lower bound on T_t(psi)(x): every admissible policy
 * yields E[psi(X_t)] <= sup over laws, so the best Monte Carlo mean bounds the
 * value from below. Policies share the same seed (common random numbers).
 */
inline LowerBoundResult lower_bound(const ModelSpec& spec, const ControlMesh& mesh,
                                    const TestFunction& psi, const Vec& x, double t,
                                    const std::vector<Policy>& policies, std::size_t n_paths,
                                    std::size_t n_steps, std::uint64_t seed) {
    if (policies.empty()) throw std::invalid_argument("lower_bound: policies nonempty required");
    LowerBoundResult res;
    for (std::size_t pi = 0; pi < policies.size(); ++pi) {
        const PathEnsemble ens = simulate(spec, mesh, policies[pi], x, t, n_paths, n_steps, seed);
        const McEstimate est = mc_estimate(ens, [&](const Vec& e) { return psi(e); });
        res.per_policy.push_back(est);
        if (est.mean > res.best_value) {
            res.best_value = est.mean;
            res.best_std_error = est.std_error;
            res.best_policy = pi;
        }
    }
    return res;
}

}  // namespace nldiff
