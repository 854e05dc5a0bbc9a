#pragma once

/**
 * @file
 * run(config): for every (r, t) grid point build the scheme's total
 * unitary, simulate it, post-select, sample shots and assemble
 * per-(r, t, state, seed) rows plus diagnostics.
 *
 * Grid points run on a small thread pool. Every task owns its RNG keys
 * (derived from seed, r index and t index) and writes into a fixed slot,
 * so output does not depend on scheduling or thread count.
 */

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "nhd/circuit.hpp"
#include "nhd/dilation.hpp"
#include "nhd/experiment/config.hpp"
#include "nhd/metric.hpp"
#include "nhd/rng.hpp"
#include "nhd/tomography.hpp"

namespace nhd::experiment {

// ---------------------------------------------------------------------------
// worker pool
// ---------------------------------------------------------------------------

/// NHD_THREADS if set and positive, else the hardware count; never more than `tasks`.
inline std::size_t worker_count(std::size_t tasks) {
    std::size_t n = std::max(1U, std::thread::hardware_concurrency());
    if (const char *env = std::getenv("NHD_THREADS")) {
        char *end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) {
            n = static_cast<std::size_t>(v);
        }
    }
    return std::max<std::size_t>(1, std::min(n, tasks));
}

/// Calls f(i) for i in [0, n). The exception of the lowest failing index is rethrown.
template <class F>
void parallel_for(std::size_t n, F &&f, std::size_t threads = 0) {
    if (n == 0) {
        return;
    }
    if (threads == 0) {
        threads = worker_count(n);
    }
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::size_t failed_at = n;
    std::exception_ptr failure;
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                f(i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (i < failed_at) {
                    failed_at = i;
                    failure = std::current_exception();
                }
            }
        }
    };
    if (threads == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (std::size_t k = 0; k < threads; ++k) {
            pool.emplace_back(work);
        }
        for (auto &t : pool) {
            t.join();
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

// ---------------------------------------------------------------------------
// report types
// ---------------------------------------------------------------------------

struct Row {
    double r = 0.0;
    double t = 0.0;
    std::string tag; // psi, rho_psi, eta_psi
    std::uint64_t seed = 0;
    BlochVector exact;
    BlochVector estimate;
    BlochVector std_error;
    std::array<std::int64_t, 3> n_post{0, 0, 0};
    double p_branch = 1.0;       // empirical (Z-basis record)
    double p_branch_exact = 1.0;
    double n_eff = 0.0;          // n_post / p_branch
    double n_eff_exact = 0.0;    // n_post / p_branch_exact
    bool flagged = false;        // some component outside 5 sigma
};

/// sigma of a +-1 mean with exact value `exact` over n shots.
inline double binomial_sigma(double exact, std::int64_t n) {
    if (n <= 0) {
        return std::numeric_limits<double>::infinity();
    }
    return std::sqrt(std::max(0.0, 1.0 - exact * exact) / static_cast<double>(n));
}

/// |estimate - exact| <= k sigma_exact for one component (0 = x, 1 = y, 2 = z).
inline bool within_sigma(const Row &row, int comp, double k) {
    const double e = comp == 0 ? row.exact.x : (comp == 1 ? row.exact.y : row.exact.z);
    const double v = comp == 0 ? row.estimate.x : (comp == 1 ? row.estimate.y : row.estimate.z);
    if (!std::isfinite(v)) {
        return false;
    }
    return std::abs(v - e) <= k * binomial_sigma(e, row.n_post[static_cast<std::size_t>(comp)]) + 1e-12;
}

struct PointResult {
    std::size_t r_index = 0;
    std::size_t t_index = 0;
    double r = 0.0;
    double t = 0.0;
    std::map<std::string, BlochVector> exact; // three-state closed forms
    double unitarity = 0.0;                   // of the scheme's U_tot
    double gbond_literal_defect = 0.0;
    double naimark_margin = 0.0;              // min eig of k rho - I
    bool naimark_valid = true;
    double h_hermiticity = 0.0;
    double det_defect = 0.0;
    double metric_norm_defect = 0.0;          // |<psi|rho|psi> - 1|
    double branch_mismatch = 0.0;             // simulated vs closed-form branch Bloch vectors
    Matrix rho_normalized;                    // exact rho / tr rho
    std::optional<Matrix> rho_pipeline;       // from the simulated BoNd state
    std::optional<Matrix> rho_shots;          // from shot tomography
    double residual_pipeline = 0.0;
    double residual_shots = 0.0;
    std::vector<Row> rows;
    std::vector<std::string> warnings;
};

struct RSummary {
    double r = 0.0;
    double naimark_prefactor = 1.0;
    std::optional<double> naimark_onset;  // textbook form (k = 1)
    std::optional<double> naimark_onset_k; // with the prefactor
    std::optional<double> period;
    double rk4_residual = 0.0;            // max |rho_rk4 - rho_closed| on the output grid
    double ode_norm_defect = 0.0;         // max |<psi|rho_rk4|psi> - 1|
    double max_h_hermiticity = 0.0;       // over the fine grid
    double max_u_h_unitarity = 0.0;
};

struct RunReport {
    ExperimentConfig config;
    std::vector<double> grid;
    std::vector<RSummary> per_r;
    std::vector<PointResult> points; // r-major, then t
    std::vector<std::string> warnings;

    [[nodiscard]] const PointResult &at(std::size_t ri, std::size_t ti) const {
        return points[ri * grid.size() + ti];
    }
};

// ---------------------------------------------------------------------------
// scheme layout
// ---------------------------------------------------------------------------

struct TagLayout {
    std::string tag;
    std::string postselect; // over the ancillas, 'x' = ignored
};

inline std::vector<TagLayout> tag_layout(RunScheme s) {
    switch (s) {
    case RunScheme::GBoNd: return {{"psi", "00"}, {"rho_psi", "10"}, {"eta_psi", "x1"}};
    case RunScheme::BoNd: return {{"psi", "0"}, {"rho_psi", "1"}};
    case RunScheme::Naimark: return {{"psi", "0"}};
    case RunScheme::Exact: return {{"psi", ""}, {"rho_psi", ""}, {"eta_psi", ""}};
    }
    return {};
}

inline int ancilla_count(RunScheme s) {
    return s == RunScheme::GBoNd ? 2 : (s == RunScheme::Exact ? 0 : 1);
}

/// Sum of |amplitude|^2 over outcomes whose ancilla bits match `pattern`.
inline double branch_probability(const StateVector &s, std::string_view pattern) {
    const int n = s.n_qubits();
    double p = 0.0;
    for (Eigen::Index i = 0; i < s.dim(); ++i) {
        const std::string bits = bitstring(static_cast<unsigned>(i), n);
        bool keep = true;
        for (std::size_t a = 0; a < pattern.size(); ++a) {
            if (pattern[a] != 'x' && bits[a + 1] != pattern[a]) {
                keep = false;
            }
        }
        if (keep) {
            p += std::norm(s.amps()(i));
        }
    }
    return p;
}

/// Task key for grid point (ri, ti) under `seed`; the basis index is the stream.
inline std::uint64_t task_key(std::uint64_t seed, std::size_t ri, std::size_t ti) {
    return CounterRng::combine(seed, CounterRng::combine(ri, ti));
}

inline double bloch_distance(const BlochVector &a, const BlochVector &b) {
    return std::max({std::abs(a.x - b.x), std::abs(a.y - b.y), std::abs(a.z - b.z)});
}

// ---------------------------------------------------------------------------
// per-r preparation
// ---------------------------------------------------------------------------

/// Grid with spacing <= step whose every `stride`-th point is an output point.
struct FineGrid {
    std::vector<double> t;
    std::size_t stride = 1;
};

inline FineGrid fine_grid(const std::vector<double> &grid, double step) {
    FineGrid fg;
    const double dt = (grid.back() - grid.front()) / static_cast<double>(grid.size() - 1);
    fg.stride = static_cast<std::size_t>(std::ceil(dt / step - 1e-9));
    fg.stride = std::max<std::size_t>(fg.stride, 1);
    fg.t = linspace(grid.front(), grid.back(), (grid.size() - 1) * fg.stride + 1);
    return fg;
}

struct RContext {
    Hamiltonian h;
    RSummary summary;
    std::vector<double> h_hermiticity; // per output point
};

inline RContext prepare_r(const ExperimentConfig &cfg, double r, const std::vector<double> &grid) {
    RContext ctx{Hamiltonian::two_level(r), {}, {}};
    RSummary &s = ctx.summary;
    s.r = r;
    s.period = metric_period(ctx.h);
    s.naimark_prefactor = naimark_prefactor(ctx.h);
    s.naimark_onset = naimark_onset(ctx.h, grid, 1.0);
    s.naimark_onset_k = naimark_onset(ctx.h, grid, s.naimark_prefactor);

    // h(t) needs eta-dot, so the trajectory lives on a grid no coarser than ode_step
    const FineGrid fg = fine_grid(grid, cfg.ode_step);
    const MetricTrajectory tr = build_trajectory(ctx.h, fg.t);
    for (std::size_t k = 0; k < tr.size(); ++k) {
        s.max_h_hermiticity = std::max(s.max_h_hermiticity, hermiticity_defect(tr.h[k]));
        s.max_u_h_unitarity = std::max(s.max_u_h_unitarity, unitarity_defect(tr.u_h[k]));
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        ctx.h_hermiticity.push_back(hermiticity_defect(tr.h[i * fg.stride]));
    }

    // RK4 against the closed form
    const std::vector<Matrix> rk = metric_ode_evolve(ctx.h, grid, cfg.ode_step);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Matrix closed = metric_closed_form(ctx.h, grid[i], grid.front());
        s.rk4_residual = std::max(s.rk4_residual, (rk[i] - closed).cwiseAbs().maxCoeff());
        const Vector psi = propagator(ctx.h, grid[i], grid.front()) * cfg.psi0;
        s.ode_norm_defect = std::max(s.ode_norm_defect, std::abs(psi.dot(rk[i] * psi).real() - 1.0));
    }
    return ctx;
}

// ---------------------------------------------------------------------------
// per-point simulation
// ---------------------------------------------------------------------------

struct SimulatedPoint {
    std::optional<StateVector> state;
    DilatedTarget target;
};

inline SimulatedPoint simulate_point(const ExperimentConfig &cfg, const RContext &ctx, double t,
                                     PointResult &pr) {
    const Hamiltonian &h = ctx.h;
    const double t0 = cfg.t0;
    const Matrix rho = metric_closed_form(h, t, t0);
    const Vector psi = propagator(h, t, t0) * cfg.psi0;
    const bool uni = is_unimodular_two_level(h);
    SimulatedPoint sp;
    switch (cfg.scheme) {
    case RunScheme::GBoNd: {
        const DilationOperator op = gbond_canonical_u_tot(h, t, t0);
        pr.unitarity = op.unitarity;
        sp.state = apply_unitary(StateVector(gbond_start_state(cfg.psi0)), op.matrix);
        sp.target = gbond_target(psi, rho, uni);
        break;
    }
    case RunScheme::BoNd: {
        const DilationOperator op = bond_u_tot(h, t, t0);
        pr.unitarity = op.unitarity;
        sp.state = apply_unitary(StateVector(bond_start_state(cfg.psi0)), op.matrix);
        sp.target = bond_target(psi, rho, uni);
        break;
    }
    case RunScheme::Naimark: {
        const double k = ctx.summary.naimark_prefactor;
        if (pr.naimark_valid) {
            const Vector v = naimark_dilated_state(psi, rho, t, k);
            sp.state = StateVector(v / v.norm(), 1e-8);
            sp.target = naimark_state(psi, rho, t, k);
        }
        break;
    }
    case RunScheme::Exact:
        break;
    }
    return sp;
}

inline void sample_rows(const ExperimentConfig &cfg, const StateVector &state,
                        const std::vector<TagLayout> &layout, PointResult &pr) {
    const int anc = ancilla_count(cfg.scheme);
    const std::array<char, 3> paulis{'X', 'Y', 'Z'};
    for (std::uint64_t seed : cfg.seed_list()) {
        const std::uint64_t key = task_key(seed, pr.r_index, pr.t_index);
        std::array<ShotRecord, 3> recs;
        for (std::size_t b = 0; b < 3; ++b) {
            const std::string basis = std::string(1, paulis[b]) + std::string(static_cast<std::size_t>(anc), 'Z');
            recs[b] = sample_shots(state, basis, cfg.shots, key, b);
        }
        for (const TagLayout &tl : layout) {
            Row row;
            row.r = pr.r;
            row.t = pr.t;
            row.tag = tl.tag;
            row.seed = seed;
            row.exact = pr.exact.at(tl.tag);
            row.p_branch_exact = branch_probability(state, tl.postselect);
            std::array<double, 3> v{};
            std::array<double, 3> e{};
            for (std::size_t b = 0; b < 3; ++b) {
                try {
                    const PauliEstimate est = estimate_pauli(recs[b], 0, tl.postselect, row.p_branch_exact);
                    v[b] = est.value;
                    e[b] = est.std_error;
                    row.n_post[b] = est.n_post;
                    if (b == 2) {
                        row.p_branch = est.p_branch;
                        row.n_eff = est.n_eff;
                        row.n_eff_exact = est.n_eff_exact.value_or(0.0);
                    }
                } catch (const Error &err) {
                    if (err.code() != ErrorCode::EmptyBranch) {
                        throw;
                    }
                    v[b] = std::numeric_limits<double>::quiet_NaN();
                    e[b] = std::numeric_limits<double>::quiet_NaN();
                    if (b == 2) {
                        row.p_branch = 0.0;
                    }
                }
            }
            row.estimate = {v[0], v[1], v[2]};
            row.std_error = {e[0], e[1], e[2]};
            row.flagged = !(within_sigma(row, 0, 5.0) && within_sigma(row, 1, 5.0) && within_sigma(row, 2, 5.0));
            pr.rows.push_back(std::move(row));
        }
    }
}

/// Metric reconstruction from a BoNd state: exact amplitudes and nine-basis shot tomography.
inline void reconstruct_metric(const ExperimentConfig &cfg, const StateVector &bond, PointResult &pr) {
    const MetricEstimate exact = metric_from_bond_state(bond.amps());
    pr.rho_pipeline = exact.rho_normalized;
    pr.residual_pipeline = exact.residual;

    const std::uint64_t key = CounterRng::combine(task_key(cfg.seed_list().front(), pr.r_index, pr.t_index),
                                                  CounterRng::hash("tomography"));
    std::vector<ShotRecord> recs;
    std::uint64_t stream = 0;
    for (const std::string &b : two_qubit_bases()) {
        recs.push_back(sample_shots(bond, b, cfg.tomography_shots, key, stream++));
    }
    try {
        const PureStateEstimate est = two_qubit_pure_tomography(two_qubit_expectations(recs));
        const MetricEstimate m = metric_from_bond_state(est.state, EstimateSource::Shots);
        pr.rho_shots = m.rho_normalized;
        pr.residual_shots = m.residual;
    } catch (const Error &err) {
        pr.warnings.push_back("tomography failed at r = " + std::to_string(pr.r) +
                              ", t = " + std::to_string(pr.t) + ": " + err.what());
    }
}

inline PointResult run_point(const ExperimentConfig &cfg, const RContext &ctx, std::size_t ri,
                             std::size_t ti, double t) {
    PointResult pr;
    pr.r_index = ri;
    pr.t_index = ti;
    pr.r = ctx.summary.r;
    pr.t = t;
    const Hamiltonian &h = ctx.h;
    const Matrix rho = metric_closed_form(h, t, cfg.t0);
    const PsiPair triple = psi_triple(h, t, cfg.psi0, cfg.t0);
    pr.exact = three_state_expectations(triple);
    pr.rho_normalized = rho / rho.trace().real();
    pr.det_defect = std::abs(rho.determinant().real() - 1.0);
    pr.metric_norm_defect = std::abs(triple.psi.dot(triple.rho_psi).real() - 1.0);
    pr.h_hermiticity = ctx.h_hermiticity[ti];
    pr.gbond_literal_defect = gbond_literal_zeta(metric_g(rho)).unitarity;
    pr.naimark_margin = naimark_margin(rho, ctx.summary.naimark_prefactor);
    pr.naimark_valid = pr.naimark_margin >= -1e-10;

    const std::vector<TagLayout> layout = tag_layout(cfg.scheme);
    if (cfg.scheme == RunScheme::Exact) {
        for (const TagLayout &tl : layout) {
            Row row;
            row.r = pr.r;
            row.t = t;
            row.tag = tl.tag;
            row.seed = cfg.seed_list().front();
            row.exact = pr.exact.at(tl.tag);
            row.estimate = row.exact;
            pr.rows.push_back(std::move(row));
        }
        return pr;
    }

    const SimulatedPoint sp = simulate_point(cfg, ctx, t, pr);
    if (!sp.state) {
        pr.warnings.push_back("naimark: dilation invalid at r = " + std::to_string(pr.r) +
                              ", t = " + std::to_string(t) + " (min eig of k rho - I = " +
                              std::to_string(pr.naimark_margin) + ")");
        return pr;
    }
    // simulated post-selected branches against the closed-form targets
    for (const TagLayout &tl : layout) {
        std::string outcome = tl.postselect;
        std::replace(outcome.begin(), outcome.end(), 'x', '0');
        const PostSelection ps = postselect(*sp.state, outcome);
        pr.branch_mismatch = std::max(pr.branch_mismatch,
                                      bloch_distance(bloch_of(ps.system_state), pr.exact.at(tl.tag)));
    }
    sample_rows(cfg, *sp.state, layout, pr);
    if (cfg.scheme == RunScheme::BoNd) {
        reconstruct_metric(cfg, *sp.state, pr);
    }
    return pr;
}

/// `threads` = 0 picks worker_count(); output does not depend on it.
inline RunReport run(const ExperimentConfig &cfg, std::size_t threads = 0) {
    validate(cfg);
    RunReport rep;
    rep.config = cfg;
    rep.grid = cfg.grid();
    const std::size_t nr = cfg.r_values.size();
    const std::size_t nt = rep.grid.size();

    std::vector<RContext> ctx(nr);
    parallel_for(nr, [&](std::size_t i) { ctx[i] = prepare_r(cfg, cfg.r_values[i], rep.grid); }, threads);

    rep.points.resize(nr * nt);
    parallel_for(nr * nt, [&](std::size_t i) {
        const std::size_t ri = i / nt;
        const std::size_t ti = i % nt;
        rep.points[i] = run_point(cfg, ctx[ri], ri, ti, rep.grid[ti]);
    }, threads);

    for (std::size_t i = 0; i < nr; ++i) {
        rep.per_r.push_back(ctx[i].summary);
        const RSummary &s = ctx[i].summary;
        if (cfg.scheme == RunScheme::Naimark && s.naimark_onset_k) {
            rep.warnings.push_back("naimark: r = " + std::to_string(s.r) +
                                   " leaves the validity region at t = " + std::to_string(*s.naimark_onset_k) +
                                   "; later points are not sampled");
        }
    }
    for (const PointResult &p : rep.points) {
        for (const std::string &w : p.warnings) {
            if (cfg.scheme != RunScheme::Naimark || w.rfind("naimark", 0) != 0) {
                rep.warnings.push_back(w);
            }
        }
    }
    return rep;
}

} // namespace nhd::experiment
