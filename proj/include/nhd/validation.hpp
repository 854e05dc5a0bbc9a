#pragma once

/**
 * @file
 * Invariant suite behind `nhd_cli validate`. Each check yields one
 * table line; warnings are expected diagnostics and do not fail the run.
 */

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "nhd/experiment/output.hpp"

namespace nhd::validation {

enum class Status { Pass, Fail, Warn };

struct Check {
    std::string name;
    Status status = Status::Pass;
    std::string detail;
    double seconds = 0.0;
};

inline std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

inline Status pass_if(bool ok) { return ok ? Status::Pass : Status::Fail; }

inline Vector ket0() { return Vector::Unit(2, 0); }

// ---------------------------------------------------------------------------

inline Check check_spectrum() {
    Check c{"spectrum of sigma_x + i r sigma_z", Status::Pass, ""};
    double worst = 0.0;
    for (double r : {0.0, 0.6, 0.9}) {
        const auto [a, b] = eigenvalues_2x2(Hamiltonian::two_level(r).matrix);
        const double e = std::sqrt(1.0 - r * r);
        const double lo = std::min(a.real(), b.real());
        const double hi = std::max(a.real(), b.real());
        worst = std::max({worst, std::abs(lo + e), std::abs(hi - e), std::abs(a.imag()), std::abs(b.imag())});
    }
    const auto [a, b] = eigenvalues_2x2(Hamiltonian::two_level(1.0).matrix);
    const double ep = std::max(std::abs(a), std::abs(b));
    c.status = pass_if(worst <= 1e-12 && ep <= 1e-12);
    c.detail = "max error " + sci(worst) + ", |lambda| at r = 1: " + sci(ep);
    return c;
}

/// RK4 vs closed form and the metric norm of psi(t), t in [0, 10], step 1e-3.
inline std::vector<Check> check_metric_ode() {
    Check ode{"RK4 metric vs closed form (1e-8)", Status::Pass, ""};
    Check norm{"metric norm <psi|rho|psi> = 1 (1e-8)", Status::Pass, ""};
    const std::vector<double> grid = linspace(0.0, 10.0, 101);
    bool ok_ode = true;
    bool ok_norm = true;
    for (double r : {0.6, 1.0, 1.2}) {
        const Hamiltonian h = Hamiltonian::two_level(r);
        const std::vector<Matrix> rk = metric_ode_evolve(h, grid, 1e-3);
        double e = 0.0;
        double n = 0.0;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            e = std::max(e, (rk[k] - metric_closed_form(h, grid[k])).cwiseAbs().maxCoeff());
            const Vector psi = propagator(h, grid[k]) * ket0();
            n = std::max(n, std::abs(psi.dot(rk[k] * psi).real() - 1.0));
        }
        ok_ode = ok_ode && e <= 1e-8;
        ok_norm = ok_norm && n <= 1e-8;
        ode.detail += "r=" + sci(r) + ": " + sci(e) + "  ";
        norm.detail += "r=" + sci(r) + ": " + sci(n) + "  ";
    }
    ode.status = pass_if(ok_ode);
    norm.status = pass_if(ok_norm);
    return {ode, norm};
}

/// Replacing H^dagger by H in the update must break the metric norm.
inline std::vector<Check> check_mutations() {
    const Hamiltonian h = Hamiltonian::two_level(0.6);
    const std::vector<double> grid = linspace(0.0, 5.0, 51);
    auto norm_defect = [&](const std::vector<Matrix> &rho) {
        double n = 0.0;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const Vector psi = propagator(h, grid[k]) * ket0();
            n = std::max(n, std::abs(psi.dot(rho[k] * psi).real() - 1.0));
        }
        return n;
    };
    const Matrix hm = h.matrix;
    auto wrong = [&](double, const Matrix &rho) -> Matrix { return -kI * (hm * rho - rho * hm); };
    const double bad = norm_defect(evolve_metric(2, grid, 1e-3, wrong));
    const double nosym = norm_defect(metric_ode_evolve(h, grid, 1e-3, MetricOdeOptions{false}));

    Check a{"mutation: H for H^dagger in the update is caught", pass_if(bad > 1e-3),
            "norm defect " + sci(bad)};
    // without symmetrization RK4 on this linear equation stays Hermitian to rounding,
    // so the norm check has nothing to catch; recorded for reference
    Check b{"mutation: unsymmetrized update (reference)", Status::Warn,
            "norm defect " + sci(nosym) + ", below tolerance, so not detectable by this invariant"};
    return {a, b};
}

inline Check check_stationary() {
    Check c{"period average at r = 0.6 and pseudo-Hermiticity", Status::Pass, ""};
    const Hamiltonian h = Hamiltonian::two_level(0.6);
    const double period = *metric_period(h);
    const std::vector<double> grid = linspace(0.0, period, 4001);
    std::vector<Matrix> rho;
    for (double t : grid) {
        rho.push_back(metric_closed_form(h, t));
    }
    const Matrix avg = time_averaged_metric(rho, grid, 0.0, period, AverageNormalization::UnitDeterminant);
    const Matrix target = 1.25 * pauli::identity() + 0.75 * pauli::y();
    const double e = (avg - target).cwiseAbs().maxCoeff();
    const double res = pseudo_hermiticity_residual(h, avg).norm();
    c.status = pass_if(e <= 1e-4 && res <= 1e-6);
    c.detail = "average error " + sci(e) + ", |H^dag M - M H| " + sci(res);
    return c;
}

inline Check check_exceptional_point() {
    Check c{"tr rho = 2 + 4t^2 at r = 1; growth slope at r = 1.2", Status::Pass, ""};
    const Hamiltonian ep = Hamiltonian::two_level(1.0);
    double e = 0.0;
    for (double t : linspace(0.0, 10.0, 101)) {
        e = std::max(e, std::abs(metric_closed_form(ep, t).trace().real() - (2.0 + 4.0 * t * t)));
    }
    const Hamiltonian h = Hamiltonian::two_level(1.2);
    std::vector<double> ts, ys;
    for (double t : linspace(5.0, 10.0, 51)) {
        ts.push_back(t);
        ys.push_back(std::log(eigh(metric_closed_form(h, t)).eigenvalues.maxCoeff()));
    }
    const double slope = experiment::ls_slope(ts, ys);
    const double expected = 2.0 * std::sqrt(0.44);
    const double rel = std::abs(slope / expected - 1.0);
    c.status = pass_if(e <= 1e-8 && rel <= 0.05);
    c.detail = "trace error " + sci(e) + ", slope " + sci(slope) + " vs " + sci(expected);
    return c;
}

inline std::vector<Check> check_dilations() {
    Check u{"BoNd / GBoNd unitarity on the figure grid (1e-9)", Status::Pass, ""};
    double worst = 0.0;
    for (double r : {0.6, 0.9, 1.0, 1.2}) {
        const Hamiltonian h = Hamiltonian::two_level(r);
        for (double t : linspace(0.0, 5.0, 101)) {
            worst = std::max({worst, bond_u_tot(h, t).unitarity, gbond_canonical_u_tot(h, t).unitarity});
        }
    }
    u.status = pass_if(worst <= 1e-9);
    u.detail = "max defect " + sci(worst);

    const Matrix rho = metric_closed_form(Hamiltonian::two_level(0.6), 1.0);
    const double lit = gbond_literal_zeta(metric_g(rho)).unitarity;
    Check l{"literal two-ancilla operator is not unitary (r = 0.6, t = 1)", pass_if(lit > 1e-6),
            "defect " + sci(lit)};

    Check n{"Naimark boundary", Status::Pass, ""};
    const Hamiltonian h12 = Hamiltonian::two_level(1.2);
    const auto onset = naimark_onset(h12, linspace(0.0, 5.0, 101));
    const Hamiltonian h06 = Hamiltonian::two_level(0.6);
    const double k = naimark_prefactor(h06);
    const auto onset06 = naimark_onset(h06, linspace(0.0, *metric_period(h06), 201), k);
    if (!onset || *onset > 5.0 || onset06) {
        n.status = Status::Fail;
    } else {
        n.status = Status::Warn;
    }
    n.detail = std::string("r = 1.2 dilation invalid from t = ") + (onset ? sci(*onset) : "never") +
               "; r = 0.6 valid over a period with k = " + sci(k);
    return {u, l, n};
}

inline Check check_branches() {
    Check c{"branch probabilities at r = 1, t = 1", Status::Pass, ""};
    const Hamiltonian h = Hamiltonian::two_level(1.0);
    const StateVector b = apply_unitary(StateVector(bond_start_state(ket0())), bond_u_tot(h, 1.0).matrix);
    const StateVector g =
        apply_unitary(StateVector(gbond_start_state(ket0())), gbond_canonical_u_tot(h, 1.0).matrix);
    double e = std::abs(experiment::branch_probability(b, "0") - 5.0 / 6.0);
    e = std::max(e, std::abs(experiment::branch_probability(b, "1") - 1.0 / 6.0));
    const std::pair<const char *, double> want[] = {{"00", 5.0 / 12}, {"10", 1.0 / 12}, {"01", 0.25}, {"11", 0.25}};
    for (const auto &[bits, p] : want) {
        e = std::max(e, std::abs(experiment::branch_probability(g, bits) - p));
    }
    c.status = pass_if(e <= 1e-9);
    c.detail = "max error " + sci(e);
    return c;
}

inline experiment::ExperimentConfig default_config() {
    experiment::ExperimentConfig cfg;
    cfg.out_dir = "validate-out";
    return cfg;
}

inline std::vector<Check> check_pipeline() {
    using namespace experiment;
    std::vector<Check> out;
    ExperimentConfig cfg = default_config();
    const RunReport g = run(cfg);
    std::size_t in = 0, total = 0, sx_in = 0, sx_total = 0;
    double mismatch = 0.0, h_herm = 0.0;
    for (const PointResult &p : g.points) {
        mismatch = std::max(mismatch, p.branch_mismatch);
        h_herm = std::max(h_herm, p.h_hermiticity);
        for (const Row &row : p.rows) {
            for (int k = 0; k < 3; ++k) {
                in += within_sigma(row, k, 3.0) ? 1 : 0;
                ++total;
            }
            sx_in += within_sigma(row, 0, 3.0) ? 1 : 0;
            ++sx_total;
        }
    }
    const double cov = static_cast<double>(in) / static_cast<double>(total);
    const double sx_cov = static_cast<double>(sx_in) / static_cast<double>(sx_total);
    out.push_back({"GBoNd shots within 3 sigma (>= 99%)", pass_if(cov >= 0.99 && sx_cov >= 0.99),
                   "coverage " + sci(cov) + ", sx " + sci(sx_cov)});
    out.push_back({"simulated branches match closed forms (1e-9)", pass_if(mismatch <= 1e-9),
                   "max " + sci(mismatch)});
    out.push_back({"h(t) Hermitian on the figure grid (1e-6)", pass_if(h_herm <= 1e-6), "max " + sci(h_herm)});

    cfg.scheme = RunScheme::BoNd;
    const RunReport b = run(cfg);
    double exact = 0.0, shots = 0.0;
    bool complete = true;
    for (const PointResult &p : b.points) {
        exact = std::max(exact, (*p.rho_pipeline - p.rho_normalized).cwiseAbs().maxCoeff());
        if (p.rho_shots) {
            shots = std::max(shots, (*p.rho_shots - p.rho_normalized).cwiseAbs().maxCoeff());
        } else {
            complete = false;
        }
    }
    out.push_back({"metric reconstruction, exact pipeline (1e-8)", pass_if(exact <= 1e-8), "max " + sci(exact)});
    out.push_back({"metric reconstruction, 1e4 shots per basis (1e-2)", pass_if(complete && shots <= 1e-2),
                   "max " + sci(shots) + (complete ? "" : ", some points failed")});

    // same rows again, on a different number of workers
    const std::string first = figure2_csv(g);
    const std::string second = figure2_csv(run(default_config(), 3));
    out.push_back({"figure2 CSV reproducible across thread counts", pass_if(first == second),
                   std::to_string(first.size()) + " bytes"});
    return out;
}

inline Check check_ep_asymptote() {
    Check c{"metric-frame state at r = 1, t = 10: |sy| <= 0.05, sz <= -0.95", Status::Pass, ""};
    const PsiPair p = psi_triple(Hamiltonian::two_level(1.0), 10.0, ket0());
    const BlochVector b = bloch_of(p.eta_psi);
    c.status = pass_if(std::abs(b.y) <= 0.05 && b.z <= -0.95);
    c.detail = "sy = " + sci(b.y) + ", sz = " + sci(b.z);
    return c;
}

/// The whole suite, in table order.
inline std::vector<Check> run_all() {
    std::vector<Check> out;
    auto timed = [&](auto &&fn) {
        const auto t0 = std::chrono::steady_clock::now();
        auto res = fn();
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if constexpr (std::is_same_v<std::decay_t<decltype(res)>, Check>) {
            res.seconds = s;
            out.push_back(res);
        } else {
            for (auto &c : res) {
                c.seconds = s / static_cast<double>(res.size());
                out.push_back(c);
            }
        }
    };
    timed(check_spectrum);
    timed(check_metric_ode);
    timed(check_mutations);
    timed(check_stationary);
    timed(check_exceptional_point);
    timed(check_dilations);
    timed(check_branches);
    timed(check_ep_asymptote);
    timed(check_pipeline);
    return out;
}

inline bool all_passed(const std::vector<Check> &checks) {
    return std::none_of(checks.begin(), checks.end(), [](const Check &c) { return c.status == Status::Fail; });
}

inline void print_table(const std::vector<Check> &checks, std::FILE *out = stdout) {
    for (const Check &c : checks) {
        const char *s = c.status == Status::Pass ? "PASS" : (c.status == Status::Fail ? "FAIL" : "WARN");
        std::fprintf(out, "%s  %-62s %7.2fs  %s\n", s, c.name.c_str(), c.seconds, c.detail.c_str());
    }
}

} // namespace nhd::validation
