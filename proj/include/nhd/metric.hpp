#pragma once

/**
 * @file
 * Dynamical metric rho(t) of a constant non-Hermitian Hamiltonian, its
 * principal root eta(t), the Hermitian counterpart h(t), propagators and
 * metric-formalism observables. The initial condition is always
 * rho(t0) = I.
 */

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nhd/error.hpp"
#include "nhd/linalg.hpp"
#include "nhd/rk4.hpp"

namespace nhd {

struct Hamiltonian {
    Matrix matrix;
    std::optional<double> r;
    bool traceless = false;

    /// sigma_x + i r sigma_z
    static Hamiltonian two_level(double r) {
        Hamiltonian h;
        h.matrix = pauli::x() + kI * r * pauli::z();
        h.r = r;
        h.traceless = true;
        return h;
    }

    static Hamiltonian from_matrix(Matrix m) {
        require_square(m, "Hamiltonian");
        Hamiltonian h;
        h.traceless = std::abs(m.trace()) <= 1e-12;
        h.matrix = std::move(m);
        return h;
    }

    [[nodiscard]] Matrix adjoint() const { return matrix.adjoint(); }
    [[nodiscard]] Eigen::Index dim() const { return matrix.rows(); }
};

/// U_H(t, t0) = e^{-iH(t - t0)}; closed form for traceless 2x2 H.
inline Matrix propagator(const Hamiltonian &h, double t, double t0 = 0.0) {
    if (h.traceless && h.dim() == 2) {
        return two_level_propagator(h.matrix, t - t0);
    }
    return expm(-kI * h.matrix, t - t0);
}

inline bool is_unimodular_two_level(const Hamiltonian &h) { return h.traceless && h.dim() == 2; }

/// rho(t) = U_{H^dagger}(t, t0) U_H(t0, t).
inline Matrix metric_closed_form(const Hamiltonian &h, double t, double t0 = 0.0) {
    // U_H(t0, t) = e^{+iH(t - t0)} and U_{H^dagger}(t, t0) is its adjoint.
    const Matrix back = is_unimodular_two_level(h) ? two_level_propagator(h.matrix, t0 - t)
                                                   : expm(kI * h.matrix, t - t0);
    return hermitian_part(back.adjoint() * back);
}

/// eta and eta^{-1} of a metric of h; the det-1 closed form for traceless 2x2 H.
inline HpdRoot metric_root(const Hamiltonian &h, const Matrix &rho) {
    return is_unimodular_two_level(h) ? unimodular_root_2x2(rho) : hpd_root(rho);
}

/**
 * @brief U_h(t, t0) = eta(t) U_H(t, t0), with rho(t0) = I.
 *
 * For traceless 2x2 H, det U_H = 1 and eta = (rho + I) / sqrt(tr rho + 2)
 * with rho = adj(U_H)^dagger adj(U_H), which collapses to
 * (U_H + adj(U_H)^dagger) / sqrt(|U_H|_F^2 + 2). That form is unitary to
 * rounding even where rho is badly conditioned.
 */
inline Matrix hermitian_frame_propagator(const Hamiltonian &h, double t, double t0 = 0.0) {
    const Matrix u = propagator(h, t, t0);
    if (is_unimodular_two_level(h)) {
        return (u + adjugate_2x2(u).adjoint()) / std::sqrt(u.squaredNorm() + 2.0);
    }
    return principal_sqrt_hpd(metric_closed_form(h, t, t0)) * u;
}

struct MetricOdeOptions {
    bool symmetrize = true;
};

/**
 * @brief Integrate a metric equation rho' = rhs(t, rho) from rho(grid[0]) = I.
 *
 * The rhs is a template parameter so that tests can feed deliberately broken
 * updates through the same driver.
 */
template <class Rhs>
std::vector<Matrix> evolve_metric(Eigen::Index dim, std::span<const double> grid, double step,
                                  Rhs &&rhs, MetricOdeOptions opts = {}) {
    if (!(step > 0.0) || !std::isfinite(step)) {
        throw Error(ErrorCode::InvalidStep, "ODE step must be positive", step);
    }
    std::vector<Matrix> out;
    out.reserve(grid.size());
    if (grid.empty()) {
        return out;
    }
    Matrix rho = Matrix::Identity(dim, dim);
    out.push_back(rho);
    auto post = [&](Matrix &m) {
        if (opts.symmetrize) {
            m = hermitian_part(m);
        }
    };
    for (std::size_t k = 1; k < grid.size(); ++k) {
        rho = rk4_advance(rho, grid[k - 1], grid[k], step, rhs, post);
        out.push_back(rho);
    }
    return out;
}

/// RK4 solution of i rho' = H^dagger rho - rho H on the grid.
inline std::vector<Matrix> metric_ode_evolve(const Hamiltonian &h, std::span<const double> grid,
                                             double step, MetricOdeOptions opts = {}) {
    const Matrix hm = h.matrix;
    const Matrix hd = h.adjoint();
    auto rhs = [&](double, const Matrix &rho) -> Matrix { return -kI * (hd * rho - rho * hm); };
    return evolve_metric(h.dim(), grid, step, rhs, opts);
}

namespace detail {

inline double uniform_spacing(std::span<const double> grid) {
    if (grid.size() < 2) {
        throw Error(ErrorCode::InvalidInput, "finite differences need at least two grid points");
    }
    const double dt = (grid.back() - grid.front()) / static_cast<double>(grid.size() - 1);
    if (!(dt > 0.0)) {
        throw Error(ErrorCode::InvalidInput, "grid must be increasing");
    }
    for (std::size_t k = 1; k < grid.size(); ++k) {
        if (std::abs((grid[k] - grid[k - 1]) - dt) > 1e-9 * std::max(1.0, dt)) {
            throw Error(ErrorCode::InvalidInput, "finite differences need a uniform grid");
        }
    }
    return dt;
}

} // namespace detail

/**
 * @brief Time derivative of sampled matrices on a uniform grid.
 *
 * Fourth-order stencils: centered in the interior, off-centered at the first
 * and last two points. Short grids fall back to second order (three or four
 * points) or a plain difference (two points).
 */
inline std::vector<Matrix> finite_difference(std::span<const Matrix> values,
                                             std::span<const double> grid) {
    if (values.size() != grid.size()) {
        throw Error(ErrorCode::DimensionMismatch, "values and grid differ in length");
    }
    const double dt = detail::uniform_spacing(grid);
    const std::size_t n = values.size();
    std::vector<Matrix> d(n);
    if (n == 2) {
        d[0] = d[1] = (values[1] - values[0]) / dt;
        return d;
    }
    if (n < 5) {
        d[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dt);
        d[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * dt);
        for (std::size_t k = 1; k + 1 < n; ++k) {
            d[k] = (values[k + 1] - values[k - 1]) / (2.0 * dt);
        }
        return d;
    }
    const double w = 12.0 * dt;
    d[0] = (-25.0 * values[0] + 48.0 * values[1] - 36.0 * values[2] + 16.0 * values[3] -
            3.0 * values[4]) / w;
    d[1] = (-3.0 * values[0] - 10.0 * values[1] + 18.0 * values[2] - 6.0 * values[3] +
            values[4]) / w;
    for (std::size_t k = 2; k + 2 < n; ++k) {
        d[k] = (values[k - 2] - 8.0 * values[k - 1] + 8.0 * values[k + 1] - values[k + 2]) / w;
    }
    d[n - 2] = (3.0 * values[n - 1] + 10.0 * values[n - 2] - 18.0 * values[n - 3] +
                6.0 * values[n - 4] - values[n - 5]) / w;
    d[n - 1] = (25.0 * values[n - 1] - 48.0 * values[n - 2] + 36.0 * values[n - 3] -
                16.0 * values[n - 4] + 3.0 * values[n - 5]) / w;
    return d;
}

struct EtaSeries {
    std::vector<Matrix> eta;
    std::vector<Matrix> eta_inv;
    std::vector<Matrix> eta_dot;
};

/**
 * eta = sqrt(rho) with eta' by finite differences on the grid. `unimodular`
 * selects the 2x2 det-1 root, which is the right choice for traceless H.
 */
inline EtaSeries eta_and_derivative(std::span<const Matrix> rho_grid, std::span<const double> grid,
                                    bool unimodular = false) {
    EtaSeries out;
    out.eta.reserve(rho_grid.size());
    out.eta_inv.reserve(rho_grid.size());
    for (const Matrix &rho : rho_grid) {
        HpdRoot root = unimodular ? unimodular_root_2x2(rho) : hpd_root(rho);
        out.eta.push_back(std::move(root.root));
        out.eta_inv.push_back(std::move(root.inv_root));
    }
    if (rho_grid.size() == 1) {
        out.eta_dot.push_back(Matrix::Zero(rho_grid[0].rows(), rho_grid[0].cols()));
    } else {
        out.eta_dot = finite_difference(out.eta, grid);
    }
    return out;
}

/// h = eta H eta^{-1} + i eta' eta^{-1}
inline Matrix hermitian_counterpart(const Hamiltonian &h, const Matrix &eta, const Matrix &eta_inv,
                                    const Matrix &eta_dot) {
    return eta * h.matrix * eta_inv + kI * eta_dot * eta_inv;
}

/// U_h(t, t0) = eta(t) U_H(t, t0) eta^{-1}(t0)
inline Matrix u_h_from_mapping(const Hamiltonian &h, const Matrix &eta_t, const Matrix &eta_t0,
                               double t, double t0 = 0.0) {
    return eta_t * propagator(h, t, t0) * eta_t0.inverse();
}

/// e^{beta sigma_y} with tanh(beta) = r, the pseudo-Hermiticity metric of sigma_x + i r sigma_z.
inline Matrix stationary_metric_analytic(double r) {
    if (!(std::abs(r) < 1.0)) {
        throw Error(ErrorCode::OutsidePTSymmetric,
                    "stationary metric needs |r| < 1 (got " + std::to_string(r) + ")", r);
    }
    const double beta = std::atanh(r);
    return std::cosh(beta) * pauli::identity() + std::sinh(beta) * pauli::y();
}

/// Period of rho(t) for a traceless 2x2 H with real spectrum +-E: pi / E.
inline std::optional<double> metric_period(const Hamiltonian &h) {
    if (!h.traceless || h.dim() != 2) {
        return std::nullopt;
    }
    const Complex e2 = -(h.matrix(0, 0) * h.matrix(1, 1) - h.matrix(0, 1) * h.matrix(1, 0));
    if (std::abs(e2.imag()) > 1e-12 || e2.real() <= 1e-12) {
        return std::nullopt;
    }
    return std::numbers::pi / std::sqrt(e2.real());
}

enum class AverageNormalization {
    Mean,            ///< (1 / (t1 - t0)) * integral of rho
    UnitDeterminant, ///< the mean rescaled to det = 1
};

/**
 * @brief Trapezoidal time average of rho over [t0, t1].
 *
 * Both ends must coincide with grid points. The plain mean satisfies
 * H^dagger M - M H = i (rho(t1) - rho(t0)) / (t1 - t0) up to quadrature
 * error. Over one period of a PT-symmetric two-level H the mean is
 * cosh(beta) e^{beta sigma_y}; the unit-determinant form is e^{beta sigma_y}.
 */
inline Matrix time_averaged_metric(std::span<const Matrix> rho_grid, std::span<const double> grid,
                                   double t0, double t1,
                                   AverageNormalization norm = AverageNormalization::Mean) {
    if (rho_grid.size() != grid.size() || grid.empty()) {
        throw Error(ErrorCode::InvalidWindow, "metric grid is empty or mismatched");
    }
    if (!(t1 > t0)) {
        throw Error(ErrorCode::InvalidWindow, "averaging window must have t1 > t0");
    }
    const double scale = std::max(1.0, std::abs(grid.back()));
    auto locate = [&](double t) -> std::size_t {
        for (std::size_t k = 0; k < grid.size(); ++k) {
            if (std::abs(grid[k] - t) <= 1e-9 * scale) {
                return k;
            }
        }
        throw Error(ErrorCode::InvalidWindow, "window end " + std::to_string(t) + " is not on the grid",
                    t);
    };
    const std::size_t i0 = locate(t0);
    const std::size_t i1 = locate(t1);
    Matrix integral = Matrix::Zero(rho_grid[i0].rows(), rho_grid[i0].cols());
    for (std::size_t k = i0; k < i1; ++k) {
        integral += 0.5 * (grid[k + 1] - grid[k]) * (rho_grid[k] + rho_grid[k + 1]);
    }
    Matrix mean = integral / (grid[i1] - grid[i0]);
    if (norm == AverageNormalization::UnitDeterminant) {
        const double det = mean.determinant().real();
        if (!(det > 0.0)) {
            throw Error(ErrorCode::Singular, "averaged metric has non-positive determinant", det);
        }
        mean /= std::pow(det, 1.0 / static_cast<double>(mean.rows()));
    }
    return mean;
}

/// H^dagger M - M H; vanishes for a stationary (pseudo-Hermiticity) metric.
inline Matrix pseudo_hermiticity_residual(const Hamiltonian &h, const Matrix &metric) {
    return h.adjoint() * metric - metric * h.matrix;
}

/// <O>_m = <psi| eta O eta |psi>
inline Complex metric_expectation(const Matrix &op, const Vector &psi, const Matrix &eta) {
    return psi.dot(eta * op * eta * psi);
}

struct PsiPair {
    Vector psi;     // evolves under H
    Vector rho_psi; // evolves under H^dagger
    Vector eta_psi; // evolves under h, unit norm
};

inline void require_normalized(const Vector &psi, const char *what) {
    if (std::abs(psi.norm() - 1.0) > 1e-10) {
        throw Error(ErrorCode::InvalidInput, std::string(what) + " must be normalized",
                    psi.norm());
    }
}

inline PsiPair psi_triple(const Hamiltonian &h, double t, const Vector &psi0, double t0 = 0.0) {
    require_normalized(psi0, "initial state");
    const Vector psi = propagator(h, t, t0) * psi0;
    const Matrix rho = metric_closed_form(h, t, t0);
    const Matrix eta = metric_root(h, rho).root;
    return {psi, rho * psi, eta * psi};
}

/// Samples of the metric construction for one Hamiltonian on a time grid.
struct MetricTrajectory {
    std::vector<double> grid;
    std::vector<Matrix> rho;
    std::vector<Matrix> eta;
    std::vector<Matrix> eta_inv;
    std::vector<Matrix> eta_dot;
    std::vector<Matrix> h;
    std::vector<Matrix> u_H;
    std::vector<Matrix> u_h;
    std::vector<double> det_rho;

    [[nodiscard]] std::size_t size() const { return grid.size(); }
};

enum class MetricSource { ClosedForm, Ode };

inline MetricTrajectory build_trajectory(const Hamiltonian &h, std::vector<double> grid,
                                         MetricSource source = MetricSource::ClosedForm,
                                         double ode_step = 1e-3) {
    MetricTrajectory tr;
    tr.grid = std::move(grid);
    if (tr.grid.empty()) {
        return tr;
    }
    const double t0 = tr.grid.front();
    if (source == MetricSource::Ode) {
        tr.rho = metric_ode_evolve(h, tr.grid, ode_step);
    } else {
        tr.rho.reserve(tr.size());
        for (double t : tr.grid) {
            tr.rho.push_back(metric_closed_form(h, t, t0));
        }
    }
    EtaSeries es = eta_and_derivative(tr.rho, tr.grid, is_unimodular_two_level(h));
    tr.eta = std::move(es.eta);
    tr.eta_inv = std::move(es.eta_inv);
    tr.eta_dot = std::move(es.eta_dot);
    for (std::size_t k = 0; k < tr.size(); ++k) {
        const double t = tr.grid[k];
        tr.h.push_back(hermitian_counterpart(h, tr.eta[k], tr.eta_inv[k], tr.eta_dot[k]));
        tr.u_H.push_back(propagator(h, t, t0));
        tr.u_h.push_back(source == MetricSource::Ode ? Matrix(tr.eta[k] * tr.u_H.back())
                                                     : hermitian_frame_propagator(h, t, t0));
        tr.det_rho.push_back(tr.rho[k].determinant().real());
    }
    return tr;
}

/// `points` evenly spaced values covering [t0, t1].
inline std::vector<double> linspace(double t0, double t1, std::size_t points) {
    std::vector<double> g(points);
    if (points == 1) {
        g[0] = t0;
        return g;
    }
    for (std::size_t k = 0; k < points; ++k) {
        g[k] = t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(points - 1);
    }
    return g;
}

} // namespace nhd
