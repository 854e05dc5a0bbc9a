#pragma once

/**
 * @file
 * Dilations of the non-unitary metric root into unitaries on system plus
 * ancilla qubits: Naimark, the general scalar-C form, the one-ancilla BoNd
 * propagator and the two-ancilla GBoNd propagator.
 *
 * Register order is (system, a, b) with the system as the most significant
 * index. Ancilla outcome labels are written "a" or "ab".
 */

#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nhd/error.hpp"
#include "nhd/linalg.hpp"
#include "nhd/metric.hpp"

namespace nhd {

enum class Scheme { Naimark, GeneralC, BoNd, GBoNdLiteral, GBoNdCanonical };

inline std::string_view to_string(Scheme s) {
    switch (s) {
    case Scheme::Naimark: return "naimark";
    case Scheme::GeneralC: return "general_c";
    case Scheme::BoNd: return "bond";
    case Scheme::GBoNdLiteral: return "gbond_literal";
    case Scheme::GBoNdCanonical: return "gbond_canonical";
    }
    return "unknown";
}

struct DilationOperator {
    Scheme scheme = Scheme::GeneralC;
    Matrix matrix;
    double c_value = 0.0;
    double t = 0.0;
    double unitarity = 0.0; // Frobenius defect of matrix
    bool valid = true;
};

struct Branch {
    Vector state; // unnormalized system amplitudes
    double probability = 0.0;

    [[nodiscard]] Vector normalized() const { return state / state.norm(); }
};

struct DilatedTarget {
    std::map<std::string, Branch> branches;

    [[nodiscard]] double total_probability() const {
        double p = 0.0;
        for (const auto &[label, b] : branches) {
            p += b.probability;
        }
        return p;
    }
};

inline Matrix ket_bra(int a, int b) {
    Matrix m = Matrix::Zero(2, 2);
    m(a, b) = 1.0;
    return m;
}

/// sum_{ab} B_ab (x) |a><b|, i.e. a 2x2 block operator on a trailing ancilla.
inline Matrix ancilla_block(const Matrix &b00, const Matrix &b01, const Matrix &b10,
                            const Matrix &b11) {
    return kron(b00, ket_bra(0, 0)) + kron(b01, ket_bra(0, 1)) + kron(b10, ket_bra(1, 0)) +
           kron(b11, ket_bra(1, 1));
}

inline Vector plus_state() {
    Vector v(2);
    v << 1.0 / std::numbers::sqrt2, 1.0 / std::numbers::sqrt2;
    return v;
}

inline Vector basis_state(int bit) {
    Vector v = Vector::Zero(2);
    v(bit) = 1.0;
    return v;
}

// ---------------------------------------------------------------------------
// Naimark
// ---------------------------------------------------------------------------

/**
 * @brief Naimark dilation psi (x) |0> + sqrt(k rho - I) psi (x) |1>, over sqrt(k).
 *
 * `prefactor` k = 1 is the textbook form. Because det rho = 1 for traceless
 * H, rho - I is indefinite as soon as rho != I, so a constant k >= 1 is
 * needed to keep the dilation valid for any length of time; see
 * naimark_prefactor().
 */
inline DilatedTarget naimark_state(const Vector &psi, const Matrix &rho, double t,
                                   double prefactor = 1.0) {
    const Eigen::Index n = rho.rows();
    const PsdRoot root = psd_root(prefactor * rho - Matrix::Identity(n, n));
    if (root.min_eigenvalue < -1e-10) {
        throw Error(ErrorCode::NaimarkInvalid,
                    "k*rho - I is not positive semi-definite at t = " + std::to_string(t),
                    root.min_eigenvalue, t);
    }
    const double s = 1.0 / std::sqrt(prefactor);
    DilatedTarget out;
    const Vector zero = s * psi;
    const Vector one = s * (root.root * psi);
    out.branches["0"] = {zero, zero.squaredNorm()};
    out.branches["1"] = {one, one.squaredNorm()};
    return out;
}

inline double naimark_margin(const Matrix &rho, double prefactor = 1.0) {
    return min_eigenvalue(prefactor * rho - Matrix::Identity(rho.rows(), rho.cols()));
}

/// Full (system, a) amplitude vector of a valid Naimark dilation.
inline Vector naimark_dilated_state(const Vector &psi, const Matrix &rho, double t,
                                    double prefactor = 1.0) {
    const DilatedTarget target = naimark_state(psi, rho, t, prefactor);
    return kron(target.branches.at("0").state, basis_state(0)) +
           kron(target.branches.at("1").state, basis_state(1));
}

/**
 * Smallest constant k with k rho(t) - I >= 0 for all t >= t0.
 *
 * Finite only when rho(t) is periodic (real, non-degenerate two-level
 * spectrum): k = max over one period of 1 / lambda_min(rho). At or past the
 * exceptional point no constant works and the textbook value 1 is returned.
 */
inline double naimark_prefactor(const Hamiltonian &h) {
    const auto period = metric_period(h);
    if (!period) {
        return 1.0;
    }
    auto inv_min = [&](double t) { return 1.0 / min_eigenvalue(metric_closed_form(h, t)); };
    constexpr int samples = 512;
    double best_t = 0.0;
    double best = 1.0;
    for (int k = 0; k <= samples; ++k) {
        const double t = *period * k / samples;
        const double v = inv_min(t);
        if (v > best) {
            best = v;
            best_t = t;
        }
    }
    // golden-section refinement around the best sample
    const double step = *period / samples;
    double lo = best_t - step;
    double hi = best_t + step;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 80; ++it) {
        const double m1 = hi - g * (hi - lo);
        const double m2 = lo + g * (hi - lo);
        if (inv_min(m1) > inv_min(m2)) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    best = std::max(best, inv_min(0.5 * (lo + hi)));
    return std::max(1.0, best * (1.0 + 1e-9));
}

/// First grid time at which the Naimark dilation becomes invalid, if any.
inline std::optional<double> naimark_onset(const Hamiltonian &h, std::span<const double> grid,
                                           double prefactor = 1.0) {
    const double t0 = grid.empty() ? 0.0 : grid.front();
    for (double t : grid) {
        if (naimark_margin(metric_closed_form(h, t, t0), prefactor) < -1e-10) {
            return t;
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// General scalar-C dilation and BoNd
// ---------------------------------------------------------------------------

/// (tr rho + tr rho^{-1}) / D; `unimodular` uses rho^{-1} = adj(rho) for a det-1 2x2 rho.
inline double c_default(const Matrix &rho, int dim, bool unimodular = false) {
    if (unimodular) {
        return 2.0 * rho.trace().real() / static_cast<double>(dim);
    }
    Eigen::FullPivLU<Matrix> lu(rho);
    if (!lu.isInvertible()) {
        throw Error(ErrorCode::Singular, "metric is singular");
    }
    return (rho.trace().real() + lu.inverse().trace().real()) / static_cast<double>(dim);
}

/**
 * @brief zeta^{-1}_C = [[eta^{-1}, S], [S, -eta^{-1}]] / sqrt(C), S = sqrt(C I - rho^{-1}).
 *
 * All blocks are functions of rho and commute, so the result is unitary
 * whenever C I - rho^{-1} >= 0.
 */
inline DilationOperator zeta_general_inverse(const Matrix &rho, double c, double t = 0.0,
                                             bool unimodular = false) {
    const Eigen::Index n = rho.rows();
    HpdRoot root;
    Matrix s_root;
    if (unimodular) {
        // rho^{-1} = adj(rho), det(C I - adj rho) = C (C - tr rho) + 1
        root = unimodular_root_2x2(rho);
        const Matrix m = c * Matrix::Identity(2, 2) - adjugate_2x2(rho);
        const double tr = rho.trace().real();
        const double disc = std::sqrt(std::max(0.0, tr * tr - 4.0));
        const double lo = c - 0.5 * (tr + disc);
        if (lo < -1e-10 * std::max(1.0, tr)) {
            throw Error(ErrorCode::InvalidC, "C I - rho^{-1} is not positive semi-definite", lo, t);
        }
        s_root = sqrt_psd_2x2(m, c * (c - tr) + 1.0);
    } else {
        root = hpd_root(rho);
        const Matrix rho_inv = root.inv_root * root.inv_root;
        const PsdRoot s = psd_root(c * Matrix::Identity(n, n) - rho_inv);
        if (s.min_eigenvalue < -1e-10) {
            throw Error(ErrorCode::InvalidC, "C I - rho^{-1} is not positive semi-definite",
                        s.min_eigenvalue, t);
        }
        s_root = s.root;
    }
    DilationOperator op;
    op.scheme = Scheme::GeneralC;
    op.matrix = ancilla_block(root.inv_root, s_root, s_root, -root.inv_root) / std::sqrt(c);
    op.c_value = c;
    op.t = t;
    op.unitarity = unitarity_defect(op.matrix);
    op.valid = op.unitarity <= kUnitaryTol;
    return op;
}

/**
 * @brief One-ancilla propagator U_tot = zeta^{-1}(t) (U_h (x) I) zeta(t0).
 *
 * C(t) defaults to c_default(rho(t), 2), in which case sqrt(C I - rho^{-1})
 * collapses to eta for a det-1 metric. Applied to psi0 (x) |+> it yields
 * (psi |0> + rho psi |1>) / sqrt(C).
 */
inline DilationOperator bond_u_tot(const Hamiltonian &h, double t, double t0 = 0.0,
                                   std::optional<double> c = std::nullopt) {
    const bool uni = is_unimodular_two_level(h);
    const Matrix rho = metric_closed_form(h, t, t0);
    const Matrix rho0 = Matrix::Identity(h.dim(), h.dim());
    const int d = static_cast<int>(h.dim());
    const double c_t = c.value_or(c_default(rho, d, uni));
    const DilationOperator z_t = zeta_general_inverse(rho, c_t, t, uni);
    const DilationOperator z_0 = zeta_general_inverse(rho0, c_default(rho0, d), t0);
    const Matrix u_h = hermitian_frame_propagator(h, t, t0);

    DilationOperator op;
    op.scheme = Scheme::BoNd;
    op.matrix = z_t.matrix * kron(u_h, pauli::identity()) * z_0.matrix.adjoint();
    op.c_value = c_t;
    op.t = t;
    op.unitarity = unitarity_defect(op.matrix);
    op.valid = op.unitarity <= 1e-9;
    return op;
}

inline Vector bond_start_state(const Vector &psi0) { return kron(psi0, plus_state()); }

/// BoNd target: branch "0" holds psi, "1" holds rho psi, both over sqrt(C).
inline DilatedTarget bond_target(const Vector &psi, const Matrix &rho, bool unimodular = false) {
    const double c = c_default(rho, static_cast<int>(rho.rows()), unimodular);
    DilatedTarget out;
    const Vector zero = psi / std::sqrt(c);
    const Vector one = rho * psi / std::sqrt(c);
    out.branches["0"] = {zero, zero.squaredNorm()};
    out.branches["1"] = {one, one.squaredNorm()};
    return out;
}

// ---------------------------------------------------------------------------
// GBoNd
// ---------------------------------------------------------------------------

/// rho_G = rho (x) |0><0|_a + I (x) |1><1|_a
inline Matrix metric_g(const Matrix &rho) {
    const Eigen::Index n = rho.rows();
    return kron(rho, ket_bra(0, 0)) + kron(Matrix::Identity(n, n), ket_bra(1, 1));
}

/**
 * The literal two-ancilla operator [[eta_G^{-1}, eta_G], [eta_G, -eta_G^{-1}]] / sqrt(C).
 *
 * With C = c_default(rho_G, 4) this is unitary only when tr rho = 2, since
 * rho_G + rho_G^{-1} = tr(rho) I (+) 2I. The defect is recorded, not enforced.
 */
inline DilationOperator gbond_literal_zeta(const Matrix &rho_g, std::optional<double> c = std::nullopt,
                                           double t = 0.0) {
    const HpdRoot root = hpd_root(rho_g);
    const double c_val = c.value_or(c_default(rho_g, static_cast<int>(rho_g.rows())));
    DilationOperator op;
    op.scheme = Scheme::GBoNdLiteral;
    op.matrix = ancilla_block(root.inv_root, root.root, root.root, -root.inv_root) / std::sqrt(c_val);
    op.c_value = c_val;
    op.t = t;
    op.unitarity = unitarity_defect(op.matrix);
    op.valid = op.unitarity <= kUnitaryTol;
    return op;
}

inline Vector gbond_start_state(const Vector &psi0) {
    return kron(kron(psi0, plus_state()), plus_state());
}

/**
 * @brief Three-qubit unitary whose post-selected branches match the GBoNd target.
 *
 * U_tot = [zeta^{-1}_BoNd(t) (x) |0><0|_b + (I_s (x) Had_a) (x) |1><1|_b]
 *         (U_h (x) I_ab) (I_s (x) Had_a (x) I_b)
 *
 * From psi0 (x) |+>_a (x) |+>_b this produces psi/sqrt(2C) on ab = 00,
 * rho psi/sqrt(2C) on 10 and eta psi/2 on both 01 and 11. Every control
 * block is unitary, so U_tot is too.
 */
inline DilationOperator gbond_canonical_u_tot(const Hamiltonian &h, double t, double t0 = 0.0) {
    const bool uni = is_unimodular_two_level(h);
    const Matrix rho = metric_closed_form(h, t, t0);
    const int d = static_cast<int>(h.dim());
    const double c_t = c_default(rho, d, uni);
    const DilationOperator z_t = zeta_general_inverse(rho, c_t, t, uni);
    const Matrix u_h = hermitian_frame_propagator(h, t, t0);
    const Matrix id_s = Matrix::Identity(h.dim(), h.dim());
    const Matrix id2 = pauli::identity();
    const Matrix had_a = kron(id_s, hadamard());

    const Matrix control = kron(z_t.matrix, ket_bra(0, 0)) + kron(had_a, ket_bra(1, 1));
    const Matrix evolve = kron(kron(u_h, id2), id2);
    const Matrix prep = kron(had_a, id2);

    DilationOperator op;
    op.scheme = Scheme::GBoNdCanonical;
    op.matrix = control * evolve * prep;
    op.c_value = c_t;
    op.t = t;
    op.unitarity = unitarity_defect(op.matrix);
    op.valid = op.unitarity <= 1e-9;
    return op;
}

/// Branch weights of gbond_canonical_u_tot: (psi, rho psi)/sqrt(2C) and eta psi / 2 twice.
inline DilatedTarget gbond_target(const Vector &psi, const Matrix &rho, bool unimodular = false) {
    const double c = c_default(rho, static_cast<int>(rho.rows()), unimodular);
    const Matrix eta = unimodular ? unimodular_root_2x2(rho).root : principal_sqrt_hpd(rho);
    DilatedTarget out;
    const Vector b00 = psi / std::sqrt(2.0 * c);
    const Vector b10 = rho * psi / std::sqrt(2.0 * c);
    const Vector bx1 = eta * psi / 2.0;
    out.branches["00"] = {b00, b00.squaredNorm()};
    out.branches["10"] = {b10, b10.squaredNorm()};
    out.branches["01"] = {bx1, bx1.squaredNorm()};
    out.branches["11"] = {bx1, bx1.squaredNorm()};
    return out;
}

/**
 * @brief H_tot = zeta^{-1} (h (x) I) zeta + i (d/dt zeta^{-1}) zeta on a grid.
 *
 * zeta_inv_grid holds the dilation matrices zeta^{-1}(t) (what the
 * DilationOperator constructors return); the derivative is a finite
 * difference on the same grid.
 */
inline std::vector<Matrix> total_hamiltonian(std::span<const Matrix> zeta_inv_grid,
                                             std::span<const Matrix> h_grid,
                                             std::span<const double> grid) {
    if (zeta_inv_grid.size() != h_grid.size() || h_grid.size() != grid.size()) {
        throw Error(ErrorCode::DimensionMismatch, "total_hamiltonian inputs differ in length");
    }
    const std::vector<Matrix> z_dot = finite_difference(zeta_inv_grid, grid);
    std::vector<Matrix> out;
    out.reserve(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const Eigen::Index anc = zeta_inv_grid[k].rows() / h_grid[k].rows();
        const Matrix zeta = zeta_inv_grid[k].inverse();
        out.push_back(zeta_inv_grid[k] * kron(h_grid[k], Matrix::Identity(anc, anc)) * zeta +
                      kI * z_dot[k] * zeta);
    }
    return out;
}

} // namespace nhd
