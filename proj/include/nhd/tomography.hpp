#pragma once

/**
 * @file
 * Reconstruction of post-selected states and of the normalized metric
 * rho / tr rho from Pauli expectations, exact or estimated from shots.
 */

#include <array>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "nhd/circuit.hpp"
#include "nhd/error.hpp"
#include "nhd/linalg.hpp"
#include "nhd/metric.hpp"

namespace nhd {

struct BlochVector {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    [[nodiscard]] double norm() const { return std::sqrt(x * x + y * y + z * z); }
    [[nodiscard]] double component(int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

/// <chi|sigma_i|chi> / <chi|chi>
inline BlochVector bloch_of(const Vector &chi) {
    const double n = chi.squaredNorm();
    return {chi.dot(pauli::x() * chi).real() / n, chi.dot(pauli::y() * chi).real() / n,
            chi.dot(pauli::z() * chi).real() / n};
}

struct SingleQubitState {
    Matrix rho;
    double scaling = 1.0; // < 1 when the input Bloch vector had to be shrunk
};

/// (I + b.sigma) / 2, radially projected onto the Bloch ball when |b| > 1.
inline SingleQubitState single_qubit_from_bloch(BlochVector b) {
    SingleQubitState out;
    const double n = b.norm();
    if (n > 1.0) {
        out.scaling = 1.0 / n;
        b = {b.x / n, b.y / n, b.z / n};
    }
    out.rho = 0.5 * (pauli::identity() + b.x * pauli::x() + b.y * pauli::y() + b.z * pauli::z());
    return out;
}

/// c[i][j] = <sigma_i (x) sigma_j>, index 0 = identity; c[0][0] is 1.
using TwoQubitPaulis = std::array<std::array<double, 4>, 4>;

inline TwoQubitPaulis two_qubit_expectations(const Vector &psi) {
    TwoQubitPaulis c{};
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            c[i][j] = psi.dot(kron(pauli::by_index(i), pauli::by_index(j)) * psi).real();
        }
    }
    return c;
}

inline std::vector<std::string> two_qubit_bases() {
    std::vector<std::string> out;
    for (char a : {'X', 'Y', 'Z'}) {
        for (char b : {'X', 'Y', 'Z'}) {
            out.push_back(std::string{a, b});
        }
    }
    return out;
}

/**
 * Pauli expectations from the nine two-qubit product-basis records.
 * Single-qubit terms average the three records that measure that Pauli.
 */
inline TwoQubitPaulis two_qubit_expectations(std::span<const ShotRecord> records) {
    auto index_of = [](char p) { return p == 'X' ? 1 : (p == 'Y' ? 2 : 3); };
    TwoQubitPaulis c{};
    std::array<std::array<int, 4>, 4> hits{};
    c[0][0] = 1.0;
    for (const ShotRecord &rec : records) {
        if (rec.basis.size() != 2) {
            throw Error(ErrorCode::InvalidInput, "two-qubit tomography needs two-qubit records");
        }
        const int i = index_of(rec.basis[0]);
        const int j = index_of(rec.basis[1]);
        c[i][j] += pauli_correlation(rec, "11");
        c[i][0] += pauli_correlation(rec, "10");
        c[0][j] += pauli_correlation(rec, "01");
        ++hits[i][j];
        ++hits[i][0];
        ++hits[0][j];
    }
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            if (i == 0 && j == 0) {
                continue;
            }
            if (hits[i][j] == 0) {
                throw Error(ErrorCode::InvalidInput, "missing measurement basis for tomography");
            }
            c[i][j] /= hits[i][j];
        }
    }
    return c;
}

struct PureStateEstimate {
    Vector state;     // dominant eigenvector, phase-fixed by eigh
    Matrix density;   // linear-inversion estimate
    double impurity;  // 1 - lambda_max
};

/**
 * @brief Pure-state estimate from the 15 nontrivial two-qubit Pauli expectations.
 *
 * Builds (sum c_ij sigma_i (x) sigma_j) / 4 and keeps its dominant eigenvector.
 */
inline PureStateEstimate two_qubit_pure_tomography(const TwoQubitPaulis &c) {
    Matrix rho = Matrix::Zero(4, 4);
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            const double coeff = (i == 0 && j == 0) ? 1.0 : c[i][j];
            rho += coeff * kron(pauli::by_index(i), pauli::by_index(j));
        }
    }
    rho /= 4.0;
    const Spectrum spec = eigh(rho);
    const double lmax = spec.eigenvalues(3);
    if (lmax < 0.8) {
        throw Error(ErrorCode::TooMixed, "reconstructed state is too mixed for a pure-state fit",
                    lmax);
    }
    return {spec.eigenvectors.col(3), rho, 1.0 - lmax};
}

enum class EstimateSource { Exact, Shots };

struct MetricEstimate {
    Matrix rho_normalized; // rho / tr rho
    double residual = 0.0;
    EstimateSource source = EstimateSource::Exact;
};

/**
 * @brief Recover rho / tr rho from a BoNd state u (x) |0> + v (x) |1>, v = rho u.
 *
 * In the orthonormal frame {u^, w} with u^ = u/|u|, the column rho u^ fixes
 * rho_uu = <u^|v>/|u| and rho_wu = <w|v>/|u|. Hermiticity fixes rho_uw, and
 * det rho = 1 fixes the remaining rho_ww = (1 + |rho_wu|^2) / rho_uu.
 * rho_uu is taken as the real part of the data (least-squares Hermitian
 * fit).
 *
 * In the broken phase rho_uu = 1/|psi|^2 gets tiny and shot noise can push
 * it to zero or below, so the division is avoided: rho_uu * rho is
 * [[a^2, a b*], [a b, 1 + |b|^2]] with a = rho_uu, b = rho_wu, which stays
 * PSD for a >= 0 and is continuous through a = 0. Negative a is clipped
 * to 0. The result is rescaled to unit trace.
 *
 * `residual` combines the imaginary part of <u|v> with the mismatch of the
 * metric-norm identity <u|v> = 1 / tr rho.
 */
inline MetricEstimate metric_from_bond_state(const Vector &bond_state,
                                             EstimateSource source = EstimateSource::Exact) {
    if (bond_state.size() != 4) {
        throw Error(ErrorCode::DimensionMismatch, "BoNd state has four amplitudes");
    }
    Vector u(2);
    Vector v(2);
    u << bond_state(0), bond_state(2);
    v << bond_state(1), bond_state(3);
    const double un = u.norm();
    if (un < 1e-8) {
        throw Error(ErrorCode::IllConditioned, "psi branch is too small to invert", un);
    }
    const Vector uh = u / un;
    Vector w(2);
    w << -std::conj(uh(1)), std::conj(uh(0));

    const Complex uv = uh.dot(v) / un; // Eigen's dot conjugates the left operand
    const double a = std::max(0.0, uv.real());
    const Complex b = w.dot(v) / un;

    Matrix frame(2, 2);
    frame.col(0) = uh;
    frame.col(1) = w;
    Matrix local(2, 2);
    local << a * a, a * std::conj(b), a * b, 1.0 + std::norm(b);
    const Matrix scaled = hermitian_part(frame * local * frame.adjoint());
    const double tr = scaled.trace().real();
    MetricEstimate out;
    out.rho_normalized = scaled / tr;
    // rho_uu tr rho = a^2 + 1 + |b|^2, so <u|v> tr rho - 1 = |u|^2 tr(scaled) - 1
    out.residual = std::abs(uv.imag()) + std::abs(un * un * tr - 1.0);
    out.source = source;
    return out;
}

inline constexpr std::array<const char *, 3> kStateTags{"psi", "rho_psi", "eta_psi"};

/// Spin expectations in psi, rho psi and eta psi, each normalized by its own norm.
inline std::map<std::string, BlochVector> three_state_expectations(const PsiPair &pair) {
    return {{"psi", bloch_of(pair.psi)},
            {"rho_psi", bloch_of(pair.rho_psi)},
            {"eta_psi", bloch_of(pair.eta_psi)}};
}

inline double fidelity(const Vector &a, const Vector &b) {
    return std::norm(a.dot(b)) / (a.squaredNorm() * b.squaredNorm());
}

} // namespace nhd
