#pragma once

/**
 * @file
 * Dense complex linear algebra for the small operators used throughout the
 * library (2x2 system operators, 4x4 and 8x8 dilations).
 */

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "nhd/error.hpp"

namespace nhd {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr Complex kI{0.0, 1.0};

inline constexpr double kHermitianTol = 1e-10;
inline constexpr double kUnitaryTol = 1e-10;

namespace pauli {

inline Matrix identity(Eigen::Index dim = 2) { return Matrix::Identity(dim, dim); }

inline Matrix x() {
    Matrix m(2, 2);
    m << 0.0, 1.0, 1.0, 0.0;
    return m;
}

inline Matrix y() {
    Matrix m(2, 2);
    m << 0.0, -kI, kI, 0.0;
    return m;
}

inline Matrix z() {
    Matrix m(2, 2);
    m << 1.0, 0.0, 0.0, -1.0;
    return m;
}

/// Index 0 is the identity, 1..3 are x, y, z.
inline Matrix by_index(int i) {
    switch (i) {
    case 1: return x();
    case 2: return y();
    case 3: return z();
    default: return identity();
    }
}

} // namespace pauli

inline Matrix hadamard() {
    Matrix m(2, 2);
    const double s = 1.0 / std::numbers::sqrt2;
    m << s, s, s, -s;
    return m;
}

/// Kronecker product; the left factor is the more significant index.
inline Matrix kron(const Matrix &a, const Matrix &b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

inline Vector kron(const Vector &a, const Vector &b) {
    Vector out(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        out.segment(i * b.size(), b.size()) = a(i) * b;
    }
    return out;
}

inline bool is_finite(const Matrix &m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        const Complex z = m.data()[i];
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
            return false;
        }
    }
    return true;
}

inline void require_square(const Matrix &m, const char *what) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw Error(ErrorCode::DimensionMismatch,
                    std::string(what) + " must be a non-empty square matrix");
    }
}

inline double hermiticity_defect(const Matrix &m) { return (m - m.adjoint()).norm(); }

inline bool is_hermitian(const Matrix &m, double tol = kHermitianTol) {
    return m.rows() == m.cols() && hermiticity_defect(m) <= tol * std::max(1.0, m.norm());
}

inline Matrix hermitian_part(const Matrix &m) { return 0.5 * (m + m.adjoint()); }

/// ||U^dagger U - I||_F
inline double unitarity_defect(const Matrix &u) {
    require_square(u, "unitarity_defect input");
    return (u.adjoint() * u - Matrix::Identity(u.rows(), u.cols())).norm();
}

/**
 * @brief Matrix exponential e^{scale * A}.
 *
 * Scaling and squaring around a Taylor series: A is scaled until its 1-norm is
 * below 1/2, the series is summed until the next term drops below 1e-18 of
 * the running sum, and the result is squared back up.
 */
inline Matrix expm(const Matrix &a, double scale = 1.0) {
    require_square(a, "expm input");
    if (!std::isfinite(scale) || !is_finite(a)) {
        throw Error(ErrorCode::InvalidInput, "expm requires finite input");
    }
    const Eigen::Index n = a.rows();
    Matrix b = scale * a;

    double norm1 = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        norm1 = std::max(norm1, b.col(j).cwiseAbs().sum());
    }
    int squarings = 0;
    if (norm1 > 0.5) {
        squarings = static_cast<int>(std::ceil(std::log2(norm1 / 0.5)));
        b /= std::ldexp(1.0, squarings);
    }

    Matrix result = Matrix::Identity(n, n);
    Matrix term = Matrix::Identity(n, n);
    for (int k = 1; k <= 60; ++k) {
        term = (term * b) / static_cast<double>(k);
        result += term;
        if (term.norm() <= 1e-18 * result.norm()) {
            break;
        }
    }
    for (int s = 0; s < squarings; ++s) {
        result = result * result;
    }
    return result;
}

/// Eigen-decomposition of a Hermitian matrix.
struct Spectrum {
    Eigen::VectorXd eigenvalues; // ascending
    Matrix eigenvectors;         // columns

    [[nodiscard]] Matrix reconstruct() const {
        return eigenvectors * eigenvalues.cast<Complex>().asDiagonal() * eigenvectors.adjoint();
    }
};

/**
 * @brief Hermitian eigensolver with a deterministic phase convention.
 *
 * Eigenvalues are returned ascending. Each eigenvector is rotated so that its
 * largest-magnitude component (the first one, on ties) is real and positive.
 */
inline Spectrum eigh(const Matrix &m) {
    require_square(m, "eigh input");
    if (!is_finite(m)) {
        throw Error(ErrorCode::InvalidInput, "eigh requires finite input");
    }
    const double defect = hermiticity_defect(m);
    if (defect > kHermitianTol * m.norm()) {
        throw Error(ErrorCode::NotHermitian, "eigh input is not Hermitian", defect);
    }
    Eigen::SelfAdjointEigenSolver<Matrix> solver(hermitian_part(m));
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorCode::InvalidInput, "Hermitian eigensolver did not converge");
    }
    Spectrum out{solver.eigenvalues(), solver.eigenvectors()};
    for (Eigen::Index j = 0; j < out.eigenvectors.cols(); ++j) {
        auto col = out.eigenvectors.col(j);
        const double largest = col.cwiseAbs().maxCoeff();
        Eigen::Index pivot = 0;
        while (std::abs(col(pivot)) < largest - 1e-12) {
            ++pivot;
        }
        col *= std::conj(col(pivot)) / std::abs(col(pivot));
        col(pivot) = std::abs(col(pivot));
    }
    return out;
}

inline double min_eigenvalue(const Matrix &hermitian) {
    return eigh(hermitian).eigenvalues.minCoeff();
}

/// Principal square root together with its inverse, from one decomposition.
struct HpdRoot {
    Matrix root;
    Matrix inv_root;
    double min_eigenvalue;
};

inline HpdRoot hpd_root(const Matrix &m) {
    const Spectrum spec = eigh(m);
    const double lo = spec.eigenvalues.minCoeff();
    if (!(lo > 1e-12)) {
        throw Error(ErrorCode::NotPositiveDefinite,
                    "matrix is not positive definite (min eigenvalue " + std::to_string(lo) + ")",
                    lo);
    }
    const Eigen::VectorXd sq = spec.eigenvalues.cwiseSqrt();
    const Matrix &v = spec.eigenvectors;
    return {v * sq.cast<Complex>().asDiagonal() * v.adjoint(),
            v * sq.cwiseInverse().cast<Complex>().asDiagonal() * v.adjoint(), lo};
}

inline Matrix principal_sqrt_hpd(const Matrix &m) { return hpd_root(m).root; }

/// adj(M) for a 2x2 matrix; equals M^{-1} when det M = 1.
inline Matrix adjugate_2x2(const Matrix &m) {
    Matrix adj(2, 2);
    adj << m(1, 1), -m(0, 1), -m(1, 0), m(0, 0);
    return adj;
}

/**
 * @brief Root of a 2x2 Hermitian positive matrix known to have det = 1.
 *
 * sqrt(M) = (M + I) / sqrt(tr M + 2) and M^{-1} = adj(M), so neither the
 * root nor its inverse goes through the small eigenvalue. Stays accurate
 * when M is too ill-conditioned for the eigendecomposition route.
 */
inline HpdRoot unimodular_root_2x2(const Matrix &m) {
    if (m.rows() != 2 || m.cols() != 2) {
        throw Error(ErrorCode::DimensionMismatch, "unimodular root is for 2x2 matrices");
    }
    if (!is_finite(m)) {
        throw Error(ErrorCode::InvalidInput, "unimodular root requires finite input");
    }
    const double tr = m.trace().real();
    if (!(tr >= 2.0 - 1e-9)) {
        // det 1 and positive definite force tr >= 2
        throw Error(ErrorCode::NotPositiveDefinite, "trace below 2 for a unit-determinant matrix", tr);
    }
    const double s = std::sqrt(std::max(tr, 2.0) + 2.0);
    const Matrix id = Matrix::Identity(2, 2);
    const double disc = std::sqrt(std::max(0.0, tr * tr - 4.0));
    return {hermitian_part((m + id) / s), hermitian_part((adjugate_2x2(m) + id) / s),
            2.0 / (tr + disc)};
}

/**
 * sqrt(M) = (M + sqrt(d) I) / sqrt(tr M + 2 sqrt(d)) for a 2x2 Hermitian PSD
 * matrix whose determinant d is supplied by the caller (known analytically,
 * so it does not suffer the cancellation of det from entries).
 */
inline Matrix sqrt_psd_2x2(const Matrix &m, double det) {
    const double sd = std::sqrt(std::max(0.0, det));
    const double denom = std::sqrt(std::max(0.0, m.trace().real() + 2.0 * sd));
    if (denom == 0.0) {
        return Matrix::Zero(2, 2);
    }
    return hermitian_part((m + sd * Matrix::Identity(2, 2)) / denom);
}

/**
 * Square root of a positive semi-definite matrix. Eigenvalues in [-tol, 0)
 * are clipped to zero; anything more negative is reported through the
 * returned min eigenvalue and the caller decides.
 */
struct PsdRoot {
    Matrix root;
    double min_eigenvalue;
};

inline PsdRoot psd_root(const Matrix &m) {
    const Spectrum spec = eigh(m);
    const Eigen::VectorXd sq = spec.eigenvalues.cwiseMax(0.0).cwiseSqrt();
    const Matrix &v = spec.eigenvectors;
    return {v * sq.cast<Complex>().asDiagonal() * v.adjoint(), spec.eigenvalues.minCoeff()};
}

/// Eigenvalues of a general 2x2 matrix from its trace and determinant.
inline std::pair<Complex, Complex> eigenvalues_2x2(const Matrix &m) {
    if (m.rows() != 2 || m.cols() != 2) {
        throw Error(ErrorCode::DimensionMismatch, "eigenvalues_2x2 expects a 2x2 matrix");
    }
    const Complex half_tr = 0.5 * (m(0, 0) + m(1, 1));
    const Complex det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    const Complex disc = std::sqrt(half_tr * half_tr - det);
    return {half_tr - disc, half_tr + disc};
}

/**
 * @brief Closed-form e^{-iHt} for a traceless 2x2 H.
 *
 * Such an H squares to c*I with c = -det H, hence
 * e^{-iHt} = cos(sqrt(c) t) I - i sin(sqrt(c) t)/sqrt(c) H. Complex square
 * roots cover c < 0 (cosh/sinh) and general complex c; a short series is
 * used when sqrt(c) t is tiny.
 */
inline Matrix two_level_propagator(const Matrix &h, double t) {
    if (h.rows() != 2 || h.cols() != 2) {
        throw Error(ErrorCode::UnsupportedHamiltonian, "two_level_propagator expects a 2x2 matrix");
    }
    const Complex trace = h(0, 0) + h(1, 1);
    if (std::abs(trace) > 1e-12) {
        throw Error(ErrorCode::UnsupportedHamiltonian, "Hamiltonian is not traceless",
                    std::abs(trace));
    }
    const Complex c = -(h(0, 0) * h(1, 1) - h(0, 1) * h(1, 0));
    const Complex k = std::sqrt(c);
    Complex cos_part;
    Complex sinc_part; // sin(k t) / k
    if (std::abs(k * t) < 1e-4) {
        const Complex x = c * t * t;
        cos_part = 1.0 - x / 2.0 + x * x / 24.0;
        sinc_part = t * (1.0 - x / 6.0 + x * x / 120.0);
    } else {
        cos_part = std::cos(k * t);
        sinc_part = std::sin(k * t) / k;
    }
    return cos_part * Matrix::Identity(2, 2) - kI * sinc_part * h;
}

inline Complex trace(const Matrix &m) { return m.trace(); }

} // namespace nhd
