#pragma once

/**
 * @file
 * Statevector emulation of the dilated circuits: unitary application,
 * ancilla post-selection and seeded shot sampling in Pauli bases.
 *
 * Qubit 0 is the system and the most significant bit of an amplitude index;
 * bitstrings are written qubit 0 first.
 */

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nhd/error.hpp"
#include "nhd/linalg.hpp"
#include "nhd/rng.hpp"

namespace nhd {

class StateVector {
  public:
    explicit StateVector(Vector amps, double tol = 1e-10) : amps_(std::move(amps)) {
        const auto dim = amps_.size();
        n_qubits_ = 0;
        while ((Eigen::Index{1} << n_qubits_) < dim) {
            ++n_qubits_;
        }
        if ((Eigen::Index{1} << n_qubits_) != dim || n_qubits_ < 1 || n_qubits_ > 3) {
            throw Error(ErrorCode::DimensionMismatch,
                        "state must hold 2, 4 or 8 amplitudes (got " + std::to_string(dim) + ")");
        }
        if (std::abs(amps_.norm() - 1.0) > tol) {
            throw Error(ErrorCode::InvalidInput, "state is not normalized", amps_.norm());
        }
    }

    static StateVector basis(int n_qubits, unsigned index) {
        Vector v = Vector::Zero(Eigen::Index{1} << n_qubits);
        v(index) = 1.0;
        return StateVector(std::move(v));
    }

    [[nodiscard]] int n_qubits() const { return n_qubits_; }
    [[nodiscard]] Eigen::Index dim() const { return amps_.size(); }
    [[nodiscard]] const Vector &amps() const { return amps_; }

  private:
    Vector amps_;
    int n_qubits_ = 0;
};

inline std::string bitstring(unsigned index, int n_qubits) {
    std::string s(static_cast<std::size_t>(n_qubits), '0');
    for (int q = 0; q < n_qubits; ++q) {
        if ((index >> (n_qubits - 1 - q)) & 1U) {
            s[static_cast<std::size_t>(q)] = '1';
        }
    }
    return s;
}

inline StateVector apply_unitary(const StateVector &state, const Matrix &u) {
    if (u.rows() != state.dim() || u.cols() != state.dim()) {
        throw Error(ErrorCode::DimensionMismatch, "unitary does not match the register size");
    }
    const double defect = unitarity_defect(u);
    if (defect > 1e-9) {
        throw Error(ErrorCode::NotUnitary, "operator is not unitary", defect);
    }
    return StateVector(u * state.amps(), 1e-8);
}

struct PostSelection {
    double probability = 0.0;
    Vector system_state; // normalized
};

/// Condition on the ancilla outcome `ancilla_bits` (one '0'/'1' per ancilla).
inline PostSelection postselect(const StateVector &state, std::string_view ancilla_bits) {
    const int n = state.n_qubits();
    if (static_cast<int>(ancilla_bits.size()) != n - 1) {
        throw Error(ErrorCode::InvalidInput, "outcome must address every ancilla qubit");
    }
    unsigned anc = 0;
    for (char c : ancilla_bits) {
        if (c != '0' && c != '1') {
            throw Error(ErrorCode::InvalidInput, "ancilla outcome must be a bitstring");
        }
        anc = (anc << 1U) | (c == '1' ? 1U : 0U);
    }
    Vector branch(2);
    for (unsigned s = 0; s < 2; ++s) {
        branch(s) = state.amps()((s << (n - 1)) | anc);
    }
    const double p = branch.squaredNorm();
    if (p < 1e-14) {
        throw Error(ErrorCode::EmptyBranch, "post-selected branch has vanishing probability", p);
    }
    return {p, branch / std::sqrt(p)};
}

/**
 * Single-qubit rotation taking the eigenbasis of `pauli` to the computational
 * basis, with outcome 0 <-> eigenvalue +1:
 *   Z: identity, X: Hadamard, Y: Hadamard * S^dagger.
 */
inline Matrix measurement_rotation(char pauli) {
    switch (pauli) {
    case 'Z': return pauli::identity();
    case 'X': return hadamard();
    case 'Y': {
        Matrix s_dag(2, 2);
        s_dag << 1.0, 0.0, 0.0, -kI;
        return hadamard() * s_dag;
    }
    default:
        throw Error(ErrorCode::InvalidInput, std::string("unknown measurement basis '") + pauli + "'");
    }
}

struct ShotRecord {
    std::string basis;                           // one of X/Y/Z per qubit
    std::map<std::string, std::int64_t> counts;  // outcome bitstring -> count
    std::int64_t n_requested = 0;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
};

/// Outcome probabilities after rotating every qubit into its measurement basis.
inline std::vector<double> basis_probabilities(const StateVector &state, std::string_view basis) {
    if (static_cast<int>(basis.size()) != state.n_qubits()) {
        throw Error(ErrorCode::InvalidInput, "basis must name one Pauli per qubit");
    }
    Matrix rot = measurement_rotation(basis[0]);
    for (std::size_t q = 1; q < basis.size(); ++q) {
        rot = kron(rot, measurement_rotation(basis[q]));
    }
    const Vector rotated = rot * state.amps();
    std::vector<double> probs(static_cast<std::size_t>(rotated.size()));
    for (Eigen::Index i = 0; i < rotated.size(); ++i) {
        probs[static_cast<std::size_t>(i)] = std::norm(rotated(i));
    }
    return probs;
}

/**
 * @brief Draw n_shots outcomes in the given per-qubit Pauli basis.
 *
 * Each shot is an inverse-CDF draw from a CounterRng keyed by
 * (seed, basis, stream). Identical arguments give identical counts.
 */
inline ShotRecord sample_shots(const StateVector &state, std::string_view basis,
                               std::int64_t n_shots, std::uint64_t seed,
                               std::uint64_t stream = 0) {
    if (n_shots < 1) {
        throw Error(ErrorCode::InvalidInput, "shot count must be at least 1");
    }
    const std::vector<double> probs = basis_probabilities(state, basis);
    std::vector<double> cdf(probs.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        cdf[i] = acc;
    }
    for (double &c : cdf) {
        c /= acc;
    }

    CounterRng rng(CounterRng::combine(CounterRng::combine(seed, CounterRng::hash(basis)), stream));
    std::vector<std::int64_t> tally(probs.size(), 0);
    for (std::int64_t k = 0; k < n_shots; ++k) {
        const double u = rng.next_double();
        std::size_t i = 0;
        while (i + 1 < cdf.size() && u >= cdf[i]) {
            ++i;
        }
        ++tally[i];
    }

    ShotRecord rec;
    rec.basis = std::string(basis);
    rec.n_requested = n_shots;
    rec.seed = seed;
    rec.stream = stream;
    for (std::size_t i = 0; i < tally.size(); ++i) {
        if (tally[i] > 0) {
            rec.counts[bitstring(static_cast<unsigned>(i), state.n_qubits())] = tally[i];
        }
    }
    return rec;
}

struct PauliEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::int64_t n_post = 0;
    double p_branch = 0.0;               // empirical post-selection frequency
    double n_eff = 0.0;                  // n_post / p_branch
    std::optional<double> n_eff_exact;   // n_post / exact branch probability
};

/**
 * @brief Expectation of the target qubit's measured Pauli on post-selected shots.
 *
 * `postselect` has one character per non-target qubit (ascending order):
 * '0' or '1' to condition on a Z outcome, 'x' to ignore that qubit.
 */
inline PauliEstimate estimate_pauli(const ShotRecord &record, int target_qubit,
                                    std::string_view postselect,
                                    std::optional<double> exact_branch_probability = std::nullopt) {
    const int n = static_cast<int>(record.basis.size());
    if (target_qubit < 0 || target_qubit >= n) {
        throw Error(ErrorCode::InvalidInput, "target qubit out of range");
    }
    if (static_cast<int>(postselect.size()) != n - 1) {
        throw Error(ErrorCode::InvalidInput, "post-selection pattern must cover the other qubits");
    }
    std::string pattern; // full-width, target marked 'x'
    for (int q = 0, j = 0; q < n; ++q) {
        if (q == target_qubit) {
            pattern.push_back('x');
            continue;
        }
        const char c = postselect[static_cast<std::size_t>(j++)];
        if (c != '0' && c != '1' && c != 'x') {
            throw Error(ErrorCode::InvalidInput, "post-selection pattern uses 0, 1 or x");
        }
        if (c != 'x' && record.basis[static_cast<std::size_t>(q)] != 'Z') {
            throw Error(ErrorCode::InvalidInput, "post-selected qubits must be measured in Z");
        }
        pattern.push_back(c);
    }

    std::int64_t plus = 0;
    std::int64_t minus = 0;
    for (const auto &[bits, count] : record.counts) {
        bool keep = true;
        for (int q = 0; q < n; ++q) {
            const char want = pattern[static_cast<std::size_t>(q)];
            if (want != 'x' && bits[static_cast<std::size_t>(q)] != want) {
                keep = false;
                break;
            }
        }
        if (!keep) {
            continue;
        }
        (bits[static_cast<std::size_t>(target_qubit)] == '0' ? plus : minus) += count;
    }
    const std::int64_t n_post = plus + minus;
    if (n_post == 0) {
        throw Error(ErrorCode::EmptyBranch, "no shots survived post-selection");
    }
    PauliEstimate est;
    est.n_post = n_post;
    est.value = static_cast<double>(plus - minus) / static_cast<double>(n_post);
    est.std_error = std::sqrt(std::max(0.0, 1.0 - est.value * est.value) / static_cast<double>(n_post));
    est.p_branch = static_cast<double>(n_post) / static_cast<double>(record.n_requested);
    est.n_eff = static_cast<double>(n_post) / est.p_branch;
    if (exact_branch_probability && *exact_branch_probability > 0.0) {
        est.n_eff_exact = static_cast<double>(n_post) / *exact_branch_probability;
    }
    return est;
}

/// <P_mask> = sum over shots of (-1)^(parity of the masked bits) / N.
inline double pauli_correlation(const ShotRecord &record, std::string_view mask) {
    if (mask.size() != record.basis.size()) {
        throw Error(ErrorCode::InvalidInput, "mask must cover every qubit");
    }
    std::int64_t acc = 0;
    for (const auto &[bits, count] : record.counts) {
        int parity = 0;
        for (std::size_t q = 0; q < mask.size(); ++q) {
            if (mask[q] == '1' && bits[q] == '1') {
                parity ^= 1;
            }
        }
        acc += parity ? -count : count;
    }
    return static_cast<double>(acc) / static_cast<double>(record.n_requested);
}

} // namespace nhd
