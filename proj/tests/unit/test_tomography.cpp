#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "nhd/dilation.hpp"
#include "nhd/tomography.hpp"
#include "test_helpers.hpp"

using namespace nhd;

namespace {

double max_abs(const Matrix &m) { return m.cwiseAbs().maxCoeff(); }

Vector ket0() { return test::vec2(1.0, 0.0); }

/// (u |0> + v |1>) on (system, ancilla), normalized.
Vector bond_vector(const Vector &u, const Vector &v) {
    Vector out = kron(u, basis_state(0)) + kron(v, basis_state(1));
    return out / out.norm();
}

Vector random_state(std::mt19937_64 &gen, Eigen::Index n) {
    std::normal_distribution<double> nd;
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        v(i) = Complex(nd(gen), nd(gen));
    }
    return v / v.norm();
}

std::vector<ShotRecord> nine_bases(const StateVector &s, std::int64_t shots, std::uint64_t seed) {
    std::vector<ShotRecord> recs;
    std::uint64_t stream = 0;
    for (const std::string &b : two_qubit_bases()) {
        recs.push_back(sample_shots(s, b, shots, seed, stream++));
    }
    return recs;
}

} // namespace

TEST_CASE("Bloch vectors", "[tomography]") {
    SECTION("exceptional point branches at t = 1") {
        const BlochVector a = bloch_of(test::vec2(2.0, -kI));
        CHECK(std::abs(a.x) < 1e-15);
        CHECK(a.y == Catch::Approx(-0.8));
        CHECK(a.z == Catch::Approx(0.6));
        const BlochVector b = bloch_of(test::vec2(0.0, -kI));
        CHECK(b.z == Catch::Approx(-1.0));
        CHECK(std::abs(b.y) < 1e-15);
    }
    SECTION("three states at t = 0") {
        const PsiPair p = psi_triple(Hamiltonian::two_level(0.6), 0.0, ket0());
        for (const auto &[tag, b] : three_state_expectations(p)) {
            INFO(tag);
            CHECK(b.z == Catch::Approx(1.0));
            CHECK(std::abs(b.x) < 1e-15);
            CHECK(std::abs(b.y) < 1e-15);
        }
    }
    SECTION("exceptional-point closed forms") {
        // At r = 1 with psi0 = |0>: psi = (1 + t, -it), rho psi = (1 - t, -it),
        // eta psi is parallel to psi + rho psi = 2 (1, -it).
        const Hamiltonian h = Hamiltonian::two_level(1.0);
        for (double t : {0.5, 1.0, 3.0, 10.0}) {
            const PsiPair p = psi_triple(h, t, ket0());
            CHECK(max_abs(p.psi - test::vec2(1.0 + t, -kI * t)) < 1e-11 * (1.0 + t));
            CHECK(max_abs(p.rho_psi - test::vec2(1.0 - t, -kI * t)) < 1e-10 * (1.0 + t * t));
            const auto tri = three_state_expectations(p);
            const double n = 1.0 + t * t;
            CHECK(tri.at("eta_psi").y == Catch::Approx(-2.0 * t / n).epsilon(1e-10));
            CHECK(tri.at("eta_psi").z == Catch::Approx((1.0 - t * t) / n).epsilon(1e-10));
            const double m = (1.0 + t) * (1.0 + t) + t * t;
            CHECK(tri.at("psi").y == Catch::Approx(-2.0 * t * (1.0 + t) / m).epsilon(1e-10));
            CHECK(tri.at("psi").z == Catch::Approx((1.0 + 2.0 * t) / m).epsilon(1e-10));
        }
    }
}

TEST_CASE("single-qubit reconstruction", "[tomography]") {
    CHECK(max_abs(single_qubit_from_bloch({0, 0, 1}).rho - test::mat2({1.0, 0.0, 0.0, 0.0})) < 1e-15);
    CHECK(max_abs(single_qubit_from_bloch({0, 0, 0}).rho - 0.5 * pauli::identity()) < 1e-15);
    const SingleQubitState noisy = single_qubit_from_bloch({0, 0, 1.02});
    CHECK(max_abs(noisy.rho - test::mat2({1.0, 0.0, 0.0, 0.0})) < 1e-15);
    CHECK(noisy.scaling == Catch::Approx(1.0 / 1.02));
    CHECK(single_qubit_from_bloch({0.3, 0, 0}).scaling == 1.0);

    std::mt19937_64 gen(8);
    for (int trial = 0; trial < 50; ++trial) {
        const Vector chi = random_state(gen, 2);
        const Matrix rho = single_qubit_from_bloch(bloch_of(chi)).rho;
        const Spectrum s = eigh(rho);
        CHECK(fidelity(s.eigenvectors.col(1), chi) >= 1.0 - 1e-10);
    }
}

TEST_CASE("two-qubit pure-state tomography", "[tomography]") {
    SECTION("Bell state") {
        Vector bell(4);
        bell << 1.0, 0.0, 0.0, 1.0;
        bell /= std::sqrt(2.0);
        const PureStateEstimate e = two_qubit_pure_tomography(two_qubit_expectations(bell));
        CHECK(fidelity(e.state, bell) >= 1.0 - 1e-12);
        CHECK(e.impurity < 1e-12);
    }
    SECTION("BoNd state at r = 0.6, t = 1") {
        const Hamiltonian h = Hamiltonian::two_level(0.6);
        const Vector psi = bond_u_tot(h, 1.0).matrix * bond_start_state(ket0());
        const PureStateEstimate e = two_qubit_pure_tomography(two_qubit_expectations(psi));
        // equal up to a global phase
        const Complex phase = psi.dot(e.state);
        CHECK((e.state - psi * phase / std::abs(phase)).cwiseAbs().maxCoeff() < 1e-10);
    }
    SECTION("random round trips") {
        std::mt19937_64 gen(12);
        for (int trial = 0; trial < 50; ++trial) {
            const Vector chi = random_state(gen, 4);
            const PureStateEstimate e = two_qubit_pure_tomography(two_qubit_expectations(chi));
            CHECK(fidelity(e.state, chi) >= 1.0 - 1e-10);
        }
    }
    SECTION("shot estimates over 20 seeds") {
        const Hamiltonian h = Hamiltonian::two_level(0.6);
        const Vector psi = bond_u_tot(h, 1.0).matrix * bond_start_state(ket0());
        const StateVector s(psi);
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const auto recs = nine_bases(s, 10000, seed);
            const PureStateEstimate e = two_qubit_pure_tomography(two_qubit_expectations(recs));
            CHECK(fidelity(e.state, psi) >= 0.99);
        }
    }
    SECTION("shot expectations approach exact ones") {
        std::mt19937_64 gen(99);
        const Vector chi = random_state(gen, 4);
        const TwoQubitPaulis exact = two_qubit_expectations(chi);
        const TwoQubitPaulis est = two_qubit_expectations(nine_bases(StateVector(chi), 20000, 4));
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                CHECK(std::abs(est[i][j] - exact[i][j]) <= 4.0 / std::sqrt(20000.0));
            }
        }
    }
    SECTION("errors") {
        TwoQubitPaulis mixed{};
        try {
            two_qubit_pure_tomography(mixed);
            FAIL("expected TooMixed");
        } catch (const Error &e) {
            CHECK(e.code() == ErrorCode::TooMixed);
        }
        const auto recs = nine_bases(StateVector::basis(2, 0), 10, 1);
        CHECK_THROWS_AS(two_qubit_expectations(std::span(recs.data(), 4)), Error);
        const std::vector<ShotRecord> one{sample_shots(StateVector::basis(1, 0), "Z", 10, 1)};
        CHECK_THROWS_AS(two_qubit_expectations(std::span<const ShotRecord>(one)), Error);
    }
}

TEST_CASE("metric reconstruction", "[tomography][metric]") {
    SECTION("u = v gives I / 2") {
        const MetricEstimate m = metric_from_bond_state(bond_vector(ket0(), ket0()));
        CHECK(max_abs(m.rho_normalized - 0.5 * pauli::identity()) < 1e-12);
        CHECK(m.residual < 1e-12);
    }
    SECTION("exceptional point, t = 1") {
        const MetricEstimate m =
            metric_from_bond_state(bond_vector(test::vec2(2.0, -kI), test::vec2(0.0, -kI)));
        CHECK(max_abs(m.rho_normalized - test::rho_r1_t1() / 6.0) < 1e-12);
    }
    SECTION("one full period at r = 0.6") {
        const Hamiltonian h = Hamiltonian::two_level(0.6);
        const Vector psi = bond_u_tot(h, std::numbers::pi / 0.8).matrix * bond_start_state(ket0());
        CHECK(max_abs(metric_from_bond_state(psi).rho_normalized - 0.5 * pauli::identity()) < 1e-6);
    }
    SECTION("exact states over the figure grid") {
        const Vector psi0 = ket0();
        for (double r : {0.6, 0.9, 1.0, 1.2}) {
            const Hamiltonian h = Hamiltonian::two_level(r);
            for (double t : linspace(0.0, 5.0, 51)) {
                const Matrix rho = metric_closed_form(h, t);
                const Vector psi = bond_u_tot(h, t).matrix * bond_start_state(psi0);
                const MetricEstimate m = metric_from_bond_state(psi);
                INFO("r = " << r << ", t = " << t);
                CHECK(max_abs(m.rho_normalized - rho / rho.trace()) <= 1e-8);
                CHECK(std::abs(m.rho_normalized.trace() - 1.0) <= 1e-10);
                CHECK(hermiticity_defect(m.rho_normalized) < 1e-12);
                CHECK(m.residual < 1e-8);
            }
        }
    }
    SECTION("global phase and scale do not matter") {
        const Vector psi = bond_vector(test::vec2(2.0, -kI), test::vec2(0.0, -kI));
        const Matrix a = metric_from_bond_state(psi).rho_normalized;
        const Matrix b = metric_from_bond_state(3.0 * std::exp(kI * 0.7) * psi).rho_normalized;
        CHECK(max_abs(a - b) < 1e-12);
    }
    SECTION("noisy input stays PSD with unit trace") {
        std::mt19937_64 gen(21);
        std::normal_distribution<double> nd(0.0, 0.05);
        const Vector base = bond_vector(test::vec2(2.0, -kI), test::vec2(0.0, -kI));
        for (int trial = 0; trial < 100; ++trial) {
            Vector noisy = base;
            for (Eigen::Index i = 0; i < 4; ++i) {
                noisy(i) += Complex(nd(gen), nd(gen));
            }
            try {
                const MetricEstimate m = metric_from_bond_state(noisy, EstimateSource::Shots);
                CHECK(m.source == EstimateSource::Shots);
                CHECK(std::abs(m.rho_normalized.trace() - 1.0) < 1e-10);
                CHECK(eigh(m.rho_normalized).eigenvalues.minCoeff() >= -1e-12);
            } catch (const Error &e) {
                CHECK(e.code() == ErrorCode::IllConditioned);
            }
        }
    }
    SECTION("vanishing psi branch") {
        try {
            metric_from_bond_state(bond_vector(Vector::Zero(2), ket0()));
            FAIL("expected IllConditioned");
        } catch (const Error &e) {
            CHECK(e.code() == ErrorCode::IllConditioned);
        }
        CHECK_THROWS_AS(metric_from_bond_state(ket0()), Error);
    }
}

TEST_CASE("fidelity", "[tomography]") {
    CHECK(fidelity(ket0(), ket0()) == 1.0);
    CHECK(fidelity(ket0(), test::vec2(0.0, 1.0)) == 0.0);
    CHECK(fidelity(ket0(), plus_state()) == Catch::Approx(0.5));
    CHECK(fidelity(3.0 * ket0(), kI * ket0()) == Catch::Approx(1.0));
}
