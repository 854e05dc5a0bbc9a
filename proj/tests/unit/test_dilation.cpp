#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "nhd/circuit.hpp"
#include "nhd/dilation.hpp"
#include "test_helpers.hpp"

using namespace nhd;

namespace {

double max_abs(const Matrix &m) { return m.cwiseAbs().maxCoeff(); }

Vector ket0() { return test::vec2(1.0, 0.0); }

/// Smallest eigenvalue of a 2x2 Hermitian matrix from the quadratic formula.
double min_eig_2x2(const Matrix &m) {
    const double a = m(0, 0).real();
    const double d = m(1, 1).real();
    return 0.5 * (a + d - std::sqrt((a - d) * (a - d) + 4.0 * std::norm(m(0, 1))));
}

/// Post-selected, normalized system state and its probability.
PostSelection run_and_select(const Matrix &u, const Vector &start, const char *bits) {
    return postselect(apply_unitary(StateVector(start), u), bits);
}

} // namespace

TEST_CASE("c_default", "[dilation]") {
    CHECK(c_default(Matrix::Identity(2, 2), 2) == Catch::Approx(2.0));
    CHECK(c_default(test::rho_r1_t1(), 2) == Catch::Approx(6.0).epsilon(1e-12));
    CHECK(c_default(metric_g(test::rho_r1_t1()), 4) == Catch::Approx(4.0).epsilon(1e-12));
    try {
        c_default(Matrix::Zero(2, 2), 2);
        FAIL("expected Singular");
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::Singular);
    }
}

TEST_CASE("general-C dilation", "[dilation][zeta]") {
    SECTION("C = 2 at rho = I is a Hadamard on the ancilla") {
        const DilationOperator op = zeta_general_inverse(Matrix::Identity(2, 2), 2.0);
        CHECK(max_abs(op.matrix - kron(pauli::identity(), hadamard())) < 1e-15);
        CHECK(op.valid);
    }
    SECTION("C = 1 at rho = I has the Naimark block form") {
        const DilationOperator op = zeta_general_inverse(Matrix::Identity(2, 2), 1.0);
        CHECK(max_abs(op.matrix - kron(pauli::identity(), pauli::z())) < 1e-15);
        CHECK(op.unitarity < 1e-15);
    }
    SECTION("C = tr rho makes the off-diagonal block eta") {
        const Matrix rho = test::rho_r1_t1();
        const DilationOperator op = zeta_general_inverse(rho, 6.0, 1.0);
        CHECK(op.unitarity <= 1e-10);
        Matrix off(2, 2);
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) {
                off(i, j) = op.matrix(2 * i, 2 * j + 1) * std::sqrt(6.0);
            }
        }
        CHECK(max_abs(off - principal_sqrt_hpd(rho)) < 1e-12);
    }
    SECTION("unitary for every admissible C") {
        std::mt19937_64 gen(42);
        std::uniform_real_distribution<double> ud(0.0, 1.0);
        for (int trial = 0; trial < 100; ++trial) {
            const Matrix rho = test::random_det1_hpd(gen);
            const double c = rho.trace().real() * (1.0 + ud(gen));
            CHECK(zeta_general_inverse(rho, c).unitarity <= 1e-10);
        }
    }
    SECTION("inadmissible C") {
        const Matrix rho = test::rho_r1_t1();
        try {
            zeta_general_inverse(rho, 1.0, 1.0);
            FAIL("expected InvalidC");
        } catch (const Error &e) {
            CHECK(e.code() == ErrorCode::InvalidC);
            REQUIRE(e.value());
            // C - lambda_max(rho^{-1}) = 1 - (3 + 2 sqrt 2)
            CHECK(*e.value() == Catch::Approx(1.0 - (3.0 + 2.0 * std::sqrt(2.0))).epsilon(1e-10));
            REQUIRE(e.time());
            CHECK(*e.time() == 1.0);
        }
    }
}

TEST_CASE("BoNd propagator", "[dilation][bond]") {
    SECTION("t = t0 splits evenly") {
        const Hamiltonian h = Hamiltonian::two_level(0.6);
        const DilationOperator op = bond_u_tot(h, 0.0);
        const Vector out = op.matrix * bond_start_state(ket0());
        CHECK(max_abs(out - kron(ket0(), plus_state())) < 1e-14);
    }
    SECTION("exceptional point, t = 1") {
        const Hamiltonian h = Hamiltonian::two_level(1.0);
        const DilationOperator op = bond_u_tot(h, 1.0);
        CHECK(op.c_value == Catch::Approx(6.0).epsilon(1e-12));
        const PostSelection p0 = run_and_select(op.matrix, bond_start_state(ket0()), "0");
        const PostSelection p1 = run_and_select(op.matrix, bond_start_state(ket0()), "1");
        CHECK(std::abs(p0.probability - 5.0 / 6.0) <= 1e-9);
        CHECK(std::abs(p1.probability - 1.0 / 6.0) <= 1e-9);
        CHECK(max_abs(p0.system_state - test::vec2(2.0, -kI) / std::sqrt(5.0)) <= 1e-9);
        CHECK(max_abs(p1.system_state - test::vec2(0.0, -kI)) <= 1e-9);

        const DilatedTarget target = bond_target(test::vec2(2.0, -kI), test::rho_r1_t1());
        CHECK(target.branches.at("0").probability == Catch::Approx(5.0 / 6.0));
        CHECK(target.branches.at("1").probability == Catch::Approx(1.0 / 6.0));
    }
    SECTION("one period returns to an even split") {
        const Hamiltonian h = Hamiltonian::two_level(0.6);
        const DilationOperator op = bond_u_tot(h, std::numbers::pi / 0.8);
        const PostSelection p0 = run_and_select(op.matrix, bond_start_state(ket0()), "0");
        CHECK(std::abs(p0.probability - 0.5) < 1e-10);
    }
    SECTION("unitary on the default grid for every r") {
        for (double r : {0.6, 0.9, 1.0, 1.2}) {
            const Hamiltonian h = Hamiltonian::two_level(r);
            double worst = 0.0;
            for (double t : linspace(0.0, 5.0, 101)) {
                const DilationOperator op = bond_u_tot(h, t);
                worst = std::max(worst, op.unitarity);
                CHECK(op.valid);
            }
            INFO("r = " << r);
            CHECK(worst <= 1e-10);
        }
    }
    SECTION("target state is exactly normalized") {
        const Vector psi0 = test::vec2(0.6, 0.8 * kI);
        for (double r : {0.6, 1.0, 1.2}) {
            const Hamiltonian h = Hamiltonian::two_level(r);
            for (double t : {0.3, 1.7, 4.2}) {
                const PsiPair p = psi_triple(h, t, psi0);
                const DilatedTarget target = bond_target(p.psi, metric_closed_form(h, t));
                CHECK(std::abs(target.total_probability() - 1.0) <= 1e-10);
            }
        }
    }
}

TEST_CASE("GBoNd constructions", "[dilation][gbond]") {
    SECTION("literal operator: unitary only when tr rho = 2") {
        const DilationOperator z0 = gbond_literal_zeta(metric_g(Matrix::Identity(2, 2)));
        CHECK(z0.unitarity < 1e-14);
        CHECK(max_abs(z0.matrix - kron(Matrix::Identity(4, 4), hadamard())) < 1e-14);

        const Hamiltonian h0 = Hamiltonian::two_level(0.0);
        CHECK(gbond_literal_zeta(metric_g(metric_closed_form(h0, 2.0))).unitarity < 1e-12);

        const Hamiltonian h = Hamiltonian::two_level(0.6);
        const Matrix rho = metric_closed_form(h, 1.0);
        const DilationOperator z1 = gbond_literal_zeta(metric_g(rho), std::nullopt, 1.0);
        // U^dagger U = diag((rho_G + rho_G^{-1}) / C) twice; rho + rho^{-1} = tr(rho) I
        const double tr = rho.trace().real();
        const double c = (tr + 2.0) / 2.0;
        const double expected = 2.0 * std::hypot(tr / c - 1.0, 2.0 / c - 1.0);
        CHECK(z1.unitarity == Catch::Approx(expected).epsilon(1e-9));
        CHECK(z1.unitarity > 1e-6);
        CHECK_FALSE(z1.valid);
    }
    SECTION("canonical operator at t = t0 gives four equal branches") {
        const DilationOperator op = gbond_canonical_u_tot(Hamiltonian::two_level(0.6), 0.0);
        const Vector start = gbond_start_state(ket0());
        for (const char *bits : {"00", "01", "10", "11"}) {
            const PostSelection p = run_and_select(op.matrix, start, bits);
            CHECK(std::abs(p.probability - 0.25) < 1e-12);
            CHECK(max_abs(p.system_state - ket0()) < 1e-12);
        }
    }
    SECTION("canonical operator at the exceptional point, t = 1") {
        const Hamiltonian h = Hamiltonian::two_level(1.0);
        const DilationOperator op = gbond_canonical_u_tot(h, 1.0);
        const Vector start = gbond_start_state(ket0());
        const Vector chi = principal_sqrt_hpd(test::rho_r1_t1()) * test::vec2(2.0, -kI);
        const std::vector<std::pair<const char *, double>> expected_p{
            {"00", 5.0 / 12.0}, {"10", 1.0 / 12.0}, {"01", 0.25}, {"11", 0.25}};
        for (const auto &[bits, prob] : expected_p) {
            INFO(bits);
            CHECK(std::abs(run_and_select(op.matrix, start, bits).probability - prob) <= 1e-9);
        }
        CHECK(max_abs(run_and_select(op.matrix, start, "00").system_state -
                      test::vec2(2.0, -kI) / std::sqrt(5.0)) <= 1e-9);
        CHECK(max_abs(run_and_select(op.matrix, start, "10").system_state - test::vec2(0.0, -kI)) <=
              1e-9);
        CHECK(max_abs(run_and_select(op.matrix, start, "01").system_state - chi / chi.norm()) <= 1e-9);
        CHECK(max_abs(run_and_select(op.matrix, start, "11").system_state - chi / chi.norm()) <= 1e-9);

        const DilatedTarget target = gbond_target(test::vec2(2.0, -kI), test::rho_r1_t1());
        CHECK(std::abs(target.total_probability() - 1.0) < 1e-10);
        CHECK(target.branches.at("00").probability == Catch::Approx(5.0 / 12.0));
    }
    SECTION("canonical operator is unitary") {
        for (double r : {0.6, 1.2}) {
            const Hamiltonian h = Hamiltonian::two_level(r);
            for (double t : linspace(0.0, 5.0, 51)) {
                CHECK(gbond_canonical_u_tot(h, t).unitarity <= 1e-10);
            }
        }
    }
}

TEST_CASE("post-selected states agree across schemes", "[dilation][equality]") {
    const Vector psi0 = test::vec2(1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0));
    for (double r : {0.6, 0.9, 1.0, 1.2}) {
        const Hamiltonian h = Hamiltonian::two_level(r);
        const double kappa = naimark_prefactor(h);
        for (double t : linspace(0.0, 5.0, 26)) {
            INFO("r = " << r << ", t = " << t);
            const PsiPair ref = psi_triple(h, t, psi0);
            const Matrix rho = metric_closed_form(h, t);
            const Matrix b = bond_u_tot(h, t).matrix;
            const Matrix g = gbond_canonical_u_tot(h, t).matrix;
            const Vector bs = bond_start_state(psi0);
            const Vector gs = gbond_start_state(psi0);

            const Vector psi_n = ref.psi / ref.psi.norm();
            const Vector rho_n = ref.rho_psi / ref.rho_psi.norm();
            CHECK(max_abs(run_and_select(b, bs, "0").system_state - psi_n) <= 1e-9);
            CHECK(max_abs(run_and_select(b, bs, "1").system_state - rho_n) <= 1e-9);
            CHECK(max_abs(run_and_select(g, gs, "00").system_state - psi_n) <= 1e-9);
            CHECK(max_abs(run_and_select(g, gs, "10").system_state - rho_n) <= 1e-9);
            CHECK(max_abs(run_and_select(g, gs, "01").system_state - ref.eta_psi) <= 1e-9);
            CHECK(max_abs(run_and_select(g, gs, "11").system_state - ref.eta_psi) <= 1e-9);
            if (naimark_margin(rho, kappa) >= -1e-10) {
                const DilatedTarget n = naimark_state(ref.psi, rho, t, kappa);
                CHECK(max_abs(n.branches.at("0").normalized() - psi_n) <= 1e-9);
                CHECK(std::abs(n.total_probability() - 1.0) <= 1e-10);
            }
        }
    }
}

TEST_CASE("Naimark dilation", "[dilation][naimark]") {
    SECTION("t = 0 puts all weight on ancilla 0") {
        const DilatedTarget n = naimark_state(ket0(), Matrix::Identity(2, 2), 0.0);
        CHECK(n.branches.at("0").probability == Catch::Approx(1.0));
        CHECK(n.branches.at("1").probability < 1e-20);
    }
    SECTION("unit-determinant metric makes the textbook form fail at once") {
        const Hamiltonian h = Hamiltonian::two_level(0.6);
        const Matrix rho = metric_closed_form(h, 0.5);
        const double lo = min_eig_2x2(rho - Matrix::Identity(2, 2));
        CHECK(lo < -0.1);
        try {
            naimark_state(propagator(h, 0.5) * ket0(), rho, 0.5);
            FAIL("expected NaimarkInvalid");
        } catch (const Error &e) {
            CHECK(e.code() == ErrorCode::NaimarkInvalid);
            REQUIRE(e.value());
            CHECK(*e.value() == Catch::Approx(lo).epsilon(1e-9));
            REQUIRE(e.time());
            CHECK(*e.time() == 0.5);
        }
    }
    SECTION("prefactor at r = 0.6 is (1 + r) / (1 - r)") {
        // rho(T/2) = ((1 + r^2) I + 2 r sigma_y) / (1 - r^2) has the smallest eigenvalue
        const Hamiltonian h = Hamiltonian::two_level(0.6);
        CHECK(naimark_prefactor(h) == Catch::Approx(4.0).epsilon(1e-7));
        CHECK(naimark_prefactor(Hamiltonian::two_level(0.0)) == Catch::Approx(1.0));
        CHECK(naimark_prefactor(Hamiltonian::two_level(1.2)) == 1.0);
    }
    SECTION("valid over a period at r = 0.6, invalid onset at r = 1.2") {
        const Hamiltonian h06 = Hamiltonian::two_level(0.6);
        const double period = std::numbers::pi / 0.8;
        const double kappa = naimark_prefactor(h06);
        CHECK_FALSE(naimark_onset(h06, linspace(0.0, period, 1001), kappa));

        const Hamiltonian h12 = Hamiltonian::two_level(1.2);
        const std::vector<double> grid = linspace(0.0, 5.0, 501);
        const auto onset = naimark_onset(h12, grid, naimark_prefactor(h12));
        REQUIRE(onset);
        CHECK(*onset <= 5.0);
        // scan oracle on the same 0.01 grid
        double first = -1.0;
        for (double t : grid) {
            if (min_eig_2x2(metric_closed_form(h12, t) - Matrix::Identity(2, 2)) < -1e-10) {
                first = t;
                break;
            }
        }
        CHECK(*onset == first);
    }
    SECTION("branch 0 is the norm-method state") {
        const Hamiltonian h = Hamiltonian::two_level(0.9);
        const double kappa = naimark_prefactor(h);
        const Vector psi = propagator(h, 1.3) * ket0();
        const Vector full = naimark_dilated_state(psi, metric_closed_form(h, 1.3), 1.3, kappa);
        CHECK(std::abs(full.norm() - 1.0) < 1e-10);
        const PostSelection p = postselect(StateVector(full), "0");
        CHECK(max_abs(p.system_state - psi / psi.norm()) < 1e-12);
        CHECK(p.probability == Catch::Approx(psi.squaredNorm() / kappa).epsilon(1e-12));
    }
}

TEST_CASE("total Hamiltonian", "[dilation][htot]") {
    SECTION("Hermitian H gives sigma_x (x) I") {
        const Hamiltonian h = Hamiltonian::two_level(0.0);
        const std::vector<double> grid = linspace(0.0, 1.0, 11);
        const MetricTrajectory tr = build_trajectory(h, grid);
        std::vector<Matrix> z;
        for (const Matrix &rho : tr.rho) {
            z.push_back(zeta_general_inverse(rho, c_default(rho, 2)).matrix);
        }
        for (const Matrix &m : total_hamiltonian(z, tr.h, grid)) {
            CHECK(max_abs(m - kron(pauli::x(), pauli::identity())) < 1e-10);
        }
    }
    SECTION("BoNd generator at r = 0.6") {
        const Hamiltonian h = Hamiltonian::two_level(0.6);
        const double t = 1.1;
        auto h_tot_at = [&](double t_mid) {
            const std::vector<double> grid = linspace(t_mid - 2e-3, t_mid + 2e-3, 5);
            std::vector<Matrix> z;
            std::vector<Matrix> hh;
            for (double s : grid) {
                const Matrix rho = metric_closed_form(h, s);
                z.push_back(zeta_general_inverse(rho, c_default(rho, 2)).matrix);
            }
            // h on a grid anchored at t0 = 0 with the same spacing
            const double end = t_mid + 2e-3;
            const auto points = static_cast<std::size_t>(std::lround(end / 1e-3)) + 1;
            const MetricTrajectory tr = build_trajectory(h, linspace(0.0, end, points));
            for (std::size_t k = 0; k < 5; ++k) {
                hh.push_back(tr.h[tr.size() - 5 + k]);
            }
            return total_hamiltonian(z, hh, grid)[2];
        };
        const Matrix ht = h_tot_at(t);
        CHECK(hermiticity_defect(ht) <= 1e-5);
        CHECK(hermiticity_defect(h_tot_at(0.0 + 2e-3)) <= 1e-5);

        const Matrix u = bond_u_tot(h, t).matrix;
        auto defect = [&](double delta) {
            const Matrix step = Matrix::Identity(4, 4) - kI * delta * ht;
            return (bond_u_tot(h, t + delta).matrix - step * u).norm();
        };
        const double ratio = defect(1e-2) / defect(1e-3);
        CHECK(ratio > 50.0);
        CHECK(ratio < 200.0);
    }
    SECTION("length mismatch") {
        const std::vector<Matrix> one(1, Matrix::Identity(4, 4));
        const std::vector<Matrix> two(2, Matrix::Identity(2, 2));
        CHECK_THROWS_AS(total_hamiltonian(one, two, std::vector<double>{0.0, 1.0}), Error);
    }
}
