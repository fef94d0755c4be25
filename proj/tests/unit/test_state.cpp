#include "doctest.h"

#include <cmath>
#include <numbers>
#include <numeric>

#include "fock.hpp"
#include "random_state.hpp"
#include "skinsim/engine.hpp"
#include "skinsim/state.hpp"

using namespace skinsim;
using cd = std::complex<double>;

namespace {

std::vector<int> range(int lo, int hi) {
    std::vector<int> v(static_cast<std::size_t>(hi - lo));
    std::iota(v.begin(), v.end(), lo);
    return v;
}

// L = 2 state (c_1^+ + c_2^+)/sqrt 2 |0>
SlaterState delocalized_pair() {
    Eigen::MatrixXcd U(2, 1);
    U << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    return SlaterState(U);
}

// A generic L = 8 state reached by monitored evolution with feedback.
SlaterState evolved_state(double t, std::uint64_t index = 0) {
    ModelSpec s;
    s.L = 8;
    s.W = 0.7;
    s.disorder = Disorder::quasiperiodic;
    const auto prop = prepare_propagation(s, 0.05);
    Trajectory traj(prop, neel_state(8), 11, index);
    while (traj.time() < t - 1e-12) traj.step();
    return traj.state();
}

} // namespace

TEST_CASE("Neel state") {
    const auto psi = neel_state(4);
    const Eigen::VectorXd n = density(psi);
    CHECK(n == Eigen::Vector4d(0, 1, 0, 1));
    for (int L : {2, 4, 10, 32}) {
        const auto s = neel_state(L);
        CHECK(s.particles() == L / 2);
        CHECK(half_chain_entropy(correlation_matrix(s)) == 0.0);
        CHECK(f_r(s, s) == doctest::Approx(1.0).epsilon(1e-15));
    }
    CHECK_THROWS_AS(neel_state(5), std::invalid_argument);
}

TEST_CASE("ground state fills the lowest eigenvectors") {
    ModelSpec s;
    s.L = 7;
    s.W = 3.0;
    s.disorder = Disorder::quasiperiodic;
    const auto h = build_hamiltonian(s);
    const auto g = ground_state(h, 3);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    const double expected = es.eigenvalues().head(3).sum();
    const double energy = (g.orbitals().adjoint() * h * g.orbitals()).trace().real();
    CHECK(energy == doctest::Approx(expected).epsilon(1e-12));
    CHECK_THROWS_AS(ground_state(h, 8), std::invalid_argument);
}

TEST_CASE("ground-state entanglement matches exact diagonalization") {
    ModelSpec s;
    s.L = 8;
    const auto h = build_hamiltonian(s);
    const auto g = ground_state(h, 4);

    // Exact many-body ground state in the N = 4 sector.
    const fock::Mat H = fock::quadratic(h);
    std::vector<std::uint32_t> sector;
    for (std::uint32_t m = 0; m < 256; ++m)
        if (std::popcount(m) == 4) sector.push_back(m);
    fock::Mat Hs(sector.size(), sector.size());
    for (std::size_t a = 0; a < sector.size(); ++a)
        for (std::size_t b = 0; b < sector.size(); ++b) Hs(a, b) = H(sector[a], sector[b]);
    Eigen::SelfAdjointEigenSolver<fock::Mat> es(Hs);
    fock::Vec psi = fock::Vec::Zero(256);
    for (std::size_t a = 0; a < sector.size(); ++a) psi(sector[a]) = es.eigenvectors()(a, 0);

    CHECK(half_chain_entropy(correlation_matrix(g)) == doctest::Approx(fock::entropy(psi, 8, range(0, 4))).epsilon(1e-10));
}

TEST_CASE("random Fock states") {
    RandomStream rng(3, 0);
    for (int trial = 0; trial < 20; ++trial) {
        const auto s = random_fock_state(10, 5, rng);
        const Eigen::VectorXd n = density(s);
        CHECK(n.sum() == doctest::Approx(5.0));
        for (int i = 0; i < 10; ++i) CHECK((n(i) == 0.0 || n(i) == 1.0));
    }
    CHECK_THROWS_AS(random_fock_state(4, 5, rng), std::invalid_argument);
}

TEST_CASE("entanglement entropy examples") {
    const auto neel = neel_state(8);
    CHECK(entanglement_entropy(neel, std::vector<int>{0, 3, 5}) == 0.0);
    CHECK(entanglement_entropy(neel, std::vector<int>{}) == 0.0);
    CHECK(entanglement_entropy(delocalized_pair(), std::vector<int>{0}) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(entanglement_entropy(delocalized_pair(), std::vector<int>{0}) == doctest::Approx(0.6931).epsilon(1e-4));
    CHECK_THROWS_AS(entanglement_entropy(neel, std::vector<int>{8}), std::out_of_range);
    CHECK_THROWS_AS(entanglement_entropy(neel, std::vector<int>{1, 1}), std::invalid_argument);
}

TEST_CASE("Gaussian observables agree with the Fock-space evaluation") {
    for (double t : {0.5, 1.0, 2.0}) {
        const auto st = evolved_state(t);
        const fock::Vec psi = fock::from_orbitals(st.orbitals());
        const auto C = correlation_matrix(st);
        const int L = 8;

        CHECK((C - fock::correlation(psi, L)).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((density(st) - fock::density(psi, L)).cwiseAbs().maxCoeff() < 1e-10);
        for (const auto& A : {range(0, 4), range(0, 2), std::vector<int>{1, 4, 6}, range(3, 7)})
            CHECK(entanglement_entropy(C, A) == doctest::Approx(fock::entropy(psi, L, A)).epsilon(1e-8));

        const std::vector<int> A{0, 1}, B{6, 7};
        std::vector<int> AB{0, 1, 6, 7};
        const double mi_oracle = fock::entropy(psi, L, A) + fock::entropy(psi, L, B) - fock::entropy(psi, L, AB);
        CHECK(mutual_information(C, A, B) == doctest::Approx(mi_oracle).epsilon(1e-8));

        for (int i = 0; i < L; ++i) {
            for (int j = 0; j < L; ++j) {
                if (i == j) continue;
                const double nn = fock::expect(psi, fock::number_op(L, i) * fock::number_op(L, j));
                const double oracle = fock::expect(psi, fock::number_op(L, i)) * fock::expect(psi, fock::number_op(L, j)) - nn;
                CHECK(density_correlation(C, i, j) == doctest::Approx(oracle).epsilon(1e-10));
                CHECK(density_correlation(st, i, j) == doctest::Approx(oracle).epsilon(1e-10));
            }
        }

        const std::uint32_t skin_mask = 0b1111;
        CHECK(f_skin(st) == doctest::Approx(std::norm(psi(skin_mask))).epsilon(1e-10));
        const fock::Vec neel = fock::from_orbitals(neel_state(L).orbitals());
        CHECK(f_r(st, neel_state(L)) == doctest::Approx(std::norm(neel.dot(psi))).epsilon(1e-10));
    }
}

TEST_CASE("mutual information examples") {
    const auto neel = neel_state(8);
    CHECK(mutual_information(neel, range(0, 2), range(6, 8)) == 0.0);
    RandomStream rng(8, 1);
    const auto st = testing_support::random_slater(8, 4, rng);
    const auto A = range(0, 3), B = range(3, 8);
    CHECK(mutual_information(st, A, B) == doctest::Approx(2.0 * entanglement_entropy(st, A)).epsilon(1e-10));
    CHECK_THROWS_AS(mutual_information(st, range(0, 3), range(2, 5)), std::invalid_argument);
}

TEST_CASE("momentum distribution") {
    const Eigen::VectorXd nk = momentum_density(neel_state(8));
    CHECK((nk.array() - 0.5).abs().maxCoeff() < 1e-14);

    const Eigen::VectorXd k = momentum_grid(6);
    CHECK(k(0) == doctest::Approx(-std::numbers::pi));
    CHECK(k(3) == 0.0);

    for (double J : {1.0, -1.0}) {
        ModelSpec s;
        s.L = 6;
        s.J = J;
        s.bc = Boundary::periodic;
        const Eigen::VectorXd n = momentum_density(ground_state(build_hamiltonian(s), 3));
        CHECK(n.sum() == doctest::Approx(3.0).epsilon(1e-12));
        for (int m = 0; m < 6; ++m) {
            const bool inner = std::abs(k(m)) < std::numbers::pi / 2;
            // epsilon_k = 2 J cos k fills the inner zone for J < 0 and the outer one for J > 0
            const double expected = (inner == (J < 0)) ? 1.0 : 0.0;
            CHECK(n(m) == doctest::Approx(expected).epsilon(1e-12));
        }
    }
}

TEST_CASE("density correlation examples") {
    CHECK(density_correlation(neel_state(6), 1, 4) == 0.0);
    CHECK(density_correlation(delocalized_pair(), 0, 1) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK_THROWS_AS(density_correlation(neel_state(6), 2, 2), std::invalid_argument);
}

TEST_CASE("overlaps and skin fidelity") {
    RandomStream rng(4, 2);
    const auto st = testing_support::random_slater(9, 4, rng);
    CHECK(std::abs(overlap(st, st) - cd(1.0)) < 1e-12);
    CHECK(f_skin(neel_state(8)) == 0.0);
    CHECK(f_skin(skin_state(8, 4)) == 1.0);
    CHECK_THROWS_AS(overlap(neel_state(8), skin_state(8, 3)), std::invalid_argument);
    // log-magnitude accumulation underflows cleanly
    CHECK(f_skin(neel_state(2000)) == 0.0);
}

TEST_CASE("property: purity symmetry, trace, gauge invariance and entropy bounds") {
    RandomStream rng(77, 0);
    for (int trial = 0; trial < 25; ++trial) {
        const int L = 4 + static_cast<int>(rng.below(12));
        const int N = static_cast<int>(rng.below(static_cast<std::uint64_t>(L + 1)));
        const auto st = testing_support::random_slater(L, N, rng);
        const auto C = correlation_matrix(st);

        CHECK(std::abs(C.trace() - cd(N)) < 1e-10);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(C, Eigen::EigenvaluesOnly);
        CHECK(es.eigenvalues().minCoeff() >= -1e-10);
        CHECK(es.eigenvalues().maxCoeff() <= 1.0 + 1e-10);

        std::vector<int> A, B;
        for (int i = 0; i < L; ++i) (rng.uniform() < 0.5 ? A : B).push_back(i);
        const double SA = entanglement_entropy(C, A);
        CHECK(SA == doctest::Approx(entanglement_entropy(C, B)).epsilon(1e-8));
        CHECK(SA >= 0.0);
        CHECK(SA <= static_cast<double>(A.size()) * std::log(2.0) + 1e-12);

        const auto mix = testing_support::random_isometry(N, N, rng);
        const SlaterState rotated(st.orbitals() * mix);
        const auto ref = testing_support::random_slater(L, N, rng);
        CHECK(overlap_probability(ref, rotated) == doctest::Approx(overlap_probability(ref, st)).epsilon(1e-10));
        CHECK(overlap_probability(ref, st) <= 1.0 + 1e-10);
        CHECK(f_skin(rotated) == doctest::Approx(f_skin(st)).epsilon(1e-10));
    }
}

TEST_CASE("binary entropy clips out-of-range eigenvalues") {
    CHECK(binary_entropy(-1e-16) == 0.0);
    CHECK(binary_entropy(1.0 + 1e-16) == 0.0);
    CHECK(binary_entropy(0.5) == doctest::Approx(std::log(2.0)));
}
