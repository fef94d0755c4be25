#include "doctest.h"

#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "fock.hpp"
#include "random_state.hpp"
#include "skinsim/engine.hpp"

using namespace skinsim;
using cd = std::complex<double>;

namespace {

ModelSpec chain(int L) {
    ModelSpec s;
    s.L = L;
    return s;
}

EngineConfig config(double t_max, double dt = 0.05) {
    EngineConfig c;
    c.t_max = t_max;
    c.dt = dt;
    return c;
}

double spectral_norm(const Eigen::MatrixXcd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
    return svd.singularValues()(0);
}

SlaterState single_particle(int L, int site) {
    return fock_state(L, std::vector<int>{site});
}

} // namespace

TEST_CASE("propagator") {
    SUBCASE("zero generator gives the identity") {
        const auto K = make_propagator(Eigen::MatrixXcd::Zero(5, 5), 0.05);
        CHECK(K.isIdentity(0.0));
    }
    SUBCASE("no monitoring gives a unitary") {
        ModelSpec s = chain(12);
        s.gamma = 0.0;
        s.W = 1.0;
        s.disorder = Disorder::quasiperiodic;
        const auto K = make_propagator(build_effective_hamiltonian(s), 0.05);
        CHECK((K.adjoint() * K - Eigen::MatrixXcd::Identity(12, 12)).cwiseAbs().maxCoeff() < 1e-10);
    }
    SUBCASE("two-site chain against an eigendecomposition") {
        const auto heff = build_effective_hamiltonian(chain(2));
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(heff);
        const Eigen::MatrixXcd V = es.eigenvectors();
        Eigen::VectorXcd phases = (cd(0.0, -0.05) * es.eigenvalues()).array().exp();
        const Eigen::MatrixXcd oracle = V * phases.asDiagonal() * V.inverse();
        CHECK((make_propagator(heff, 0.05) - oracle).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("monitored propagator is a contraction") {
        ModelSpec s = chain(20);
        s.bc = Boundary::periodic;
        CHECK(spectral_norm(make_propagator(build_effective_hamiltonian(s), 0.1)) <= 1.0 + 1e-8);
    }
}

TEST_CASE("non-Hermitian step") {
    RandomStream rng(1, 1);
    const auto st = testing_support::random_slater(10, 4, rng);

    SUBCASE("identity propagator keeps every observable") {
        const auto next = nonhermitian_step(st, Eigen::MatrixXcd::Identity(10, 10));
        CHECK((correlation_matrix(next) - correlation_matrix(st)).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(next.orthonormality_error() < 1e-12);
    }
    SUBCASE("unitary evolution conserves energy") {
        ModelSpec s = chain(10);
        s.gamma = 0.0;
        const auto h = build_hamiltonian(s);
        const auto K = make_propagator(h, 0.05);
        auto energy = [&](const SlaterState& x) { return (x.orbitals().adjoint() * h * x.orbitals()).trace().real(); };
        SlaterState x = st;
        for (int k = 0; k < 1000; ++k) x = nonhermitian_step(x, K);
        CHECK(energy(x) == doctest::Approx(energy(st)).epsilon(1e-8));
    }
    SUBCASE("matches renormalized Fock-space evolution step by step") {
        ModelSpec s = chain(8);
        const auto sp = build_single_particle(s);
        const auto K = make_propagator(sp.h_eff, 0.05);
        const fock::Mat Kf = (cd(0.0, -0.05) * fock::quadratic(sp.h_eff)).exp();
        SlaterState x = neel_state(8);
        fock::Vec psi = fock::from_orbitals(x.orbitals());
        double worst = 1.0;
        for (int k = 0; k < 50; ++k) {
            x = nonhermitian_step(x, K);
            psi = (Kf * psi).normalized();
            worst = std::min(worst, std::norm(fock::from_orbitals(x.orbitals()).dot(psi)));
        }
        CHECK(worst >= 1.0 - 1e-8);
    }
    SUBCASE("rank-deficient input is rejected") {
        Eigen::MatrixXcd K = Eigen::MatrixXcd::Identity(10, 10);
        K.row(0).setZero();
        CHECK_THROWS_AS(nonhermitian_step(fock_state(10, std::vector<int>{0, 1}), K), std::runtime_error);
    }
}

TEST_CASE("jump sampling") {
    const ModelSpec s = chain(8);
    const auto channels = build_jump_modes(s);
    SUBCASE("vacuum never jumps") {
        const auto vac = fock_state(8, std::vector<int>{});
        RandomStream rng(1, 0);
        for (int k = 0; k < 100; ++k) CHECK(sample_jumps(vac, s, 0.05, rng).empty());
        for (double p : jump_probabilities(vac, channels, s.gamma, 0.05)) CHECK(p == 0.0);
    }
    SUBCASE("full chain fires every channel with probability gamma dt") {
        std::vector<int> all(8);
        std::iota(all.begin(), all.end(), 0);
        for (double p : jump_probabilities(fock_state(8, all), channels, s.gamma, 0.05))
            CHECK(p == doctest::Approx(0.025).epsilon(1e-15));
    }
    SUBCASE("Neel state has half that probability") {
        for (double p : jump_probabilities(neel_state(8), channels, s.gamma, 0.05))
            CHECK(p == doctest::Approx(0.0125).epsilon(1e-15));
    }
    SUBCASE("one uniform per channel in ascending order") {
        std::vector<double> p{1.0, 0.0, 0.5, 1.0};
        RandomStream a(5, 9), b(5, 9);
        const auto fired = sample_jumps(p, a);
        std::vector<int> expected;
        for (int l = 0; l < 4; ++l)
            if (b.uniform() < p[static_cast<std::size_t>(l)]) expected.push_back(l);
        CHECK(fired == expected);
        CHECK(a.draws() == 4);
    }
}

TEST_CASE("jump application") {
    ModelSpec s = chain(6);
    const auto channels = build_jump_modes(s);
    SUBCASE("single particle splits across the bond") {
        const auto after = apply_jump(single_particle(6, 2), channels[2], s.theta);
        const Eigen::VectorXd n = density(after);
        CHECK(n(2) == doctest::Approx(0.5).epsilon(1e-14));
        CHECK(n(3) == doctest::Approx(0.5).epsilon(1e-14));
        CHECK(n.sum() == doctest::Approx(1.0).epsilon(1e-14));
        // d^+ d e_l = d / sqrt 2, then the phase flips the second component.
        const cd a = after.orbitals()(2, 0), b = after.orbitals()(3, 0);
        CHECK(std::abs(b / a - cd(0.0, 1.0)) < 1e-14);
    }
    SUBCASE("orthogonal particle cannot jump") {
        CHECK_THROWS_AS(apply_jump(single_particle(6, 4), channels[2], s.theta), std::runtime_error);
    }
    SUBCASE("full chain is unchanged") {
        std::vector<int> all(6);
        std::iota(all.begin(), all.end(), 0);
        const auto full = fock_state(6, all);
        const auto after = apply_jump(full, channels[1], s.theta);
        CHECK((density(after).array() - 1.0).abs().maxCoeff() < 1e-14);
        const fock::Vec a = fock::from_orbitals(full.orbitals());
        const fock::Vec b = fock::from_orbitals(after.orbitals());
        CHECK(std::abs(std::abs(a.dot(b)) - 1.0) < 1e-12);
    }
    SUBCASE("generic state matches the Fock-space jump") {
        RandomStream rng(12, 0);
        const auto jumps = fock::jump_ops(s);
        for (int trial = 0; trial < 10; ++trial) {
            const auto st = testing_support::random_slater(6, 3, rng);
            for (std::size_t l = 0; l < channels.size(); ++l) {
                const auto after = apply_jump(st, channels[l], s.theta);
                const fock::Vec oracle = (jumps[l] * fock::from_orbitals(st.orbitals())).normalized();
                CHECK(std::norm(fock::from_orbitals(after.orbitals()).dot(oracle)) >= 1.0 - 1e-12);
            }
        }
    }
}

TEST_CASE("trajectories") {
    SUBCASE("zero duration records only the initial state") {
        const auto rec = run_trajectory(chain(8), config(0.0), neel_state(8), 0);
        REQUIRE(rec.size() == 1);
        CHECK(rec[0].t == 0.0);
        CHECK(rec[0].f_r == doctest::Approx(1.0));
        CHECK(rec[0].S_half == 0.0);
    }
    SUBCASE("unmonitored return probability follows the exact propagator") {
        ModelSpec s = chain(8);
        s.gamma = 0.0;
        EngineConfig c = config(4.0);
        c.record_every = 10;
        const auto rec = run_trajectory(s, c, neel_state(8), 0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(build_hamiltonian(s));
        const auto U0 = neel_state(8).orbitals();
        for (const auto& r : rec) {
            const Eigen::VectorXcd ph = (cd(0.0, -r.t) * es.eigenvalues().cast<cd>()).array().exp();
            const Eigen::MatrixXcd Ut = es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint() * U0;
            CHECK(r.f_r == doctest::Approx(std::norm((U0.adjoint() * Ut).determinant())).epsilon(1e-8));
        }
    }
    SUBCASE("shared random stream reproduces the Fock-space trajectory") {
        ModelSpec s = chain(8);
        const auto prop = prepare_propagation(s, 0.05);
        for (std::uint64_t idx : {0u, 1u, 2u}) {
            Trajectory g(prop, neel_state(8), 99, idx);
            fock::Trajectory f(s, 0.05, fock::from_orbitals(neel_state(8).orbitals()), 99, idx);
            for (int k = 0; k < 60; ++k) {
                g.step();
                f.step();
            }
            CHECK(g.jump_count() > 0);
            CHECK(std::norm(fock::from_orbitals(g.state().orbitals()).dot(f.state())) >= 1.0 - 1e-6);
        }
    }
    SUBCASE("determinism, monotone records, orthonormality and probability bounds") {
        ModelSpec s = chain(12);
        s.bc = Boundary::periodic;
        EngineConfig c = config(6.0);
        c.record_every = 3;
        const auto a = run_trajectory(s, c, neel_state(12), 4);
        const auto b = run_trajectory(s, c, neel_state(12), 4);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].S_half == b[i].S_half);
            CHECK(a[i].velocity == b[i].velocity);
            CHECK(a[i].density == b[i].density);
            if (i > 0) {
                CHECK(a[i].t > a[i - 1].t);
                CHECK(a[i].jump_count >= a[i - 1].jump_count);
            }
        }

        const auto prop = prepare_propagation(s, 0.05);
        Trajectory traj(prop, neel_state(12), 1, 0);
        for (int k = 0; k < 200; ++k) {
            for (double p : jump_probabilities(traj.state(), prop.matrices.channels, s.gamma, 0.05)) {
                CHECK(p >= 0.0);
                CHECK(p <= s.gamma * 0.05 + 1e-15);
            }
            traj.step();
            CHECK(traj.state().orthonormality_error() < 1e-10);
        }
    }
    SUBCASE("configuration checks") {
        EngineConfig c = config(1.0, 2.0);
        CHECK_THROWS_WITH_AS(validate(c, chain(8)), doctest::Contains("dt"), std::invalid_argument);
        c = config(-1.0);
        CHECK_THROWS_WITH_AS(validate(c, chain(8)), doctest::Contains("t_max"), std::invalid_argument);
        c = config(1.0);
        c.mi_block = 5;
        CHECK_THROWS_WITH_AS(validate(c, chain(8)), doctest::Contains("mi_block"), std::invalid_argument);
        CHECK(resolved_record_every(config(10.0)) == 2);
        CHECK(parse_initial("random_fock") == InitialKind::random_fock);
        CHECK_THROWS_AS(parse_initial("plane_wave"), std::invalid_argument);
    }
}

TEST_CASE("step errors carry trajectory and time") {
    const StepError e("boom", 7, 1.25);
    CHECK(e.trajectory() == 7);
    CHECK(e.time() == 1.25);
    CHECK(std::string(e.what()).find("trajectory 7") != std::string::npos);
}

TEST_CASE("ensembles") {
    ModelSpec s = chain(10);
    EngineConfig c = config(3.0);
    c.observables.correlation = true;
    c.observables.momentum = true;
    c.observables.mutual_information = true;

    SUBCASE("a single trajectory has zero standard error") {
        const auto e = run_ensemble(s, c, InitialKind::neel, 1);
        const auto rec = run_trajectory(s, c, neel_state(10), 0);
        CHECK(e.at("S_half").se.isZero(0.0));
        REQUIRE(e.times.size() == rec.size());
        for (std::size_t i = 0; i < rec.size(); ++i) {
            CHECK(e.at("S_half").mean(static_cast<Eigen::Index>(i), 0) == rec[i].S_half);
            CHECK(e.at("density").mean(static_cast<Eigen::Index>(i), 3) == rec[i].density[3]);
        }
    }
    SUBCASE("bit-identical for any worker count") {
        const auto ref = run_ensemble(s, c, InitialKind::random_fock, 24, 1);
        for (int w : {4, 16}) {
            const auto e = run_ensemble(s, c, InitialKind::random_fock, 24, w);
            REQUIRE(e.observables.size() == ref.observables.size());
            for (std::size_t k = 0; k < ref.observables.size(); ++k) {
                CHECK(e.observables[k].first == ref.observables[k].first);
                CHECK((e.observables[k].second.mean.array() == ref.observables[k].second.mean.array()).all());
                CHECK((e.observables[k].second.se.array() == ref.observables[k].second.se.array()).all());
            }
        }
    }
    SUBCASE("observable order and bounds") {
        const auto e = run_ensemble(s, c, InitialKind::neel, 6, 2);
        std::vector<std::string> names;
        for (const auto& [name, stat] : e.observables) names.push_back(name);
        CHECK(names == std::vector<std::string>{"S_half", "f_skin", "f_r", "velocity", "I_AB", "jumps", "density",
                                                "correlation", "momentum"});
        CHECK(e.at("f_skin").mean.minCoeff() >= 0.0);
        CHECK(e.at("f_skin").mean.maxCoeff() <= 1.0 + 1e-10);
        CHECK(e.at("S_half").se.minCoeff() >= 0.0);
        CHECK(e.find("nonexistent") == nullptr);
        CHECK_THROWS_AS(e.at("nonexistent"), std::out_of_range);
    }
    SUBCASE("uniform disorder is drawn per trajectory") {
        ModelSpec u = s;
        u.disorder = Disorder::uniform;
        u.W = 2.0;
        const auto e = run_ensemble(u, c, InitialKind::neel, 2);
        EngineConfig one = c;
        const auto r0 = run_trajectory(for_trajectory(u, 0), one, neel_state(10), 0);
        const auto r1 = run_trajectory(for_trajectory(u, 1), one, neel_state(10), 1);
        const auto last = static_cast<Eigen::Index>(r0.size() - 1);
        CHECK(e.at("S_half").mean(last, 0) == doctest::Approx(0.5 * (r0.back().S_half + r1.back().S_half)).epsilon(1e-14));
    }
    SUBCASE("trajectory failures are aggregated") {
        ModelSpec odd = chain(9);
        try {
            run_ensemble(odd, c, InitialKind::neel, 3, 2);
            FAIL("expected EnsembleError");
        } catch (const EnsembleError& err) {
            CHECK(err.failures().size() == 3);
            CHECK(err.failures()[1].trajectory == 1);
        }
        CHECK_THROWS_AS(run_ensemble(s, c, InitialKind::neel, 0), std::invalid_argument);
    }
}

TEST_CASE("no feedback leaves the late-time density mirror symmetric") {
    ModelSpec s = chain(12);
    s.theta = 0.0;
    EngineConfig c = config(30.0);
    c.record_every = 600;
    const auto e = run_ensemble(s, c, InitialKind::neel, 300, 4);
    const auto& n = e.at("density");
    const Eigen::Index last = n.mean.rows() - 1;
    for (int l = 0; l < 6; ++l) {
        const double diff = n.mean(last, l) - n.mean(last, 11 - l);
        const double se = std::hypot(n.se(last, l), n.se(last, 11 - l));
        CHECK(std::abs(diff) <= 3.0 * se + 1e-12);
    }
}
