// state.cpp: Slater-state constructors and observables

#include "skinsim/state.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace skinsim {

namespace {

using cd = std::complex<double>;

void check_sites(std::span<const int> sites, int L, const char* what) {
    std::vector<char> seen(static_cast<std::size_t>(L), 0);
    for (int s : sites) {
        if (s < 0 || s >= L)
            throw std::out_of_range(std::string(what) + ": site " + std::to_string(s) + " outside chain");
        if (seen[static_cast<std::size_t>(s)]++)
            throw std::invalid_argument(std::string(what) + ": repeated site " + std::to_string(s));
    }
}

struct LogDet {
    double log_abs = 0.0;
    cd phase = 1.0;
};

// log |det| and phase of a square matrix via LU with partial pivoting.
LogDet log_determinant(const Eigen::MatrixXcd& m) {
    LogDet out;
    if (m.rows() == 0) return out;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(m);
    const auto& f = lu.matrixLU();
    out.phase = lu.permutationP().determinant();
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
        const double a = std::abs(f(i, i));
        if (a == 0.0) {
            out.log_abs = -std::numeric_limits<double>::infinity();
            out.phase = 0.0;
            return out;
        }
        out.log_abs += std::log(a);
        out.phase *= f(i, i) / a;
    }
    return out;
}

} // namespace

SlaterState::SlaterState(Eigen::MatrixXcd orbitals) : U_(std::move(orbitals)) {
    if (U_.cols() > U_.rows()) throw std::invalid_argument("SlaterState: more particles than sites");
    if (orthonormality_error() > 1e-10) throw std::invalid_argument("SlaterState: orbitals are not orthonormal");
}

SlaterState SlaterState::adopt(Eigen::MatrixXcd orbitals) noexcept {
    SlaterState s;
    s.U_ = std::move(orbitals);
    return s;
}

double SlaterState::orthonormality_error() const {
    if (U_.cols() == 0) return 0.0;
    const Eigen::MatrixXcd g = U_.adjoint() * U_;
    return (g - Eigen::MatrixXcd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

SlaterState fock_state(int L, std::span<const int> occupied) {
    if (L < 1) throw std::invalid_argument("fock_state: L must be positive");
    check_sites(occupied, L, "fock_state");
    if (static_cast<int>(occupied.size()) > L) throw std::invalid_argument("fock_state: N > L");
    Eigen::MatrixXcd U = Eigen::MatrixXcd::Zero(L, static_cast<Eigen::Index>(occupied.size()));
    for (std::size_t n = 0; n < occupied.size(); ++n) U(occupied[n], static_cast<Eigen::Index>(n)) = 1.0;
    return SlaterState::adopt(std::move(U));
}

SlaterState neel_state(int L) {
    if (L < 2 || L % 2 != 0) throw std::invalid_argument("neel_state: L must be even");
    std::vector<int> occ;
    for (int i = 1; i < L; i += 2) occ.push_back(i);
    return fock_state(L, occ);
}

SlaterState skin_state(int L, int N) {
    if (N < 0 || N > L) throw std::invalid_argument("skin_state: N must be in [0, L]");
    std::vector<int> occ(static_cast<std::size_t>(N));
    std::iota(occ.begin(), occ.end(), 0);
    return fock_state(L, occ);
}

SlaterState ground_state(const Eigen::MatrixXcd& h, int N) {
    if (h.rows() != h.cols()) throw std::invalid_argument("ground_state: h must be square");
    if (N < 0 || N > h.rows()) throw std::invalid_argument("ground_state: N must be in [0, L]");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    if (es.info() != Eigen::Success) throw std::runtime_error("ground_state: diagonalization failed");
    return SlaterState::adopt(es.eigenvectors().leftCols(N));
}

SlaterState random_fock_state(int L, int N, RandomStream& rng) {
    if (N < 0 || N > L) throw std::invalid_argument("random_fock_state: N must be in [0, L]");
    std::vector<int> sites(static_cast<std::size_t>(L));
    std::iota(sites.begin(), sites.end(), 0);
    for (int i = 0; i < N; ++i) {
        const auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(L - i)));
        std::swap(sites[static_cast<std::size_t>(i)], sites[static_cast<std::size_t>(j)]);
    }
    sites.resize(static_cast<std::size_t>(N));
    std::sort(sites.begin(), sites.end());
    return fock_state(L, sites);
}

Eigen::MatrixXcd correlation_matrix(const SlaterState& state) {
    const auto& U = state.orbitals();
    return U.conjugate() * U.transpose();
}

double binary_entropy(double nu) noexcept {
    nu = std::clamp(nu, 0.0, 1.0);
    double s = 0.0;
    if (nu > 0.0) s -= nu * std::log(nu);
    if (nu < 1.0) s -= (1.0 - nu) * std::log1p(-nu);
    return s;
}

double entanglement_entropy(const Eigen::MatrixXcd& C, std::span<const int> sites) {
    check_sites(sites, static_cast<int>(C.rows()), "entanglement_entropy");
    const auto n = static_cast<Eigen::Index>(sites.size());
    if (n == 0) return 0.0;
    Eigen::MatrixXcd CA(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b) CA(a, b) = C(sites[a], sites[b]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(CA, Eigen::EigenvaluesOnly);
    double s = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) s += binary_entropy(es.eigenvalues()(k));
    return s;
}

double entanglement_entropy(const SlaterState& state, std::span<const int> sites) {
    return entanglement_entropy(correlation_matrix(state), sites);
}

double half_chain_entropy(const Eigen::MatrixXcd& C) {
    std::vector<int> left(static_cast<std::size_t>(C.rows() / 2));
    std::iota(left.begin(), left.end(), 0);
    return entanglement_entropy(C, left);
}

double mutual_information(const Eigen::MatrixXcd& C, std::span<const int> A, std::span<const int> B) {
    std::vector<int> joint(A.begin(), A.end());
    joint.insert(joint.end(), B.begin(), B.end());
    std::vector<int> sorted = joint;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw std::invalid_argument("mutual_information: subsystems overlap");
    return entanglement_entropy(C, A) + entanglement_entropy(C, B) - entanglement_entropy(C, joint);
}

double mutual_information(const SlaterState& state, std::span<const int> A, std::span<const int> B) {
    return mutual_information(correlation_matrix(state), A, B);
}

Eigen::VectorXd density(const SlaterState& state) {
    return state.orbitals().rowwise().squaredNorm();
}

Eigen::VectorXd momentum_grid(int L) {
    Eigen::VectorXd k(L);
    const int m0 = L / 2;
    for (int m = 0; m < L; ++m) k(m) = 2.0 * std::numbers::pi * (m - m0) / L;
    return k;
}

Eigen::VectorXd momentum_density(const SlaterState& state) {
    const int L = state.sites();
    const Eigen::VectorXd k = momentum_grid(L);
    Eigen::MatrixXcd F(L, L);
    const double norm = 1.0 / std::sqrt(static_cast<double>(L));
    for (int a = 0; a < L; ++a)
        for (int l = 0; l < L; ++l) F(a, l) = std::polar(norm, -k(a) * (l + 1));
    return (F * state.orbitals()).rowwise().squaredNorm();
}

double density_correlation(const Eigen::MatrixXcd& C, int i, int j) {
    if (i == j) throw std::invalid_argument("density_correlation: sites must differ");
    if (i < 0 || j < 0 || i >= C.rows() || j >= C.rows())
        throw std::out_of_range("density_correlation: site outside chain");
    return std::norm(C(i, j));
}

double density_correlation(const SlaterState& state, int i, int j) {
    if (i == j) throw std::invalid_argument("density_correlation: sites must differ");
    const auto& U = state.orbitals();
    if (i < 0 || j < 0 || i >= U.rows() || j >= U.rows())
        throw std::out_of_range("density_correlation: site outside chain");
    return std::norm(U.row(i).dot(U.row(j)));
}

std::complex<double> overlap(const SlaterState& a, const SlaterState& b) {
    if (a.sites() != b.sites() || a.particles() != b.particles())
        throw std::invalid_argument("overlap: states differ in L or N");
    const LogDet d = log_determinant(a.orbitals().adjoint() * b.orbitals());
    return d.phase * std::exp(d.log_abs);
}

double overlap_probability(const SlaterState& a, const SlaterState& b) {
    if (a.sites() != b.sites() || a.particles() != b.particles())
        throw std::invalid_argument("overlap: states differ in L or N");
    return std::exp(2.0 * log_determinant(a.orbitals().adjoint() * b.orbitals()).log_abs);
}

double f_skin(const SlaterState& state) {
    const int N = state.particles();
    return std::exp(2.0 * log_determinant(state.orbitals().topRows(N)).log_abs);
}

double f_r(const SlaterState& state, const SlaterState& initial) {
    return overlap_probability(initial, state);
}

} // namespace skinsim
