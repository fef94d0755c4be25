// state.hpp: Slater-determinant states and correlation-matrix observables

#pragma once

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "skinsim/rng.hpp"

namespace skinsim {

// Pure Gaussian state of N fermions on L sites,
//   |psi> = prod_n ( sum_i U_in c_i^dagger ) |0>,
// with orthonormal columns U^dagger U = 1.
class SlaterState {
public:
    SlaterState() = default;

    // Checks N <= L and orthonormality to 1e-10.
    explicit SlaterState(Eigen::MatrixXcd orbitals);

    // Adopts `orbitals` without checks; for callers that just orthonormalized.
    static SlaterState adopt(Eigen::MatrixXcd orbitals) noexcept;

    int sites() const noexcept { return static_cast<int>(U_.rows()); }
    int particles() const noexcept { return static_cast<int>(U_.cols()); }
    const Eigen::MatrixXcd& orbitals() const noexcept { return U_; }

    // max |U^dagger U - 1|
    double orthonormality_error() const;

private:
    Eigen::MatrixXcd U_;
};

SlaterState fock_state(int L, std::span<const int> occupied);
SlaterState neel_state(int L);
// Leftmost N sites filled.
SlaterState skin_state(int L, int N);
// N lowest eigenvectors of the Hermitian matrix h, in solver order.
SlaterState ground_state(const Eigen::MatrixXcd& h, int N);
SlaterState random_fock_state(int L, int N, RandomStream& rng);

// C_ij = <c_i^dagger c_j> = sum_n conj(U_in) U_jn
Eigen::MatrixXcd correlation_matrix(const SlaterState& state);

// Natural-log entanglement entropy of `sites`; eigenvalues of C_A are
// clipped to [0, 1] first.
double entanglement_entropy(const Eigen::MatrixXcd& C, std::span<const int> sites);
double entanglement_entropy(const SlaterState& state, std::span<const int> sites);
double half_chain_entropy(const Eigen::MatrixXcd& C);

// I_AB = S_A + S_B - S_{A u B}; A and B must be disjoint.
double mutual_information(const Eigen::MatrixXcd& C, std::span<const int> A, std::span<const int> B);
double mutual_information(const SlaterState& state, std::span<const int> A, std::span<const int> B);

Eigen::VectorXd density(const SlaterState& state);

// Momenta k = 2 pi m / L for m = -floor(L/2) .. L - 1 - floor(L/2).
Eigen::VectorXd momentum_grid(int L);
// n_k with c_k = L^{-1/2} sum_l e^{-i k l} c_l, l = 1..L.
Eigen::VectorXd momentum_density(const SlaterState& state);

// |C_ij|^2 = <n_i><n_j> - <n_i n_j> for i != j.
double density_correlation(const Eigen::MatrixXcd& C, int i, int j);
double density_correlation(const SlaterState& state, int i, int j);

// <a|b> = det(U_a^dagger U_b).
std::complex<double> overlap(const SlaterState& a, const SlaterState& b);
// |<a|b>|^2, accumulated in log-magnitude so large N underflows cleanly to 0.
double overlap_probability(const SlaterState& a, const SlaterState& b);

double f_skin(const SlaterState& state);
double f_r(const SlaterState& state, const SlaterState& initial);

// -nu ln nu - (1 - nu) ln(1 - nu) with nu clipped to [0, 1].
double binary_entropy(double nu) noexcept;

} // namespace skinsim
