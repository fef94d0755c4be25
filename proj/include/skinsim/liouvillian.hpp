// liouvillian.hpp: Exact master-equation treatment in one particle-number sector
//
// The generator is
//   L(rho) = -i H_eff rho + i rho H_eff^dagger + gamma sum_m L_m rho L_m^dagger
// acting on D x D density matrices, D = C(L, N). Fock states are ordered by
// ascending occupation bitmask (bit i = site i).

#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "skinsim/model.hpp"
#include "skinsim/state.hpp"

namespace skinsim {

struct FockBasis {
    int L = 0;
    int N = 0;
    std::vector<std::uint32_t> states;
    std::vector<int> index; // bitmask -> position, -1 outside the sector

    int dimension() const noexcept { return static_cast<int>(states.size()); }
};

FockBasis make_fock_basis(int L, int N);

// sum_ij k_ij c_i^dagger c_j restricted to the sector, with Jordan-Wigner signs.
Eigen::MatrixXcd sector_operator(const FockBasis& basis, const Eigen::MatrixXcd& kernel);

// Many-body amplitudes of a Slater state in the sector basis.
Eigen::VectorXcd sector_amplitudes(const FockBasis& basis, const SlaterState& state);

class SectorTooLarge : public std::length_error {
public:
    using std::length_error::length_error;
};

struct LiouvillianSector {
    ModelSpec spec;
    FockBasis basis;
    Eigen::MatrixXcd h_eff;            // many-body, D x D
    std::vector<Eigen::MatrixXcd> jumps; // exp(i theta n_next) d^dagger d per channel

    int dimension() const noexcept { return basis.dimension(); }
};

// Rejects sectors with D above max_dimension with a size report.
LiouvillianSector build_sector(const ModelSpec& spec, int N, int max_dimension = 100);

// L(rho) in operator form.
Eigen::MatrixXcd apply_generator(const LiouvillianSector& sector, const Eigen::MatrixXcd& rho);

// Dense D^2 x D^2 superoperator on column-major vec(rho).
Eigen::MatrixXcd superoperator_matrix(const LiouvillianSector& sector);

// Real D^2 x D^2 generator in the Hermitian basis {E_aa; E_ab + E_ba, i(E_ab - E_ba) for a < b}.
Eigen::MatrixXd hermitian_generator(const LiouvillianSector& sector);
Eigen::VectorXd to_hermitian_coordinates(const Eigen::MatrixXcd& rho);
Eigen::MatrixXcd from_hermitian_coordinates(std::span<const double> x, int D);

// Right eigensystem of the real generator. Columns of `vectors` follow the
// LAPACK layout: a complex pair (j, j+1) stores Re v in column j and Im v in
// column j+1 for the eigenvalue with positive imaginary part.
struct Eigensystem {
    Eigen::VectorXcd values;
    Eigen::MatrixXd vectors;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;
    double rcond = 0.0; // reciprocal 1-norm condition number of `vectors`
};

Eigensystem eigensystem(const LiouvillianSector& sector);
Eigen::VectorXcd spectrum(const LiouvillianSector& sector);

struct SteadyState {
    Eigen::MatrixXcd rho;
    std::complex<double> eigenvalue;
    int near_zero = 0;   // eigenvalues with |lambda| < 1e-8
    bool degenerate = false;
    double min_eigenvalue = 0.0;
};

SteadyState steady_state(const LiouvillianSector& sector, const Eigensystem& eig);
SteadyState steady_state(const LiouvillianSector& sector);

struct DensityEvolution {
    std::vector<double> times;
    std::vector<Eigen::MatrixXcd> rho;
    bool used_fallback = false; // RK4 stepping replaced the eigen-expansion
};

// rho(t) at each requested time (non-negative, any order). Uses the
// eigen-expansion unless its basis is ill-conditioned (rcond < rcond_floor),
// then integrates with classical RK4 at step max_step.
DensityEvolution evolve_density(const LiouvillianSector& sector, const Eigensystem& eig, const Eigen::MatrixXcd& rho0,
                                std::span<const double> times, double rcond_floor = 1e-12, double max_step = 0.01);
DensityEvolution evolve_density_rk4(const LiouvillianSector& sector, const Eigen::MatrixXcd& rho0,
                                    std::span<const double> times, double max_step = 0.01);

Eigen::MatrixXcd pure_density(const Eigen::VectorXcd& amplitudes);

Eigen::VectorXd site_densities(const FockBasis& basis, const Eigen::MatrixXcd& rho);
// <n_i n_j>
Eigen::MatrixXd density_products(const FockBasis& basis, const Eigen::MatrixXcd& rho);

// Writes "re,im" rows sorted by descending real part.
void write_spectrum_csv(std::ostream& out, const Eigen::VectorXcd& values);

} // namespace skinsim
