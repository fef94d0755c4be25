// liouvillian.cpp: Sector Lindbladian assembly, eigensystem and evolution

#include "skinsim/liouvillian.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

#include <lapacke.h>

#include "skinsim/io.hpp"

namespace skinsim {

namespace {

using cd = std::complex<double>;

constexpr double kZeroEigenvalue = 1e-8;

int parity_below(std::uint32_t s, int i) {
    return std::popcount(s & ((1u << i) - 1u)) & 1;
}

std::uint64_t binomial(int n, int k) {
    std::uint64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
    return r;
}

// Position of the (a, b) pair, a < b, among the off-diagonal coordinates.
Eigen::Index pair_offset(int a, int b, int D) {
    return static_cast<Eigen::Index>(D) + 2 * (static_cast<Eigen::Index>(a) * (2 * D - a - 1) / 2 + (b - a - 1));
}

} // namespace

FockBasis make_fock_basis(int L, int N) {
    if (L < 1 || L > 24) throw std::invalid_argument("L: Fock basis supports 1 <= L <= 24");
    if (N < 0 || N > L) throw std::invalid_argument("N: particle number must be in [0, L]");
    FockBasis b;
    b.L = L;
    b.N = N;
    b.index.assign(std::size_t{1} << L, -1);
    for (std::uint32_t s = 0; s < (1u << L); ++s) {
        if (std::popcount(s) != N) continue;
        b.index[s] = static_cast<int>(b.states.size());
        b.states.push_back(s);
    }
    return b;
}

Eigen::MatrixXcd sector_operator(const FockBasis& basis, const Eigen::MatrixXcd& kernel) {
    if (kernel.rows() != basis.L || kernel.cols() != basis.L)
        throw std::invalid_argument("sector_operator: kernel must be L x L");
    const int D = basis.dimension();
    Eigen::MatrixXcd op = Eigen::MatrixXcd::Zero(D, D);
    for (int col = 0; col < D; ++col) {
        const std::uint32_t s = basis.states[static_cast<std::size_t>(col)];
        for (int j = 0; j < basis.L; ++j) {
            if (!(s >> j & 1u)) continue;
            const std::uint32_t t = s & ~(1u << j);
            for (int i = 0; i < basis.L; ++i) {
                const cd k = kernel(i, j);
                if (k == 0.0 || (t >> i & 1u)) continue;
                const int sign = parity_below(s, j) ^ parity_below(t, i);
                const int row = basis.index[t | (1u << i)];
                op(row, col) += sign ? -k : k;
            }
        }
    }
    return op;
}

Eigen::VectorXcd sector_amplitudes(const FockBasis& basis, const SlaterState& state) {
    if (state.sites() != basis.L || state.particles() != basis.N)
        throw std::invalid_argument("sector_amplitudes: state does not belong to the sector");
    const auto& U = state.orbitals();
    Eigen::VectorXcd psi(basis.dimension());
    Eigen::MatrixXcd sub(basis.N, basis.N);
    for (int k = 0; k < basis.dimension(); ++k) {
        const std::uint32_t s = basis.states[static_cast<std::size_t>(k)];
        int r = 0;
        for (int i = 0; i < basis.L; ++i)
            if (s >> i & 1u) sub.row(r++) = U.row(i);
        psi(k) = basis.N == 0 ? cd(1.0) : sub.partialPivLu().determinant();
    }
    return psi;
}

LiouvillianSector build_sector(const ModelSpec& spec, int N, int max_dimension) {
    validate(spec);
    if (N < 0 || N > spec.L) throw std::invalid_argument("N: particle number must be in [0, L]");
    const std::uint64_t D = binomial(spec.L, N);
    if (D > static_cast<std::uint64_t>(max_dimension)) {
        const double entries = static_cast<double>(D) * static_cast<double>(D);
        const double gib = entries * entries * 8.0 / static_cast<double>(1u << 30);
        throw SectorTooLarge("liouvillian: sector L=" + std::to_string(spec.L) + " N=" + std::to_string(N) +
                             " has D=" + std::to_string(D) + " (superoperator " + std::to_string(D * D) + " x " +
                             std::to_string(D * D) + ", about " + format_number(std::round(gib * 10) / 10) +
                             " GiB as a dense real matrix); limit is D <= " + std::to_string(max_dimension));
    }
    LiouvillianSector sec;
    sec.spec = spec;
    sec.basis = make_fock_basis(spec.L, N);
    const auto sp = build_single_particle(spec);
    sec.h_eff = sector_operator(sec.basis, sp.h_eff);
    const int dim = sec.basis.dimension();
    for (const auto& ch : sp.channels) {
        Eigen::MatrixXcd proj = sector_operator(sec.basis, ch.mode * ch.mode.adjoint());
        for (int r = 0; r < dim; ++r)
            if (sec.basis.states[static_cast<std::size_t>(r)] >> ch.next & 1u) proj.row(r) *= std::polar(1.0, spec.theta);
        sec.jumps.push_back(std::move(proj));
    }
    return sec;
}

Eigen::MatrixXcd apply_generator(const LiouvillianSector& sector, const Eigen::MatrixXcd& rho) {
    const cd i(0.0, 1.0);
    Eigen::MatrixXcd out = -i * (sector.h_eff * rho) + i * (rho * sector.h_eff.adjoint());
    for (const auto& Lm : sector.jumps) out.noalias() += sector.spec.gamma * (Lm * rho * Lm.adjoint());
    return out;
}

Eigen::MatrixXcd superoperator_matrix(const LiouvillianSector& sector) {
    const int D = sector.dimension();
    const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(D, D);
    auto kron = [](const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& B) {
        Eigen::MatrixXcd K(A.rows() * B.rows(), A.cols() * B.cols());
        for (Eigen::Index r = 0; r < A.rows(); ++r)
            for (Eigen::Index c = 0; c < A.cols(); ++c) K.block(r * B.rows(), c * B.cols(), B.rows(), B.cols()) = A(r, c) * B;
        return K;
    };
    const cd i(0.0, 1.0);
    Eigen::MatrixXcd M = -i * kron(I, sector.h_eff) + i * kron(sector.h_eff.conjugate(), I);
    for (const auto& Lm : sector.jumps) M += sector.spec.gamma * kron(Lm.conjugate(), Lm);
    return M;
}

Eigen::VectorXd to_hermitian_coordinates(const Eigen::MatrixXcd& rho) {
    const int D = static_cast<int>(rho.rows());
    Eigen::VectorXd x(static_cast<Eigen::Index>(D) * D);
    for (int a = 0; a < D; ++a) x(a) = rho(a, a).real();
    for (int a = 0; a < D; ++a) {
        for (int b = a + 1; b < D; ++b) {
            const Eigen::Index k = pair_offset(a, b, D);
            x(k) = rho(a, b).real();
            x(k + 1) = rho(a, b).imag();
        }
    }
    return x;
}

Eigen::MatrixXcd from_hermitian_coordinates(std::span<const double> x, int D) {
    if (x.size() != static_cast<std::size_t>(D) * static_cast<std::size_t>(D))
        throw std::invalid_argument("from_hermitian_coordinates: expected D^2 coordinates");
    Eigen::MatrixXcd rho(D, D);
    for (int a = 0; a < D; ++a) rho(a, a) = x[static_cast<std::size_t>(a)];
    for (int a = 0; a < D; ++a) {
        for (int b = a + 1; b < D; ++b) {
            const auto k = static_cast<std::size_t>(pair_offset(a, b, D));
            rho(a, b) = cd(x[k], x[k + 1]);
            rho(b, a) = cd(x[k], -x[k + 1]);
        }
    }
    return rho;
}

Eigen::MatrixXd hermitian_generator(const LiouvillianSector& sector) {
    const int D = sector.dimension();
    const Eigen::Index n = static_cast<Eigen::Index>(D) * D;
    Eigen::MatrixXd R(n, n);
    Eigen::MatrixXcd B = Eigen::MatrixXcd::Zero(D, D);
    for (int a = 0; a < D; ++a) {
        B(a, a) = 1.0;
        R.col(a) = to_hermitian_coordinates(apply_generator(sector, B));
        B(a, a) = 0.0;
    }
    for (int a = 0; a < D; ++a) {
        for (int b = a + 1; b < D; ++b) {
            const Eigen::Index k = pair_offset(a, b, D);
            B(a, b) = 1.0;
            B(b, a) = 1.0;
            R.col(k) = to_hermitian_coordinates(apply_generator(sector, B));
            B(a, b) = cd(0.0, 1.0);
            B(b, a) = cd(0.0, -1.0);
            R.col(k + 1) = to_hermitian_coordinates(apply_generator(sector, B));
            B(a, b) = 0.0;
            B(b, a) = 0.0;
        }
    }
    return R;
}

Eigensystem eigensystem(const LiouvillianSector& sector) {
    Eigen::MatrixXd A = hermitian_generator(sector);
    const auto n = static_cast<lapack_int>(A.rows());
    Eigen::VectorXd wr(n), wi(n);
    Eigensystem out;
    out.vectors.resize(n, n);
    double vl_dummy = 0.0;
    const lapack_int info = LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'V', n, A.data(), n, wr.data(), wi.data(), &vl_dummy,
                                          1, out.vectors.data(), n);
    if (info != 0) throw std::runtime_error("liouvillian: dgeev failed with info " + std::to_string(info));
    out.values.resize(n);
    for (lapack_int k = 0; k < n; ++k) out.values(k) = cd(wr(k), wi(k));
    out.lu.compute(out.vectors);
    out.rcond = out.lu.rcond();
    return out;
}

Eigen::VectorXcd spectrum(const LiouvillianSector& sector) {
    Eigen::MatrixXd A = hermitian_generator(sector);
    const auto n = static_cast<lapack_int>(A.rows());
    Eigen::VectorXd wr(n), wi(n);
    double dummy = 0.0;
    const lapack_int info =
        LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'N', n, A.data(), n, wr.data(), wi.data(), &dummy, 1, &dummy, 1);
    if (info != 0) throw std::runtime_error("liouvillian: dgeev failed with info " + std::to_string(info));
    Eigen::VectorXcd values(n);
    for (lapack_int k = 0; k < n; ++k) values(k) = cd(wr(k), wi(k));
    return values;
}

SteadyState steady_state(const LiouvillianSector& sector, const Eigensystem& eig) {
    const int D = sector.dimension();
    Eigen::Index best = 0;
    eig.values.cwiseAbs().minCoeff(&best);
    SteadyState ss;
    ss.eigenvalue = eig.values(best);
    ss.near_zero = static_cast<int>((eig.values.array().abs() < kZeroEigenvalue).count());
    ss.degenerate = ss.near_zero > 1;
    // A complex pair cannot be the zero mode; its real part column is used if it ever is.
    Eigen::Index col = best;
    if (eig.values(best).imag() < 0.0) col = best - 1;
    const Eigen::VectorXd x = eig.vectors.col(col);
    Eigen::MatrixXcd rho = from_hermitian_coordinates(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), D);
    rho = 0.5 * (rho + rho.adjoint()).eval();
    const cd tr = rho.trace();
    if (std::abs(tr) == 0.0) throw std::runtime_error("liouvillian: steady-state eigenvector has zero trace");
    rho /= tr;
    rho = 0.5 * (rho + rho.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho, Eigen::EigenvaluesOnly);
    ss.min_eigenvalue = es.eigenvalues().minCoeff();
    ss.rho = std::move(rho);
    return ss;
}

SteadyState steady_state(const LiouvillianSector& sector) {
    return steady_state(sector, eigensystem(sector));
}

Eigen::MatrixXcd pure_density(const Eigen::VectorXcd& amplitudes) {
    const Eigen::VectorXcd v = amplitudes.normalized();
    return v * v.adjoint();
}

DensityEvolution evolve_density_rk4(const LiouvillianSector& sector, const Eigen::MatrixXcd& rho0,
                                    std::span<const double> times, double max_step) {
    if (!(max_step > 0.0)) throw std::invalid_argument("max_step: must be positive");
    std::vector<std::size_t> order(times.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });

    DensityEvolution out;
    out.times.assign(times.begin(), times.end());
    out.rho.resize(times.size());
    out.used_fallback = true;
    Eigen::MatrixXcd rho = rho0;
    double t = 0.0;
    for (std::size_t idx : order) {
        const double target = times[idx];
        if (target < 0.0) throw std::invalid_argument("evolve_density: times must be >= 0");
        const auto steps = static_cast<long long>(std::ceil((target - t) / max_step - 1e-12));
        const double h = steps > 0 ? (target - t) / static_cast<double>(steps) : 0.0;
        for (long long k = 0; k < steps; ++k) {
            const Eigen::MatrixXcd k1 = apply_generator(sector, rho);
            const Eigen::MatrixXcd k2 = apply_generator(sector, rho + 0.5 * h * k1);
            const Eigen::MatrixXcd k3 = apply_generator(sector, rho + 0.5 * h * k2);
            const Eigen::MatrixXcd k4 = apply_generator(sector, rho + h * k3);
            rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        t = target;
        out.rho[idx] = rho;
    }
    return out;
}

DensityEvolution evolve_density(const LiouvillianSector& sector, const Eigensystem& eig, const Eigen::MatrixXcd& rho0,
                                std::span<const double> times, double rcond_floor, double max_step) {
    const int D = sector.dimension();
    if (rho0.rows() != D || rho0.cols() != D) throw std::invalid_argument("evolve_density: rho0 has wrong dimension");
    for (double t : times)
        if (!(t >= 0.0)) throw std::invalid_argument("evolve_density: times must be >= 0");
    if (!(eig.rcond >= rcond_floor)) return evolve_density_rk4(sector, rho0, times, max_step);

    const Eigen::VectorXd x0 = to_hermitian_coordinates(0.5 * (rho0 + rho0.adjoint()));
    const Eigen::VectorXd c0 = eig.lu.solve(x0);
    const Eigen::Index n = c0.size();

    DensityEvolution out;
    out.times.assign(times.begin(), times.end());
    Eigen::VectorXd c(n);
    for (double t : times) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const cd lambda = eig.values(j);
            const double decay = std::exp(lambda.real() * t);
            if (lambda.imag() == 0.0) {
                c(j) = decay * c0(j);
                continue;
            }
            const double cs = std::cos(lambda.imag() * t), sn = std::sin(lambda.imag() * t);
            c(j) = decay * (cs * c0(j) + sn * c0(j + 1));
            c(j + 1) = decay * (-sn * c0(j) + cs * c0(j + 1));
            ++j;
        }
        const Eigen::VectorXd x = eig.vectors * c;
        out.rho.push_back(from_hermitian_coordinates(std::span<const double>(x.data(), static_cast<std::size_t>(n)), D));
    }
    return out;
}

Eigen::VectorXd site_densities(const FockBasis& basis, const Eigen::MatrixXcd& rho) {
    Eigen::VectorXd n = Eigen::VectorXd::Zero(basis.L);
    for (int k = 0; k < basis.dimension(); ++k) {
        const double p = rho(k, k).real();
        const std::uint32_t s = basis.states[static_cast<std::size_t>(k)];
        for (int i = 0; i < basis.L; ++i)
            if (s >> i & 1u) n(i) += p;
    }
    return n;
}

Eigen::MatrixXd density_products(const FockBasis& basis, const Eigen::MatrixXcd& rho) {
    Eigen::MatrixXd nn = Eigen::MatrixXd::Zero(basis.L, basis.L);
    for (int k = 0; k < basis.dimension(); ++k) {
        const double p = rho(k, k).real();
        const std::uint32_t s = basis.states[static_cast<std::size_t>(k)];
        for (int i = 0; i < basis.L; ++i)
            for (int j = 0; j < basis.L; ++j)
                if ((s >> i & 1u) && (s >> j & 1u)) nn(i, j) += p;
    }
    return nn;
}

void write_spectrum_csv(std::ostream& out, const Eigen::VectorXcd& values) {
    std::vector<cd> v(values.data(), values.data() + values.size());
    std::stable_sort(v.begin(), v.end(), [](cd a, cd b) {
        if (a.real() != b.real()) return a.real() > b.real();
        return a.imag() > b.imag();
    });
    out << "re,im\n";
    for (const cd& z : v) out << format_number(z.real()) << ',' << format_number(z.imag()) << '\n';
}

} // namespace skinsim
