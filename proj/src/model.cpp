// model.cpp: Hamiltonian, jump modes and effective Hamiltonian

#include "skinsim/model.hpp"

#include <stdexcept>

#include "skinsim/rng.hpp"

namespace skinsim {

namespace {

using cd = std::complex<double>;

void add_bond(Eigen::MatrixXcd& h, int i, int j, double J) {
    h(i, j) += J;
    h(j, i) += J;
}

} // namespace

std::string_view to_string(Boundary bc) noexcept {
    return bc == Boundary::open ? "obc" : "pbc";
}

std::string_view to_string(Disorder kind) noexcept {
    switch (kind) {
    case Disorder::none: return "none";
    case Disorder::quasiperiodic: return "quasiperiodic";
    case Disorder::uniform: return "uniform";
    }
    return "none";
}

Boundary parse_boundary(std::string_view text) {
    if (text == "obc" || text == "OBC" || text == "open") return Boundary::open;
    if (text == "pbc" || text == "PBC" || text == "periodic") return Boundary::periodic;
    throw std::invalid_argument("bc: unknown boundary condition '" + std::string(text) + "'");
}

Disorder parse_disorder(std::string_view text) {
    if (text == "none") return Disorder::none;
    if (text == "quasiperiodic") return Disorder::quasiperiodic;
    if (text == "uniform") return Disorder::uniform;
    throw std::invalid_argument("disorder: unknown disorder kind '" + std::string(text) + "'");
}

void validate(const ModelSpec& spec) {
    if (spec.L < 2) throw std::invalid_argument("L: site count must be >= 2");
    if (!(spec.gamma >= 0.0)) throw std::invalid_argument("gamma: monitoring rate must be >= 0");
    if (!(spec.W >= 0.0)) throw std::invalid_argument("W: disorder amplitude must be >= 0");
    if (!std::isfinite(spec.J)) throw std::invalid_argument("J: hopping must be finite");
    if (!std::isfinite(spec.alpha)) throw std::invalid_argument("alpha: must be finite");
    if (!std::isfinite(spec.theta)) throw std::invalid_argument("theta: must be finite");
    switch (spec.disorder) {
    case Disorder::none:
    case Disorder::quasiperiodic:
    case Disorder::uniform:
        break;
    default:
        throw std::invalid_argument("disorder: unknown disorder kind");
    }
}

ModelSpec for_trajectory(const ModelSpec& spec, std::uint64_t index) {
    ModelSpec out = spec;
    if (spec.disorder == Disorder::uniform) out.disorder_seed = spec.disorder_seed ^ index;
    return out;
}

Eigen::VectorXd onsite_potential(const ModelSpec& spec) {
    validate(spec);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(spec.L);
    switch (spec.disorder) {
    case Disorder::none:
        break;
    case Disorder::quasiperiodic:
        for (int i = 0; i < spec.L; ++i)
            v(i) = spec.W * std::cos(2.0 * std::numbers::pi * spec.alpha * (i + 1));
        break;
    case Disorder::uniform: {
        RandomStream rng(spec.disorder_seed, 0xd15c0ULL);
        for (int i = 0; i < spec.L; ++i) v(i) = spec.W * (rng.uniform() - 0.5);
        break;
    }
    }
    return v;
}

Eigen::MatrixXcd build_hamiltonian(const ModelSpec& spec) {
    const Eigen::VectorXd v = onsite_potential(spec);
    const int L = spec.L;
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(L, L);
    for (int i = 0; i + 1 < L; ++i) add_bond(h, i, i + 1, spec.J);
    if (spec.bc == Boundary::periodic) add_bond(h, L - 1, 0, spec.J);
    for (int i = 0; i < L; ++i) h(i, i) = v(i);
    return h;
}

std::vector<JumpChannel> build_jump_modes(const ModelSpec& spec) {
    validate(spec);
    const int L = spec.L;
    const int bonds = spec.bc == Boundary::periodic ? L : L - 1;
    const double s = 1.0 / std::numbers::sqrt2;
    std::vector<JumpChannel> out;
    out.reserve(static_cast<std::size_t>(bonds));
    for (int l = 0; l < bonds; ++l) {
        JumpChannel ch;
        ch.site = l;
        ch.next = (l + 1) % L;
        ch.mode = Eigen::VectorXcd::Zero(L);
        ch.mode(ch.site) += cd(s, 0.0);
        ch.mode(ch.next) += cd(0.0, -s);
        out.push_back(std::move(ch));
    }
    return out;
}

namespace {

Eigen::MatrixXcd effective_from(const Eigen::MatrixXcd& h,
                                const std::vector<JumpChannel>& channels,
                                double gamma) {
    if (gamma == 0.0) return h;
    Eigen::MatrixXcd R = Eigen::MatrixXcd::Zero(h.rows(), h.cols());
    for (const auto& ch : channels) R.noalias() += ch.mode * ch.mode.adjoint();
    return h - cd(0.0, gamma / 2.0) * R;
}

} // namespace

Eigen::MatrixXcd build_effective_hamiltonian(const ModelSpec& spec) {
    return effective_from(build_hamiltonian(spec), build_jump_modes(spec), spec.gamma);
}

SingleParticleMatrices build_single_particle(const ModelSpec& spec) {
    SingleParticleMatrices m;
    m.h = build_hamiltonian(spec);
    m.channels = build_jump_modes(spec);
    m.h_eff = effective_from(m.h, m.channels, spec.gamma);
    return m;
}

} // namespace skinsim
