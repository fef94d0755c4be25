// engine.cpp: Non-Hermitian propagation, jump sampling and jump application

#include "skinsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

#include "skinsim/analysis.hpp"

namespace skinsim {

namespace {

using cd = std::complex<double>;

constexpr double kRankTolerance = 1e-12;
constexpr double kAmplitudeTolerance = 1e-12;

Eigen::RowVectorXcd mode_overlaps(const Eigen::MatrixXcd& U, const JumpChannel& ch) {
    // g_n = d^dagger U_n; d is supported on two sites only.
    return std::conj(ch.mode(ch.site)) * U.row(ch.site) + std::conj(ch.mode(ch.next)) * U.row(ch.next);
}

// Column transformation of the jump on a (not necessarily orthonormal) column
// set. The span afterwards represents L_l |psi> up to normalization.
void transform_for_jump(Eigen::MatrixXcd& U, const JumpChannel& ch, double theta) {
    const Eigen::RowVectorXcd g = mode_overlaps(U, ch);
    Eigen::Index pivot = 0;
    const double gmax = g.cwiseAbs().maxCoeff(&pivot);
    if (!(gmax > kAmplitudeTolerance))
        throw std::runtime_error("apply_jump: jump mode has zero amplitude on the state");
    const Eigen::VectorXcd pivot_col = U.col(pivot);
    for (Eigen::Index n = 0; n < U.cols(); ++n) {
        if (n == pivot) continue;
        U.col(n) -= (g(n) / g(pivot)) * pivot_col;
    }
    U.col(pivot) = ch.mode;
    U.row(ch.next) *= std::polar(1.0, theta);
}

} // namespace

void validate(const EngineConfig& config, const ModelSpec& spec) {
    validate(spec);
    if (!(config.dt > 0.0) || !std::isfinite(config.dt)) throw std::invalid_argument("dt: must be positive");
    if (!(config.t_max >= 0.0) || !std::isfinite(config.t_max)) throw std::invalid_argument("t_max: must be >= 0");
    if (config.record_every < 0) throw std::invalid_argument("record_every: must be >= 0");
    if (spec.gamma * config.dt > 0.5)
        throw std::invalid_argument("dt: gamma * dt must not exceed 0.5");
    if (config.mi_block < 0 || 2 * config.mi_block > spec.L)
        throw std::invalid_argument("mi_block: blocks must fit disjointly in the chain");
}

long long step_count(const EngineConfig& config) {
    return std::llround(config.t_max / config.dt);
}

int resolved_record_every(const EngineConfig& config) {
    if (config.record_every > 0) return config.record_every;
    return static_cast<int>(std::max<long long>(1, step_count(config) / 100));
}

Eigen::MatrixXcd make_propagator(const Eigen::MatrixXcd& h_eff, double dt) {
    if (h_eff.rows() != h_eff.cols()) throw std::invalid_argument("make_propagator: h_eff must be square");
    const Eigen::MatrixXcd generator = cd(0.0, -dt) * h_eff;
    Eigen::MatrixXcd K = generator.exp();
    if (!K.allFinite()) throw std::runtime_error("make_propagator: matrix exponential did not converge");
    return K;
}

Eigen::MatrixXcd orthonormalize(const Eigen::MatrixXcd& A) {
    const Eigen::Index L = A.rows(), N = A.cols();
    if (N == 0) return A;
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(A);
    const auto& R = qr.matrixQR();
    double rmax = 0.0, rmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index n = 0; n < N; ++n) {
        const double r = std::abs(R(n, n));
        rmax = std::max(rmax, r);
        rmin = std::min(rmin, r);
    }
    if (!(rmin > kRankTolerance * rmax)) throw std::runtime_error("orthonormalize: column set is rank deficient");
    return qr.householderQ() * Eigen::MatrixXcd::Identity(L, N);
}

SlaterState nonhermitian_step(const SlaterState& state, const Eigen::MatrixXcd& K) {
    return SlaterState::adopt(orthonormalize(K * state.orbitals()));
}

double channel_occupation(const SlaterState& state, const JumpChannel& channel) {
    return mode_overlaps(state.orbitals(), channel).squaredNorm();
}

std::vector<double> jump_probabilities(const SlaterState& state, std::span<const JumpChannel> channels,
                                       double gamma, double dt) {
    std::vector<double> p;
    p.reserve(channels.size());
    for (const auto& ch : channels) p.push_back(std::clamp(gamma * dt * channel_occupation(state, ch), 0.0, 1.0));
    return p;
}

std::vector<int> sample_jumps(std::span<const double> probabilities, RandomStream& rng) {
    std::vector<int> fired;
    for (std::size_t l = 0; l < probabilities.size(); ++l)
        if (rng.uniform() < probabilities[l]) fired.push_back(static_cast<int>(l));
    return fired;
}

std::vector<int> sample_jumps(const SlaterState& state, const ModelSpec& spec, double dt, RandomStream& rng) {
    const auto channels = build_jump_modes(spec);
    const auto p = jump_probabilities(state, channels, spec.gamma, dt);
    return sample_jumps(p, rng);
}

SlaterState apply_jump(const SlaterState& state, const JumpChannel& channel, double theta) {
    Eigen::MatrixXcd U = state.orbitals();
    transform_for_jump(U, channel, theta);
    return SlaterState::adopt(orthonormalize(U));
}

Propagation prepare_propagation(const ModelSpec& spec, double dt) {
    Propagation p;
    p.spec = spec;
    p.matrices = build_single_particle(spec);
    p.K = make_propagator(p.matrices.h_eff, dt);
    p.dt = dt;
    return p;
}

Trajectory::Trajectory(const Propagation& propagation, SlaterState initial, std::uint64_t seed,
                       std::uint64_t index)
    : prop_(&propagation), state_(std::move(initial)), rng_(seed, index), index_(index) {
    if (state_.sites() != propagation.spec.L) throw std::invalid_argument("Trajectory: initial state has wrong L");
}

void Trajectory::step() {
    const auto& channels = prop_->matrices.channels;
    const double t_next = static_cast<double>(steps_ + 1) * prop_->dt;
    try {
        const auto p = jump_probabilities(state_, channels, prop_->spec.gamma, prop_->dt);
        Eigen::MatrixXcd U = prop_->K * state_.orbitals();
        last_jumps_ = sample_jumps(p, rng_);
        // Jumps act on the evolved ray; one QR normalizes the whole step.
        for (int l : last_jumps_) transform_for_jump(U, channels[static_cast<std::size_t>(l)], prop_->spec.theta);
        state_ = SlaterState::adopt(orthonormalize(U));
    } catch (const StepError&) {
        throw;
    } catch (const std::exception& e) {
        throw StepError(e.what(), index_, t_next);
    }
    jumps_ += last_jumps_.size();
    ++steps_;
}

TrajectoryRecord record_observables(const SlaterState& state, const SlaterState& initial,
                                    const SingleParticleMatrices& matrices, const ModelSpec& spec,
                                    const EngineConfig& config, double t, std::uint64_t jump_count) {
    const auto& obs = config.observables;
    TrajectoryRecord r;
    r.t = t;
    r.jump_count = jump_count;
    const int L = state.sites();
    const bool need_C = obs.entropy || obs.correlation || obs.velocity || obs.mutual_information;
    Eigen::MatrixXcd C;
    if (need_C) C = correlation_matrix(state);

    if (obs.entropy) r.S_half = half_chain_entropy(C);
    if (obs.f_skin) r.f_skin = f_skin(state);
    if (obs.f_r) r.f_r = f_r(state, initial);
    if (obs.velocity) r.velocity = velocity_expectation(C, matrices, spec);
    if (obs.mutual_information) {
        const int block = config.mi_block > 0 ? config.mi_block : L / 4;
        std::vector<int> A(static_cast<std::size_t>(block)), B(static_cast<std::size_t>(block));
        for (int k = 0; k < block; ++k) {
            A[static_cast<std::size_t>(k)] = k;
            B[static_cast<std::size_t>(k)] = L - block + k;
        }
        r.mutual_information = mutual_information(C, A, B);
    }
    if (obs.density) {
        const Eigen::VectorXd n = density(state);
        r.density.assign(n.data(), n.data() + n.size());
    }
    if (obs.correlation) {
        const int i0 = L / 2 - 1;
        for (int l = 1; i0 + l < L; ++l) r.correlation.push_back(density_correlation(C, i0, i0 + l));
    }
    if (obs.momentum) {
        const Eigen::VectorXd nk = momentum_density(state);
        r.momentum.assign(nk.data(), nk.data() + nk.size());
    }
    return r;
}

std::vector<TrajectoryRecord> run_trajectory(const Propagation& prop, const EngineConfig& config,
                                             const SlaterState& initial, std::uint64_t index) {
    const long long steps = step_count(config);
    const int every = resolved_record_every(config);
    Trajectory traj(prop, initial, config.seed, index);
    std::vector<TrajectoryRecord> out;
    out.reserve(static_cast<std::size_t>(steps / every + 1));
    auto snapshot = [&] {
        try {
            out.push_back(record_observables(traj.state(), initial, prop.matrices, prop.spec, config, traj.time(),
                                             traj.jump_count()));
        } catch (const std::exception& e) {
            throw StepError(e.what(), index, traj.time());
        }
    };
    snapshot();
    for (long long k = 1; k <= steps; ++k) {
        traj.step();
        if (k % every == 0) snapshot();
    }
    return out;
}

std::vector<TrajectoryRecord> run_trajectory(const ModelSpec& spec, const EngineConfig& config,
                                             const SlaterState& initial, std::uint64_t trajectory_index) {
    validate(config, spec);
    const Propagation prop = prepare_propagation(spec, config.dt);
    return run_trajectory(prop, config, initial, trajectory_index);
}

std::string_view to_string(InitialKind kind) noexcept {
    switch (kind) {
    case InitialKind::neel: return "neel";
    case InitialKind::ground: return "ground";
    case InitialKind::random_fock: return "random_fock";
    case InitialKind::skin: return "skin";
    }
    return "neel";
}

InitialKind parse_initial(std::string_view text) {
    if (text == "neel") return InitialKind::neel;
    if (text == "ground") return InitialKind::ground;
    if (text == "random_fock") return InitialKind::random_fock;
    if (text == "skin") return InitialKind::skin;
    throw std::invalid_argument("initial: unknown initial state '" + std::string(text) + "'");
}

SlaterState make_initial(InitialKind kind, const ModelSpec& spec, std::uint64_t seed, std::uint64_t index) {
    const int L = spec.L;
    switch (kind) {
    case InitialKind::neel:
        return neel_state(L);
    case InitialKind::ground:
        return ground_state(build_hamiltonian(spec), L / 2);
    case InitialKind::random_fock: {
        RandomStream rng = RandomStream(seed, index).split(0x1417ULL);
        return random_fock_state(L, L / 2, rng);
    }
    case InitialKind::skin:
        return skin_state(L, L / 2);
    }
    throw std::invalid_argument("initial: unknown initial state");
}

} // namespace skinsim
