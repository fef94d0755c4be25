// circuit.cpp: Bricklayer hopping gates, probabilistic measurement and feedback

#include "skinsim/circuit.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>

namespace skinsim {

namespace {

using cd = std::complex<double>;

constexpr int kMaxEntropyQubits = 14;

void check_qubit(const QubitRegister& reg, int q, const char* what) {
    if (q < 0 || q >= reg.qubits())
        throw std::out_of_range(std::string(what) + ": qubit " + std::to_string(q) + " outside register");
}

} // namespace

void validate(const CircuitConfig& c) {
    if (c.L < 2 || c.L > QubitRegister::max_qubits)
        throw std::invalid_argument("L: circuit size must be in [2, " + std::to_string(QubitRegister::max_qubits) + "]");
    if (c.L % 2 != 0) throw std::invalid_argument("L: circuit size must be even for the Neel start");
    if (!std::isfinite(c.delta_t)) throw std::invalid_argument("delta_t: must be finite");
    if (!(c.p >= 0.0 && c.p <= 1.0)) throw std::invalid_argument("p: measurement probability must be in [0, 1]");
    if (c.modules < 0) throw std::invalid_argument("modules: must be >= 0");
    if (!(c.W >= 0.0)) throw std::invalid_argument("W: disorder amplitude must be >= 0");
    if (c.shots < 1) throw std::invalid_argument("shots: need at least one shot");
}

QubitRegister::QubitRegister(int L) : L_(L) {
    if (L < 1 || L > max_qubits) throw std::invalid_argument("QubitRegister: unsupported qubit count");
    psi_ = Eigen::VectorXcd::Zero(Eigen::Index{1} << L);
    psi_(0) = 1.0;
}

QubitRegister QubitRegister::basis_state(int L, std::uint32_t label) {
    QubitRegister r(L);
    if (label >= (1u << L)) throw std::invalid_argument("QubitRegister: basis label out of range");
    r.psi_(0) = 0.0;
    r.psi_(label) = 1.0;
    return r;
}

QubitRegister QubitRegister::neel(int L) {
    std::uint32_t label = 0;
    for (int q = 1; q < L; q += 2) label |= 1u << q;
    return basis_state(L, label);
}

double QubitRegister::down_probability(int q) const {
    check_qubit(*this, q, "down_probability");
    double p = 0.0;
    for (Eigen::Index s = 0; s < psi_.size(); ++s)
        if (s >> q & 1) p += std::norm(psi_(s));
    return p;
}

double QubitRegister::down_count() const {
    double n = 0.0;
    for (Eigen::Index s = 0; s < psi_.size(); ++s) n += std::norm(psi_(s)) * std::popcount(static_cast<std::uint32_t>(s));
    return n;
}

void apply_hopping_gate(QubitRegister& reg, int q, double dt) {
    check_qubit(reg, q, "apply_hopping_gate");
    check_qubit(reg, q + 1, "apply_hopping_gate");
    auto& psi = reg.amplitudes();
    const double c = std::cos(2.0 * dt);
    const cd s(0.0, -std::sin(2.0 * dt));
    const Eigen::Index lo = Eigen::Index{1} << q, hi = Eigen::Index{1} << (q + 1);
    for (Eigen::Index x = 0; x < psi.size(); ++x) {
        // visit each {01, 10} pair once, from the state with only the low bit set
        if (!(x & lo) || (x & hi)) continue;
        const Eigen::Index y = (x ^ lo) | hi;
        const cd a = psi(x), b = psi(y);
        psi(x) = c * a + s * b;
        psi(y) = s * a + c * b;
    }
}

void apply_z_rotation(QubitRegister& reg, int q, double angle) {
    check_qubit(reg, q, "apply_z_rotation");
    auto& psi = reg.amplitudes();
    const cd up = std::polar(1.0, -angle), down = std::polar(1.0, angle);
    for (Eigen::Index s = 0; s < psi.size(); ++s) psi(s) *= (s >> q & 1) ? down : up;
}

void apply_swap(QubitRegister& reg, int a, int b) {
    check_qubit(reg, a, "apply_swap");
    check_qubit(reg, b, "apply_swap");
    if (a == b) return;
    auto& psi = reg.amplitudes();
    for (Eigen::Index s = 0; s < psi.size(); ++s) {
        const bool ba = s >> a & 1, bb = s >> b & 1;
        if (ba && !bb) std::swap(psi(s), psi((s ^ (Eigen::Index{1} << a)) | (Eigen::Index{1} << b)));
    }
}

void apply_cz(QubitRegister& reg, int a, int b) {
    check_qubit(reg, a, "apply_cz");
    check_qubit(reg, b, "apply_cz");
    auto& psi = reg.amplitudes();
    for (Eigen::Index s = 0; s < psi.size(); ++s)
        if ((s >> a & 1) && (s >> b & 1)) psi(s) = -psi(s);
}

bool measure_qubit(QubitRegister& reg, int q, RandomStream& rng) {
    const double p_down = reg.down_probability(q);
    const bool down = rng.uniform() < p_down;
    auto& psi = reg.amplitudes();
    const double keep = down ? p_down : 1.0 - p_down;
    if (!(keep > 0.0)) throw std::runtime_error("measure_qubit: sampled a zero-probability outcome");
    const double scale = 1.0 / std::sqrt(keep);
    for (Eigen::Index s = 0; s < psi.size(); ++s) psi(s) = (static_cast<bool>(s >> q & 1) == down) ? psi(s) * scale : cd(0.0);
    return down;
}

int apply_module(QubitRegister& reg, const CircuitConfig& config, RandomStream& rng) {
    const int L = reg.qubits();
    for (int q = 0; q + 1 < L; q += 2) apply_hopping_gate(reg, q, config.delta_t);
    for (int q = 1; q + 1 < L; q += 2) apply_hopping_gate(reg, q, config.delta_t);
    if (config.W != 0.0)
        for (int q = 0; q < L; ++q)
            apply_z_rotation(reg, q, config.delta_t * config.W * std::cos(2.0 * std::numbers::pi * config.alpha * (q + 1)));
    int feedback = 0;
    for (int q = 0; q < L; ++q) {
        if (!(rng.uniform() < config.p)) continue;
        if (measure_qubit(reg, q, rng) && q >= 1) {
            apply_swap(reg, q, q - 1);
            apply_cz(reg, q, q - 1);
            ++feedback;
        }
    }
    return feedback;
}

std::vector<int> sample_readout(const QubitRegister& reg, RandomStream& rng) {
    const auto& psi = reg.amplitudes();
    const double u = rng.uniform() * psi.squaredNorm();
    double acc = 0.0;
    Eigen::Index pick = -1;
    for (Eigen::Index s = 0; s < psi.size(); ++s) {
        const double w = std::norm(psi(s));
        if (w == 0.0) continue;
        pick = s;
        acc += w;
        if (u < acc) break;
    }
    if (pick < 0) throw std::runtime_error("sample_readout: register has zero norm");
    std::vector<int> nu(static_cast<std::size_t>(reg.qubits()));
    for (int q = 0; q < reg.qubits(); ++q) nu[static_cast<std::size_t>(q)] = (pick >> q & 1) ? -1 : 1;
    return nu;
}

std::vector<int> run_circuit_shot(const CircuitConfig& config, RandomStream& rng) {
    validate(config);
    QubitRegister reg = QubitRegister::neel(config.L);
    for (int m = 0; m < config.modules; ++m) apply_module(reg, config, rng);
    return sample_readout(reg, rng);
}

std::vector<ShotCheckpoint> run_circuit_series(const CircuitConfig& config, std::span<const int> checkpoints,
                                               RandomStream& rng) {
    validate(config);
    if (!std::is_sorted(checkpoints.begin(), checkpoints.end()) ||
        (!checkpoints.empty() && checkpoints.front() < 0))
        throw std::invalid_argument("checkpoints: module counts must be ascending and >= 0");
    QubitRegister reg = QubitRegister::neel(config.L);
    std::vector<ShotCheckpoint> out;
    int m = 0;
    for (int c : checkpoints) {
        for (; m < c; ++m) apply_module(reg, config, rng);
        ShotCheckpoint cp;
        cp.modules = c;
        cp.readout = sample_readout(reg, rng);
        cp.entropy = config.L <= kMaxEntropyQubits ? circuit_entropy(reg, config.L / 2)
                                                   : std::numeric_limits<double>::quiet_NaN();
        out.push_back(std::move(cp));
    }
    return out;
}

ShotEstimate estimate_from_shots(std::span<const std::vector<int>> records) {
    if (records.empty()) throw std::invalid_argument("estimate_from_shots: need at least one record");
    const auto L = records.front().size();
    ShotEstimate e;
    e.shots = static_cast<int>(records.size());
    e.spin = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(L));
    int skin = 0;
    for (const auto& r : records) {
        if (r.size() != L) throw std::invalid_argument("estimate_from_shots: records differ in length");
        bool is_skin = true;
        for (std::size_t q = 0; q < L; ++q) {
            e.spin(static_cast<Eigen::Index>(q)) += r[q];
            const int ideal = q < L / 2 ? -1 : 1;
            if (r[q] != ideal) is_skin = false;
        }
        skin += is_skin;
    }
    e.spin /= static_cast<double>(records.size());
    e.f_skin = static_cast<double>(skin) / static_cast<double>(records.size());
    return e;
}

double circuit_entropy(const QubitRegister& reg, int cut) {
    const int L = reg.qubits();
    if (L > kMaxEntropyQubits) throw std::invalid_argument("circuit_entropy: register larger than 14 qubits");
    if (cut < 0 || cut > L) throw std::invalid_argument("circuit_entropy: cut outside register");
    const Eigen::Index rows = Eigen::Index{1} << cut, cols = Eigen::Index{1} << (L - cut);
    // low bits index qubits [0, cut)
    const Eigen::Map<const Eigen::MatrixXcd> M(reg.amplitudes().data(), rows, cols);
    // reduced density matrix on the smaller side
    const Eigen::MatrixXcd rho = rows <= cols ? Eigen::MatrixXcd(M * M.adjoint()) : Eigen::MatrixXcd(M.adjoint() * M);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(rho, Eigen::EigenvaluesOnly);
    const double norm = reg.amplitudes().squaredNorm();
    double S = 0.0;
    for (Eigen::Index k = 0; k < eig.eigenvalues().size(); ++k) {
        const double p = eig.eigenvalues()(k) / norm;
        if (p > 1e-300) S -= p * std::log(p);
    }
    return S;
}

CircuitSeries run_circuit_ensemble(const CircuitConfig& config, std::span<const int> checkpoints, int workers,
                                   std::vector<std::vector<int>>* final_records) {
    validate(config);
    if (checkpoints.empty()) throw std::invalid_argument("checkpoints: need at least one module count");
    const int shots = config.shots;
    workers = std::clamp(workers, 1, shots);
    const std::size_t nc = checkpoints.size();
    const int L = config.L;

    CircuitSeries out;
    out.modules.assign(checkpoints.begin(), checkpoints.end());
    for (int m : out.modules) out.t_over_L.push_back(m * config.delta_t / L);
    out.spin = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nc), L);
    out.f_skin.assign(nc, 0.0);
    out.entropy_mean.assign(nc, 0.0);
    out.entropy_se.assign(nc, 0.0);
    out.down_min.assign(nc, std::numeric_limits<int>::max());
    out.down_max.assign(nc, std::numeric_limits<int>::min());
    out.shots = shots;
    std::vector<double> entropy_m2(nc, 0.0);
    std::vector<std::vector<int>> skin_hits(nc);
    std::vector<int> skin_count(nc, 0);
    if (final_records) final_records->clear();

    std::vector<std::optional<std::vector<ShotCheckpoint>>> slots(static_cast<std::size_t>(shots));
    std::size_t cursor = 0;
    int reduced = 0;
    std::mutex mutex;
    std::atomic<int> next{0};
    std::exception_ptr failure;

    auto reduce = [&](const std::vector<ShotCheckpoint>& shot) {
        ++reduced;
        for (std::size_t c = 0; c < nc; ++c) {
            const auto& r = shot[c].readout;
            int down = 0;
            bool skin = true;
            for (int q = 0; q < L; ++q) {
                out.spin(static_cast<Eigen::Index>(c), q) += r[static_cast<std::size_t>(q)];
                down += r[static_cast<std::size_t>(q)] < 0;
                if (r[static_cast<std::size_t>(q)] != (q < L / 2 ? -1 : 1)) skin = false;
            }
            skin_count[c] += skin;
            out.down_min[c] = std::min(out.down_min[c], down);
            out.down_max[c] = std::max(out.down_max[c], down);
            const double delta = shot[c].entropy - out.entropy_mean[c];
            out.entropy_mean[c] += delta / reduced;
            entropy_m2[c] += delta * (shot[c].entropy - out.entropy_mean[c]);
        }
        if (final_records) final_records->push_back(shot.back().readout);
    };

    auto worker = [&] {
        for (;;) {
            const int s = next.fetch_add(1);
            if (s >= shots) return;
            std::vector<ShotCheckpoint> result;
            try {
                RandomStream rng(config.seed, static_cast<std::uint64_t>(s));
                result = run_circuit_series(config, checkpoints, rng);
            } catch (...) {
                std::lock_guard lock(mutex);
                if (!failure) failure = std::current_exception();
                next = shots;
                return;
            }
            std::lock_guard lock(mutex);
            slots[static_cast<std::size_t>(s)] = std::move(result);
            while (cursor < slots.size() && slots[cursor]) {
                reduce(*slots[cursor]);
                slots[cursor].reset();
                ++cursor;
            }
        }
    };

    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    out.spin /= static_cast<double>(shots);
    for (std::size_t c = 0; c < nc; ++c) {
        out.f_skin[c] = static_cast<double>(skin_count[c]) / shots;
        out.entropy_se[c] = shots > 1 ? std::sqrt(entropy_m2[c] / (static_cast<double>(shots - 1) * shots)) : 0.0;
    }
    return out;
}

} // namespace skinsim
