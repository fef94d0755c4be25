// circuit.hpp: Statevector simulation of the qubit circuit with measurement feedback
//
// Qubit i (0-based) is bit i of the basis label. |0> = up = empty,
// |1> = down = occupied; a sigma^z outcome of -1 means down.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "skinsim/model.hpp"
#include "skinsim/rng.hpp"

namespace skinsim {

struct CircuitConfig {
    int L = 12;
    double delta_t = 0.5;
    double p = 0.7;           // per-qubit measurement probability
    int modules = 60;         // N_t
    double W = 0.0;
    double alpha = ModelSpec{}.alpha;
    int shots = 900;
    std::uint64_t seed = 1;
};

// Throws std::invalid_argument naming the field.
void validate(const CircuitConfig& config);

class QubitRegister {
public:
    static constexpr int max_qubits = 24;

    explicit QubitRegister(int L);              // all up
    static QubitRegister neel(int L);           // down on odd 0-based qubits
    static QubitRegister basis_state(int L, std::uint32_t label);

    int qubits() const noexcept { return L_; }
    const Eigen::VectorXcd& amplitudes() const noexcept { return psi_; }
    Eigen::VectorXcd& amplitudes() noexcept { return psi_; }

    // Probability of finding qubit q down.
    double down_probability(int q) const;
    // Expected number of down qubits.
    double down_count() const;

private:
    int L_;
    Eigen::VectorXcd psi_;
};

// exp(-i dt (XX + YY)) on qubits (q, q+1).
void apply_hopping_gate(QubitRegister& reg, int q, double dt);
// exp(-i angle sigma^z) on qubit q.
void apply_z_rotation(QubitRegister& reg, int q, double angle);
void apply_swap(QubitRegister& reg, int a, int b);
void apply_cz(QubitRegister& reg, int a, int b);

// Projective sigma^z measurement of qubit q with one uniform; returns true for down.
bool measure_qubit(QubitRegister& reg, int q, RandomStream& rng);

// Odd bonds, even bonds (1-based bond labels), optional Z rotations, then for
// each qubit in ascending order: one uniform decides whether to measure, one
// more gives the outcome; a down outcome on qubit q >= 1 triggers SWAP(q, q-1)
// then CZ(q, q-1). Returns the number of feedback operations applied.
int apply_module(QubitRegister& reg, const CircuitConfig& config, RandomStream& rng);

// Single-shot sigma^z readout of every qubit (+1 up, -1 down), sampled with one
// uniform without collapsing the register.
std::vector<int> sample_readout(const QubitRegister& reg, RandomStream& rng);

// Runs config.modules modules from the Neel state and reads out once.
std::vector<int> run_circuit_shot(const CircuitConfig& config, RandomStream& rng);

struct ShotCheckpoint {
    int modules = 0;
    std::vector<int> readout;
    double entropy = 0.0; // half-chain entropy of the register at this point
};

// One shot, read out after each module count in `checkpoints` (ascending).
std::vector<ShotCheckpoint> run_circuit_series(const CircuitConfig& config, std::span<const int> checkpoints,
                                               RandomStream& rng);

struct ShotEstimate {
    Eigen::VectorXd spin;   // mean of nu_l in [-1, 1]
    double f_skin = 0.0;    // fraction of records equal to (-1, ..., -1, +1, ..., +1)
    int shots = 0;
};

ShotEstimate estimate_from_shots(std::span<const std::vector<int>> records);

// Natural-log entanglement entropy of qubits [0, cut).
double circuit_entropy(const QubitRegister& reg, int cut);

struct CircuitSeries {
    std::vector<int> modules;
    std::vector<double> t_over_L;
    Eigen::MatrixXd spin;          // rows checkpoints, cols qubits
    std::vector<double> f_skin;
    std::vector<double> entropy_mean;
    std::vector<double> entropy_se;
    std::vector<int> down_min;     // min and max down count over shots at each checkpoint
    std::vector<int> down_max;
    int shots = 0;
};

// Shot s uses RandomStream(seed, s); reduction is in shot order, so the result
// does not depend on `workers`.
CircuitSeries run_circuit_ensemble(const CircuitConfig& config, std::span<const int> checkpoints, int workers = 1,
                                   std::vector<std::vector<int>>* final_records = nullptr);

} // namespace skinsim
