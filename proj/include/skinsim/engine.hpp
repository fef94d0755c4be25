// engine.hpp: Finite-dt quantum-jump integration of Slater-determinant trajectories

#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "skinsim/model.hpp"
#include "skinsim/rng.hpp"
#include "skinsim/state.hpp"

namespace skinsim {

struct ObservableSet {
    bool entropy = true;
    bool density = true;
    bool f_skin = true;
    bool f_r = true;
    bool correlation = false;
    bool velocity = true;
    bool momentum = false;
    bool mutual_information = false;
};

struct EngineConfig {
    double dt = 0.05;
    double t_max = 10.0;
    // Steps between snapshots; 0 picks 100 evenly spaced records.
    int record_every = 0;
    std::uint64_t seed = 1;
    ObservableSet observables;
    // Block length for I_AB with A = leftmost and B = rightmost block; 0 means L/4.
    int mi_block = 0;
};

void validate(const EngineConfig& config, const ModelSpec& spec);
long long step_count(const EngineConfig& config);
int resolved_record_every(const EngineConfig& config);

struct TrajectoryRecord {
    static constexpr double none = std::numeric_limits<double>::quiet_NaN();

    double t = 0.0;
    std::uint64_t jump_count = 0;
    double S_half = none;
    double f_skin = none;
    double f_r = none;
    double velocity = none;
    double mutual_information = none;
    std::vector<double> density;
    std::vector<double> correlation; // |C_{i,i+l}|^2 for i = L/2 (1-based), l = 1..L/2
    std::vector<double> momentum;
};

// Numerical failure inside a trajectory, tagged with where it happened.
class StepError : public std::runtime_error {
public:
    StepError(const std::string& what, std::uint64_t trajectory, double time)
        : std::runtime_error(what + " (trajectory " + std::to_string(trajectory) + ", t = " + std::to_string(time) + ")"),
          trajectory_(trajectory), time_(time) {}
    std::uint64_t trajectory() const noexcept { return trajectory_; }
    double time() const noexcept { return time_; }

private:
    std::uint64_t trajectory_;
    double time_;
};

// exp(-i h_eff dt) by scaling and squaring.
Eigen::MatrixXcd make_propagator(const Eigen::MatrixXcd& h_eff, double dt);

// Reduced QR of K U; throws std::runtime_error when K U loses column rank.
SlaterState nonhermitian_step(const SlaterState& state, const Eigen::MatrixXcd& K);

// Q factor of a reduced QR; throws std::runtime_error on rank deficiency.
Eigen::MatrixXcd orthonormalize(const Eigen::MatrixXcd& A);

// <d^dagger d> for the channel mode.
double channel_occupation(const SlaterState& state, const JumpChannel& channel);

// gamma dt <d_l^dagger d_l> per channel, clamped to [0, 1].
std::vector<double> jump_probabilities(const SlaterState& state, std::span<const JumpChannel> channels,
                                       double gamma, double dt);

// One uniform per channel in ascending order; channel l fires when u_l < p_l.
std::vector<int> sample_jumps(std::span<const double> probabilities, RandomStream& rng);
std::vector<int> sample_jumps(const SlaterState& state, const ModelSpec& spec, double dt, RandomStream& rng);

// |psi> -> L_l |psi> / ||L_l |psi>|| with L_l = exp(i theta n_next) d^dagger d.
// Throws std::runtime_error if d annihilates the state.
SlaterState apply_jump(const SlaterState& state, const JumpChannel& channel, double theta);

// Everything a trajectory needs that depends only on (spec, dt).
struct Propagation {
    ModelSpec spec;
    SingleParticleMatrices matrices;
    Eigen::MatrixXcd K;
    double dt = 0.0;
};

Propagation prepare_propagation(const ModelSpec& spec, double dt);

// Step-by-step trajectory: each step takes jump probabilities from the
// current state, evolves with K, then applies the fired jumps in ascending
// channel order.
class Trajectory {
public:
    Trajectory(const Propagation& propagation, SlaterState initial, std::uint64_t seed, std::uint64_t index);

    void step();

    const SlaterState& state() const noexcept { return state_; }
    double time() const noexcept { return static_cast<double>(steps_) * prop_->dt; }
    long long steps() const noexcept { return steps_; }
    std::uint64_t jump_count() const noexcept { return jumps_; }
    const std::vector<int>& last_jumps() const noexcept { return last_jumps_; }
    std::uint64_t index() const noexcept { return index_; }

private:
    const Propagation* prop_;
    SlaterState state_;
    RandomStream rng_;
    std::uint64_t index_;
    long long steps_ = 0;
    std::uint64_t jumps_ = 0;
    std::vector<int> last_jumps_;
};

TrajectoryRecord record_observables(const SlaterState& state, const SlaterState& initial,
                                    const SingleParticleMatrices& matrices, const ModelSpec& spec,
                                    const EngineConfig& config, double t, std::uint64_t jump_count);

std::vector<TrajectoryRecord> run_trajectory(const ModelSpec& spec, const EngineConfig& config,
                                             const SlaterState& initial, std::uint64_t trajectory_index);
// Same, reusing a prepared propagator; config is assumed validated.
std::vector<TrajectoryRecord> run_trajectory(const Propagation& propagation, const EngineConfig& config,
                                             const SlaterState& initial, std::uint64_t trajectory_index);

enum class InitialKind { neel, ground, random_fock, skin };

std::string_view to_string(InitialKind kind) noexcept;
InitialKind parse_initial(std::string_view text);

// Initial state for trajectory `index`; random Fock states use a stream split
// off (seed, index) so the jump stream is unaffected.
SlaterState make_initial(InitialKind kind, const ModelSpec& spec, std::uint64_t seed, std::uint64_t index);

struct SeriesStat {
    Eigen::MatrixXd mean; // rows: record times, cols: components
    Eigen::MatrixXd se;
};

struct EnsembleSeries {
    int L = 0;
    int n_trajectories = 0;
    std::vector<double> times;
    // Canonical order: S_half, f_skin, f_r, velocity, I_AB, jumps, then the
    // vector observables density, correlation, momentum.
    std::vector<std::pair<std::string, SeriesStat>> observables;

    const SeriesStat* find(std::string_view name) const;
    const SeriesStat& at(std::string_view name) const;
};

class EnsembleError : public std::runtime_error {
public:
    struct Failure {
        std::uint64_t trajectory;
        double time;
        std::string message;
    };

    explicit EnsembleError(std::vector<Failure> failures);
    const std::vector<Failure>& failures() const noexcept { return failures_; }

private:
    std::vector<Failure> failures_;
};

using ProgressFn = std::function<void(int done, int total)>;

// Trajectories run on `workers` threads; the reduction consumes them in index
// order, so the result is bit-identical for any worker count.
EnsembleSeries run_ensemble(const ModelSpec& spec, const EngineConfig& config, InitialKind initial, int n_traj,
                            int workers = 1, const ProgressFn& progress = {});

// One trajectory in ensemble layout: means are the recorded values, errors 0.
EnsembleSeries trajectory_series(const std::vector<TrajectoryRecord>& records, const ObservableSet& observables, int L);

} // namespace skinsim
