// model.hpp: Single-particle description of the monitored chain with feedback
//
// Sites are 0-based in the API (index i is physical site l = i + 1). The
// quasiperiodic phase uses the physical label: W cos(2 pi alpha l).

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace skinsim {

enum class Boundary { open, periodic };
enum class Disorder { none, quasiperiodic, uniform };

std::string_view to_string(Boundary bc) noexcept;
std::string_view to_string(Disorder kind) noexcept;
Boundary parse_boundary(std::string_view text);
Disorder parse_disorder(std::string_view text);

struct ModelSpec {
    int L = 16;
    double J = 1.0;
    double W = 0.0;
    double alpha = std::numbers::phi - 1.0; // (sqrt 5 - 1) / 2
    double theta = std::numbers::pi;
    double gamma = 0.5;
    Boundary bc = Boundary::open;
    Disorder disorder = Disorder::none;
    std::uint64_t disorder_seed = 0;
};

// Throws std::invalid_argument naming the offending field.
void validate(const ModelSpec& spec);

// Spec for trajectory `index` of an ensemble: uniform disorder is redrawn per
// trajectory from disorder_seed xor index; other kinds are returned unchanged.
ModelSpec for_trajectory(const ModelSpec& spec, std::uint64_t index);

// One monitored bond: jump mode d (unit vector with support on `site` and
// `next`) and the site receiving the feedback phase.
struct JumpChannel {
    int site = 0;
    int next = 0;
    Eigen::VectorXcd mode;
};

struct SingleParticleMatrices {
    Eigen::MatrixXcd h;
    std::vector<JumpChannel> channels;
    Eigen::MatrixXcd h_eff;
};

Eigen::VectorXd onsite_potential(const ModelSpec& spec);
Eigen::MatrixXcd build_hamiltonian(const ModelSpec& spec);

// Channels on physical bonds only: L-1 under OBC, L under PBC (last bond
// wraps to site 0). [d_l]_i = (delta_{i,l} - i delta_{i,l+1}) / sqrt 2.
std::vector<JumpChannel> build_jump_modes(const ModelSpec& spec);

// h - i (gamma/2) sum_l d_l d_l^dagger. The feedback phase drops out of L^dagger L.
Eigen::MatrixXcd build_effective_hamiltonian(const ModelSpec& spec);

SingleParticleMatrices build_single_particle(const ModelSpec& spec);

} // namespace skinsim
