// analysis.hpp: Velocity, transition estimates, scaling fits and W sweeps

#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "skinsim/engine.hpp"
#include "skinsim/model.hpp"
#include "skinsim/state.hpp"

namespace skinsim {

// Expected rate d<n_l>/dt of every site for the jump unraveling, including the
// average effect of jumps, evaluated on a Slater state with correlation C.
Eigen::VectorXd density_rates(const Eigen::MatrixXcd& C, const SingleParticleMatrices& matrices, double gamma);

// v = (2/L) sum_l l d<n_l>/dt with physical labels l = 1..L.
double velocity_expectation(const Eigen::MatrixXcd& C, const SingleParticleMatrices& matrices, const ModelSpec& spec);
double velocity_expectation(const SlaterState& state, const ModelSpec& spec);

// (2/L) sum_l l n_l with physical labels.
double mean_position(std::span<const double> density);

struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
    double intercept_se = 0.0;
    double slope_se = 0.0;
    double r2 = 0.0;
    int points = 0;
};

// Ordinary least squares y = intercept + slope x; needs two distinct x values.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

struct VelocityFit {
    double v0 = 0.0;            // intercept
    double slope = 0.0;         // dv / d(t/L); equals 2 v0^2 for the linear depletion law
    double v0_from_slope = 0.0; // sign(v0) sqrt(slope / 2)
    LineFit line;
};

// Fits v against t/L over points with t/L in [lo, hi]. Throws
// std::invalid_argument with fewer than 4 points in the window.
VelocityFit fit_velocity_slope(std::span<const double> t_over_L, std::span<const double> v, double lo, double hi);

// Default window [0.1, 0.6 tc_estimate] in t/L.
std::pair<double, double> default_velocity_window(double tc_estimate);

// (2/L) sum_k n_k v_k with v_k = -2 sin k on the grid of momentum_grid(L).
double estimate_v0_from_pbc(std::span<const double> n_k);

// t_c / L = 1 / (2 |v0|); throws std::invalid_argument for v0 = 0.
double predict_tc(double v0);

// First upward crossing of `threshold` by linear interpolation; nullopt if the
// series never reaches it. A sample exactly at the threshold is the crossing.
std::optional<double> detect_transition(std::span<const double> t_over_L, std::span<const double> f_skin,
                                        double threshold = 0.5);

struct SeriesPeak {
    double value = 0.0;
    double t = 0.0;
    std::size_t index = 0;
};

// Maximum of a trajectory-averaged series; earliest index wins ties.
SeriesPeak series_max(std::span<const double> times, std::span<const double> values);
SeriesPeak max_entropy(const EnsembleSeries& series);
SeriesPeak max_mutual_information(const EnsembleSeries& series);

struct ScalingFit {
    double a = 0.0; // coefficient of ln L
    double b = 0.0;
    double a_se = 0.0;
    double b_se = 0.0;
    double r2 = 0.0;
    std::vector<double> L_values;
};

// S = a ln L + b; needs at least 3 sizes, not all equal.
ScalingFit fit_log_scaling(std::span<const double> L_values, std::span<const double> S);

// (L / pi) sin(pi l / L)
double chord_distance(int l, int L);

struct DecayComparison {
    LineFit power;       // ln C vs ln x
    LineFit exponential; // ln C vs x
    // exponential.r2 - power.r2
    double margin() const noexcept { return exponential.r2 - power.r2; }
};

// Fits C(x) against the chord distance; non-positive C values are skipped.
DecayComparison compare_decay(std::span<const double> chord, std::span<const double> C);

// Linear interpolation of (x, y) at xq, clamped to the end values.
double interpolate(std::span<const double> x, std::span<const double> y, double xq);

struct SweepRequest {
    ModelSpec base;
    EngineConfig config;
    InitialKind initial = InitialKind::neel;
    std::vector<double> W_values;
    std::vector<double> t_over_L;
    int n_traj = 1;
    int workers = 1;
};

struct PhaseDiagram {
    std::vector<double> W_values;
    std::vector<double> t_over_L;
    Eigen::MatrixXd S_half; // rows W, cols t/L
    // f_skin = 0.5 crossing per W; nullopt when f_skin never reaches 0.5.
    std::vector<std::optional<double>> tc;
};

// Called after each completed W point, in W order, with the row index and the
// full ensemble result.
using SweepPointFn = std::function<void(std::size_t, const EnsembleSeries&)>;

// Runs one ensemble per W and samples S_{L/2} onto the t/L grid. Ensemble
// failures propagate after earlier points have been handed to `on_point`.
PhaseDiagram sweep_phase_diagram(const SweepRequest& request, const SweepPointFn& on_point = {});

} // namespace skinsim
