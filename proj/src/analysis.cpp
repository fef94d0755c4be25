// analysis.cpp: Post-processing of trajectory ensembles

#include "skinsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace skinsim {

namespace {

using cd = std::complex<double>;

void check_same_size(std::size_t a, std::size_t b, const char* what) {
    if (a != b) throw std::invalid_argument(std::string(what) + ": input lengths differ");
}

} // namespace

Eigen::VectorXd density_rates(const Eigen::MatrixXcd& C, const SingleParticleMatrices& matrices, double gamma) {
    const Eigen::Index L = C.rows();
    const Eigen::MatrixXcd& a = matrices.h_eff;
    const Eigen::MatrixXcd ad = a.adjoint();
    const Eigen::MatrixXcd Ct = C.transpose();

    // <A n_l> and <n_l A> for A = sum a_ij c_i^dagger c_j, by Wick contraction.
    const cd trace_ad = ad.cwiseProduct(C).sum();
    const cd trace_a = a.cwiseProduct(C).sum();
    const Eigen::VectorXcd cross_ad = (Ct * ad * Ct).diagonal();
    const Eigen::VectorXcd cross_a = (Ct * a * Ct).diagonal();
    const Eigen::RowVectorXcd col_ad = ad.cwiseProduct(C).colwise().sum();
    const Eigen::VectorXcd row_a = a.cwiseProduct(C).rowwise().sum();

    Eigen::VectorXd rate(L);
    for (Eigen::Index l = 0; l < L; ++l) {
        const cd left = C(l, l) * trace_ad - cross_ad(l) + col_ad(l);  // <H_eff^dagger n_l>
        const cd right = C(l, l) * trace_a + row_a(l) - cross_a(l);    // <n_l H_eff>
        rate(l) = (cd(0.0, 1.0) * (left - right)).real();
    }

    // gamma sum_m <P_m n_l P_m> with P_m = d_m^dagger d_m.
    for (const auto& ch : matrices.channels) {
        const int s[2] = {ch.site, ch.next};
        Eigen::RowVectorXcd r = Eigen::RowVectorXcd::Zero(L); // <d^dagger c_l>
        for (int i : s) r += ch.mode(i) * C.row(i);
        cd p = 0.0;
        for (int i : s)
            for (int j : s) p += ch.mode(j) * C(j, i) * std::conj(ch.mode(i));
        const double occ = p.real();
        for (Eigen::Index l = 0; l < L; ++l) {
            const double weight = std::norm(ch.mode(l));
            rate(l) += gamma * (weight * occ + occ * C(l, l).real() - std::norm(r(l)));
        }
    }
    return rate;
}

double velocity_expectation(const Eigen::MatrixXcd& C, const SingleParticleMatrices& matrices, const ModelSpec& spec) {
    const Eigen::VectorXd rate = density_rates(C, matrices, spec.gamma);
    const Eigen::Index L = rate.size();
    double v = 0.0;
    for (Eigen::Index l = 0; l < L; ++l) v += static_cast<double>(l + 1) * rate(l);
    return 2.0 * v / static_cast<double>(L);
}

double velocity_expectation(const SlaterState& state, const ModelSpec& spec) {
    if (state.sites() != spec.L) throw std::invalid_argument("velocity_expectation: state has wrong L");
    return velocity_expectation(correlation_matrix(state), build_single_particle(spec), spec);
}

double mean_position(std::span<const double> density) {
    if (density.empty()) return 0.0;
    double x = 0.0;
    for (std::size_t l = 0; l < density.size(); ++l) x += static_cast<double>(l + 1) * density[l];
    return 2.0 * x / static_cast<double>(density.size());
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    check_same_size(x.size(), y.size(), "fit_line");
    const auto n = x.size();
    if (n < 2) throw std::invalid_argument("fit_line: need at least 2 points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw std::invalid_argument("fit_line: x values are all equal");

    LineFit f;
    f.points = static_cast<int>(n);
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = y[i] - f.intercept - f.slope * x[i];
        sse += e * e;
    }
    f.r2 = syy > 0.0 ? std::clamp(1.0 - sse / syy, 0.0, 1.0) : 1.0;
    if (n > 2) {
        const double s2 = sse / static_cast<double>(n - 2);
        f.slope_se = std::sqrt(s2 / sxx);
        f.intercept_se = std::sqrt(s2 * (1.0 / static_cast<double>(n) + mx * mx / sxx));
    }
    return f;
}

VelocityFit fit_velocity_slope(std::span<const double> t_over_L, std::span<const double> v, double lo, double hi) {
    check_same_size(t_over_L.size(), v.size(), "fit_velocity_slope");
    std::vector<double> x, y;
    for (std::size_t i = 0; i < t_over_L.size(); ++i) {
        if (t_over_L[i] >= lo && t_over_L[i] <= hi && std::isfinite(v[i])) {
            x.push_back(t_over_L[i]);
            y.push_back(v[i]);
        }
    }
    if (x.size() < 4) throw std::invalid_argument("fit_velocity_slope: fewer than 4 points in the fit window");
    VelocityFit f;
    f.line = fit_line(x, y);
    f.v0 = f.line.intercept;
    f.slope = f.line.slope;
    f.v0_from_slope = std::copysign(std::sqrt(std::max(0.0, f.slope) / 2.0), f.v0);
    return f;
}

std::pair<double, double> default_velocity_window(double tc_estimate) {
    return {0.1, 0.6 * tc_estimate};
}

double estimate_v0_from_pbc(std::span<const double> n_k) {
    const int L = static_cast<int>(n_k.size());
    if (L == 0) throw std::invalid_argument("estimate_v0_from_pbc: empty momentum distribution");
    const Eigen::VectorXd k = momentum_grid(L);
    double v = 0.0;
    for (int m = 0; m < L; ++m) v += n_k[static_cast<std::size_t>(m)] * (-2.0 * std::sin(k(m)));
    return 2.0 * v / L;
}

double predict_tc(double v0) {
    if (v0 == 0.0 || !std::isfinite(v0)) throw std::invalid_argument("predict_tc: v0 must be finite and nonzero");
    return 1.0 / (2.0 * std::abs(v0));
}

std::optional<double> detect_transition(std::span<const double> t_over_L, std::span<const double> f_skin,
                                        double threshold) {
    check_same_size(t_over_L.size(), f_skin.size(), "detect_transition");
    for (std::size_t k = 0; k < f_skin.size(); ++k) {
        if (!(f_skin[k] >= threshold)) continue;
        if (k == 0 || f_skin[k] == threshold) return t_over_L[k];
        const double f0 = f_skin[k - 1], f1 = f_skin[k];
        const double x0 = t_over_L[k - 1], x1 = t_over_L[k];
        return x0 + (threshold - f0) / (f1 - f0) * (x1 - x0);
    }
    return std::nullopt;
}

SeriesPeak series_max(std::span<const double> times, std::span<const double> values) {
    check_same_size(times.size(), values.size(), "series_max");
    SeriesPeak p;
    p.value = -std::numeric_limits<double>::infinity();
    bool found = false;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (std::isfinite(values[i]) && values[i] > p.value) {
            p = {values[i], times[i], i};
            found = true;
        }
    }
    if (!found) throw std::invalid_argument("series_max: no finite values");
    return p;
}

namespace {

SeriesPeak column_max(const EnsembleSeries& series, std::string_view name) {
    const auto& stat = series.at(name);
    std::vector<double> v(stat.mean.col(0).data(), stat.mean.col(0).data() + stat.mean.rows());
    return series_max(series.times, v);
}

} // namespace

SeriesPeak max_entropy(const EnsembleSeries& series) { return column_max(series, "S_half"); }

SeriesPeak max_mutual_information(const EnsembleSeries& series) { return column_max(series, "I_AB"); }

ScalingFit fit_log_scaling(std::span<const double> L_values, std::span<const double> S) {
    check_same_size(L_values.size(), S.size(), "fit_log_scaling");
    if (L_values.size() < 3) throw std::invalid_argument("fit_log_scaling: need at least 3 sizes");
    std::vector<double> lnL;
    for (double L : L_values) {
        if (!(L > 0.0)) throw std::invalid_argument("fit_log_scaling: sizes must be positive");
        lnL.push_back(std::log(L));
    }
    if (std::all_of(L_values.begin(), L_values.end(), [&](double L) { return L == L_values.front(); }))
        throw std::invalid_argument("fit_log_scaling: all sizes are equal");
    const LineFit line = fit_line(lnL, S);
    ScalingFit f;
    f.a = line.slope;
    f.b = line.intercept;
    f.a_se = line.slope_se;
    f.b_se = line.intercept_se;
    f.r2 = line.r2;
    f.L_values.assign(L_values.begin(), L_values.end());
    return f;
}

double chord_distance(int l, int L) {
    return static_cast<double>(L) / std::numbers::pi * std::sin(std::numbers::pi * l / L);
}

DecayComparison compare_decay(std::span<const double> chord, std::span<const double> C) {
    check_same_size(chord.size(), C.size(), "compare_decay");
    std::vector<double> x, lnx, lny;
    for (std::size_t i = 0; i < C.size(); ++i) {
        if (!(C[i] > 0.0) || !(chord[i] > 0.0)) continue;
        x.push_back(chord[i]);
        lnx.push_back(std::log(chord[i]));
        lny.push_back(std::log(C[i]));
    }
    if (x.size() < 3) throw std::invalid_argument("compare_decay: fewer than 3 positive correlation values");
    return {fit_line(lnx, lny), fit_line(x, lny)};
}

double interpolate(std::span<const double> x, std::span<const double> y, double xq) {
    check_same_size(x.size(), y.size(), "interpolate");
    if (x.empty()) throw std::invalid_argument("interpolate: empty series");
    if (xq <= x.front()) return y.front();
    if (xq >= x.back()) return y.back();
    const auto it = std::upper_bound(x.begin(), x.end(), xq);
    const auto k = static_cast<std::size_t>(it - x.begin());
    const double w = (xq - x[k - 1]) / (x[k] - x[k - 1]);
    return (1.0 - w) * y[k - 1] + w * y[k];
}

PhaseDiagram sweep_phase_diagram(const SweepRequest& request, const SweepPointFn& on_point) {
    if (request.W_values.empty()) throw std::invalid_argument("W_values: sweep needs at least one W");
    if (request.t_over_L.empty()) throw std::invalid_argument("t_over_L: sweep needs at least one grid time");
    EngineConfig config = request.config;
    config.observables.entropy = true;
    config.observables.f_skin = true;

    PhaseDiagram out;
    out.W_values = request.W_values;
    out.t_over_L = request.t_over_L;
    out.S_half.resize(static_cast<Eigen::Index>(request.W_values.size()),
                      static_cast<Eigen::Index>(request.t_over_L.size()));

    for (std::size_t w = 0; w < request.W_values.size(); ++w) {
        ModelSpec spec = request.base;
        spec.W = request.W_values[w];
        if (spec.disorder == Disorder::none) spec.disorder = Disorder::quasiperiodic;
        const EnsembleSeries series = run_ensemble(spec, config, request.initial, request.n_traj, request.workers);

        std::vector<double> tL;
        for (double t : series.times) tL.push_back(t / spec.L);
        const auto& S = series.at("S_half").mean;
        const auto& F = series.at("f_skin").mean;
        const std::vector<double> s(S.data(), S.data() + S.rows());
        const std::vector<double> f(F.data(), F.data() + F.rows());
        for (std::size_t j = 0; j < request.t_over_L.size(); ++j)
            out.S_half(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(j)) =
                interpolate(tL, s, request.t_over_L[j]);
        out.tc.push_back(detect_transition(tL, f));
        if (on_point) on_point(w, series);
    }
    return out;
}

} // namespace skinsim
