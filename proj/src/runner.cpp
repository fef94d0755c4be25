// runner.cpp: Mode dispatch, artifact layout and exit-code mapping

#include "skinsim/runner.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "skinsim/analysis.hpp"
#include "skinsim/circuit.hpp"
#include "skinsim/io.hpp"
#include "skinsim/liouvillian.hpp"

namespace skinsim {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("output: cannot write " + path.string());
    out << content;
    if (!out) throw ConfigError("output: write failed for " + path.string());
}

void write_json(const fs::path& path, const Json& doc) { write_file(path, doc.dump(2) + "\n"); }

Json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("input: cannot read " + path.string());
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("input: malformed JSON in " + path.string() + " (" + e.what() + ")");
    }
}

void make_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("output: cannot create " + dir.string() + " (" + ec.message() + ")");
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::vector<double> iota_keys(int n, int first) {
    std::vector<double> k(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) k[static_cast<std::size_t>(i)] = first + i;
    return k;
}

void write_ensemble_outputs(const fs::path& dir, const EnsembleSeries& series) {
    make_dir(dir);
    {
        std::ostringstream s;
        write_series_csv(s, series);
        write_file(dir / "series.csv", s.str());
    }
    const int L = series.L;
    if (const auto* d = series.find("density")) {
        std::ostringstream s;
        write_profile_csv(s, series, "density", "site", iota_keys(static_cast<int>(d->mean.cols()), 1));
        write_file(dir / "density.csv", s.str());
    }
    if (const auto* c = series.find("correlation")) {
        std::ostringstream s;
        write_profile_csv(s, series, "correlation", "l", iota_keys(static_cast<int>(c->mean.cols()), 1));
        write_file(dir / "correlation.csv", s.str());
    }
    if (series.find("momentum")) {
        const Eigen::VectorXd k = momentum_grid(L);
        std::ostringstream s;
        write_profile_csv(s, series, "momentum", "k", std::vector<double>(k.data(), k.data() + k.size()));
        write_file(dir / "momentum.csv", s.str());
    }
}

struct Manifest {
    std::string kind;
    std::string key;
    std::size_t total = 0;
    Json points = Json::array();

    void add(const fs::path& root, std::size_t index, double value, const std::string& sub) {
        Json p;
        p["index"] = index;
        p[key] = value;
        p["dir"] = sub;
        points.push_back(std::move(p));
        save(root);
    }
    void save(const fs::path& root) const {
        Json m;
        m["kind"] = kind;
        m["total"] = total;
        m["complete"] = points.size() == total;
        m["points"] = points;
        write_json(root / "manifest.json", m);
    }
};

std::string point_dir(char prefix, std::size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%c%03zu", prefix, index);
    return buf;
}

void log_line(std::ostream* log, const std::string& text) {
    if (log) *log << "skinsim: " << text << std::endl;
}

void run_trajectory_mode(const RunConfig& c, const fs::path& dir) {
    const ModelSpec spec = for_trajectory(c.model, c.trajectory_index);
    const SlaterState psi0 = make_initial(c.initial, spec, c.engine.seed, c.trajectory_index);
    const auto records = run_trajectory(spec, c.engine, psi0, c.trajectory_index);
    write_ensemble_outputs(dir, trajectory_series(records, c.engine.observables, spec.L));
}

void run_ensemble_mode(const RunConfig& c, const fs::path& dir, int workers, std::ostream* log) {
    if (c.L_values.empty()) {
        write_ensemble_outputs(dir, run_ensemble(c.model, c.engine, c.initial, c.n_traj, workers));
        return;
    }
    Manifest manifest{"sizes", "L", c.L_values.size()};
    manifest.save(dir);
    for (std::size_t i = 0; i < c.L_values.size(); ++i) {
        ModelSpec spec = c.model;
        spec.L = c.L_values[i];
        const auto sub = "L" + std::to_string(spec.L);
        write_ensemble_outputs(dir / sub, run_ensemble(spec, c.engine, c.initial, c.n_traj, workers));
        manifest.add(dir, i, spec.L, sub);
        log_line(log, "completed L=" + std::to_string(spec.L));
    }
}

void run_sweep_mode(const RunConfig& c, const fs::path& dir, int workers, std::ostream* log) {
    SweepRequest r;
    r.base = c.model;
    r.config = c.engine;
    r.initial = c.initial;
    r.W_values = c.W_values;
    r.t_over_L = c.t_over_L_values;
    r.n_traj = c.n_traj;
    r.workers = workers;
    Manifest manifest{"sweep", "W", c.W_values.size()};
    manifest.save(dir);
    const auto pd = sweep_phase_diagram(r, [&](std::size_t w, const EnsembleSeries& series) {
        const auto sub = point_dir('W', w);
        write_ensemble_outputs(dir / sub, series);
        manifest.add(dir, w, c.W_values[w], sub);
        log_line(log, "completed W=" + format_number(c.W_values[w]));
    });

    std::ostringstream phase;
    phase << "W";
    for (double t : pd.t_over_L) phase << ',' << format_number(t);
    phase << '\n';
    for (std::size_t w = 0; w < pd.W_values.size(); ++w) {
        phase << format_number(pd.W_values[w]);
        for (Eigen::Index j = 0; j < pd.S_half.cols(); ++j)
            phase << ',' << format_number(pd.S_half(static_cast<Eigen::Index>(w), j));
        phase << '\n';
    }
    write_file(dir / "phase.csv", phase.str());

    std::ostringstream tr;
    tr << "W,tc\n";
    for (std::size_t w = 0; w < pd.W_values.size(); ++w)
        tr << format_number(pd.W_values[w]) << ',' << (pd.tc[w] ? format_number(*pd.tc[w]) : "") << '\n';
    write_file(dir / "transition.csv", tr.str());
}

void run_pbc_mode(const RunConfig& c, const fs::path& dir, int workers) {
    const auto series = run_ensemble(c.model, c.engine, c.initial, c.n_traj, workers);
    write_ensemble_outputs(dir, series);
    const auto& nk = series.at("momentum");
    const double start = (1.0 - c.steady_fraction) * c.engine.t_max;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(nk.mean.cols());
    int count = 0;
    for (std::size_t i = 0; i < series.times.size(); ++i)
        if (series.times[i] >= start - 1e-9) {
            mean += nk.mean.row(static_cast<Eigen::Index>(i)).transpose();
            ++count;
        }
    mean /= count;
    const Eigen::VectorXd k = momentum_grid(c.model.L);
    std::ostringstream s;
    s << "k,n_k\n";
    for (Eigen::Index m = 0; m < k.size(); ++m) s << format_number(k(m)) << ',' << format_number(mean(m)) << '\n';
    write_file(dir / "steady_momentum.csv", s.str());
}

void run_liouvillian_mode(const RunConfig& c, const fs::path& dir, std::ostream* log) {
    const auto sector = build_sector(c.model, c.N, c.max_dimension);
    log_line(log, "sector D=" + std::to_string(sector.dimension()) + ", diagonalizing " +
                      std::to_string(sector.dimension() * sector.dimension()) + "-dimensional generator");
    const Eigensystem eig = eigensystem(sector);
    const SteadyState ss = steady_state(sector, eig);

    {
        std::ostringstream s;
        write_spectrum_csv(s, eig.values);
        write_file(dir / "spectrum.csv", s.str());
    }

    const long long steps = step_count(c.engine);
    const int every = resolved_record_every(c.engine);
    std::vector<double> times;
    for (long long n = 0; n <= steps; n += every) times.push_back(static_cast<double>(n) * c.engine.dt);
    const SlaterState psi0 = make_initial(c.initial, c.model, c.engine.seed, 0);
    const auto rho0 = pure_density(sector_amplitudes(sector.basis, psi0));
    const auto evo = evolve_density(sector, eig, rho0, times);

    const int L = c.model.L;
    const std::uint32_t skin = c.N >= 32 ? 0xffffffffu : ((1u << c.N) - 1u);
    const int skin_index = sector.basis.index[skin];
    EnsembleSeries series;
    series.L = L;
    series.n_trajectories = 0;
    series.times = times;
    const auto rows = static_cast<Eigen::Index>(times.size());
    SeriesStat fsk{Eigen::MatrixXd(rows, 1), Eigen::MatrixXd::Zero(rows, 1)};
    SeriesStat xs = fsk, trace = fsk;
    SeriesStat dens{Eigen::MatrixXd(rows, L), Eigen::MatrixXd::Zero(rows, L)};
    for (std::size_t i = 0; i < times.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        const Eigen::VectorXd n = site_densities(sector.basis, evo.rho[i]);
        dens.mean.row(r) = n.transpose();
        fsk.mean(r, 0) = evo.rho[i](skin_index, skin_index).real();
        xs.mean(r, 0) = mean_position(std::span<const double>(n.data(), static_cast<std::size_t>(n.size())));
        trace.mean(r, 0) = evo.rho[i].trace().real();
    }
    series.observables = {{"f_skin", fsk}, {"mean_position", xs}, {"trace", trace}, {"density", dens}};
    write_ensemble_outputs(dir, series);

    Json f;
    f["D"] = sector.dimension();
    f["rcond"] = eig.rcond;
    f["used_fallback"] = evo.used_fallback;
    double max_re = -std::numeric_limits<double>::infinity(), gap = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
        max_re = std::max(max_re, eig.values(i).real());
        if (std::abs(eig.values(i)) >= 1e-8) gap = std::min(gap, -eig.values(i).real());
    }
    f["max_real_eigenvalue"] = max_re;
    f["spectral_gap"] = gap;
    Json s;
    s["eigenvalue_re"] = ss.eigenvalue.real();
    s["eigenvalue_im"] = ss.eigenvalue.imag();
    s["near_zero"] = ss.near_zero;
    s["degenerate"] = ss.degenerate;
    s["min_eigenvalue"] = ss.min_eigenvalue;
    const Eigen::VectorXd n = site_densities(sector.basis, ss.rho);
    s["density"] = std::vector<double>(n.data(), n.data() + n.size());
    s["f_skin"] = ss.rho(skin_index, skin_index).real();
    f["steady_state"] = s;
    write_json(dir / "fits.json", f);
}

void run_circuit_mode(const RunConfig& c, const fs::path& dir, int workers) {
    std::vector<std::vector<int>> final_records;
    const auto cs = run_circuit_ensemble(c.circuit, c.checkpoints, workers, &final_records);
    const int L = c.circuit.L;
    const double N = cs.shots;
    auto binomial_se = [&](double mean_pm) { return N > 1 ? std::sqrt(std::max(0.0, 1.0 - mean_pm * mean_pm) / (N - 1)) : 0.0; };

    std::ostringstream s;
    s << "t,t_over_L,modules,f_skin_mean,f_skin_se,S_half_mean,S_half_se,down_min,down_max\n";
    for (std::size_t i = 0; i < cs.modules.size(); ++i) {
        const double f = cs.f_skin[i];
        const double fse = N > 1 ? std::sqrt(f * (1.0 - f) / (N - 1)) : 0.0;
        s << format_number(cs.modules[i] * c.circuit.delta_t) << ',' << format_number(cs.t_over_L[i]) << ','
          << cs.modules[i] << ',' << format_number(f) << ',' << format_number(fse) << ','
          << format_number(cs.entropy_mean[i]) << ',' << format_number(cs.entropy_se[i]) << ',' << cs.down_min[i]
          << ',' << cs.down_max[i] << '\n';
    }
    write_file(dir / "series.csv", s.str());

    std::ostringstream sp;
    sp << "t,t_over_L,qubit,mean,se\n";
    for (std::size_t i = 0; i < cs.modules.size(); ++i)
        for (int q = 0; q < L; ++q) {
            const double m = cs.spin(static_cast<Eigen::Index>(i), q);
            sp << format_number(cs.modules[i] * c.circuit.delta_t) << ',' << format_number(cs.t_over_L[i]) << ','
               << q + 1 << ',' << format_number(m) << ',' << format_number(binomial_se(m)) << '\n';
        }
    write_file(dir / "spin.csv", sp.str());

    std::ostringstream sh;
    sh << "shot";
    for (int q = 1; q <= L; ++q) sh << ",q" << q;
    sh << '\n';
    for (std::size_t j = 0; j < final_records.size(); ++j) {
        sh << j;
        for (int v : final_records[j]) sh << ',' << v;
        sh << '\n';
    }
    write_file(dir / "shots.csv", sh.str());

    Json f;
    f["estimator"] = "f_skin = 0.5 crossing";
    f["f_skin_final"] = cs.f_skin.back();
    f["tc"] = optional_number(detect_transition(cs.t_over_L, cs.f_skin));
    bool exact = true;
    for (std::size_t i = 0; i < cs.modules.size(); ++i)
        exact = exact && cs.down_min[i] == L / 2 && cs.down_max[i] == L / 2;
    f["down_count_exact"] = exact;
    const Eigen::VectorXd last = cs.spin.row(cs.spin.rows() - 1).transpose();
    f["final_spin"] = std::vector<double>(last.data(), last.data() + last.size());
    write_json(dir / "fits.json", f);
}

// Per-series fits shared by every engine-mode directory.
Json fit_series(const fs::path& series_csv) {
    const CsvTable t = read_csv_file(series_csv.string());
    if (!t.has("t") || !t.has("t_over_L")) throw ConfigError("input: " + series_csv.string() + " lacks t columns");
    const auto time = t.column("t");
    const auto tL = t.column("t_over_L");
    Json p;
    for (std::size_t i = 0; i < time.size(); ++i)
        if (tL[i] > 0.0) {
            p["L"] = std::lround(time[i] / tL[i]);
            break;
        }
    std::optional<double> tc, tc_half;
    if (t.has("f_skin_mean")) {
        const auto f = t.column("f_skin_mean");
        tc = detect_transition(tL, f);
        const std::size_t tail = std::max<std::size_t>(1, f.size() / 10);
        double plateau = 0.0;
        for (std::size_t i = f.size() - tail; i < f.size(); ++i) plateau += f[i];
        plateau /= static_cast<double>(tail);
        p["tc"] = optional_number(tc);
        p["f_skin_plateau"] = plateau;
        if (plateau > 0.0) tc_half = detect_transition(tL, f, 0.5 * plateau);
        p["tc_half_plateau"] = optional_number(tc_half);
    }
    if (t.has("velocity_mean")) {
        const auto v = t.column("velocity_mean");
        const double anchor = tc ? *tc : tc_half ? *tc_half : tL.back();
        const auto [lo, hi] = default_velocity_window(anchor);
        try {
            const auto fit = fit_velocity_slope(tL, v, lo, hi);
            Json vf;
            vf["window"] = {lo, hi};
            vf["v0"] = fit.v0;
            vf["v0_se"] = fit.line.intercept_se;
            vf["slope"] = fit.slope;
            vf["slope_se"] = fit.line.slope_se;
            vf["v0_from_slope"] = fit.v0_from_slope;
            vf["r2"] = fit.line.r2;
            vf["points"] = fit.line.points;
            p["velocity_fit"] = vf;
        } catch (const std::invalid_argument& e) {
            p["velocity_fit"] = Json{{"error", e.what()}};
        }
    }
    if (t.has("S_half_mean")) {
        const auto S = t.column("S_half_mean");
        const auto peak = series_max(tL, S);
        p["S_max"] = peak.value;
        p["t_over_L_at_S_max"] = peak.t;
        p["S_final"] = S.back();
    }
    return p;
}

} // namespace

int resolve_workers(const RunOptions& options) {
    if (options.workers) {
        if (*options.workers < 1) throw ConfigError("workers: must be >= 1");
        return *options.workers;
    }
    if (const char* env = std::getenv("SKINSIM_WORKERS"); env && *env) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (*end != '\0' || v < 1 || v > 4096) throw ConfigError("SKINSIM_WORKERS: expected a positive integer");
        return static_cast<int>(v);
    }
    return 1;
}

fs::path resolve_output(const RunConfig& config, const RunOptions& options) {
    if (options.out) return *options.out;
    fs::path root = fs::current_path();
    if (const char* env = std::getenv("SKINSIM_OUT"); env && *env) root = env;
    return root / config.output;
}

void execute(const RunConfig& c, const fs::path& dir, int workers, std::ostream* log) {
    make_dir(dir);
    const auto started = std::chrono::steady_clock::now();
    Json meta;
    meta["config"] = to_json(c);
    meta["seed"] = c.mode == Mode::circuit ? c.circuit.seed : c.engine.seed;
    meta["code_version"] = std::string(code_version);
    meta["workers"] = workers;
    meta["status"] = "running";
    write_json(dir / "meta.json", meta);

    log_line(log, std::string(to_string(c.mode)) + " -> " + dir.string());
    try {
        switch (c.mode) {
        case Mode::trajectory: run_trajectory_mode(c, dir); break;
        case Mode::ensemble: run_ensemble_mode(c, dir, workers, log); break;
        case Mode::sweep: run_sweep_mode(c, dir, workers, log); break;
        case Mode::pbc_steady: run_pbc_mode(c, dir, workers); break;
        case Mode::liouvillian: run_liouvillian_mode(c, dir, log); break;
        case Mode::circuit: run_circuit_mode(c, dir, workers); break;
        case Mode::analyze: analyze_directory(c.input); break;
        }
        if (c.mode != Mode::liouvillian && c.mode != Mode::circuit && c.mode != Mode::analyze) analyze_directory(dir);
    } catch (const std::exception& e) {
        meta["status"] = "failed";
        meta["error"] = e.what();
        write_json(dir / "meta.json", meta);
        throw;
    }

    const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - started;
    meta["status"] = "complete";
    meta["wall_time_s"] = wall.count();
    write_json(dir / "meta.json", meta);
}

Json analyze_directory(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw ConfigError("input: " + dir.string() + " is not a directory");
    if (fs::exists(dir / "meta.json")) {
        const Json meta = read_json(dir / "meta.json");
        const std::string mode = meta.contains("config") ? meta.at("config").value("mode", std::string()) : "";
        if ((mode == "liouvillian" || mode == "circuit") && fs::exists(dir / "fits.json"))
            return read_json(dir / "fits.json");
    }

    Json out;
    out["estimator"] = "f_skin = 0.5 crossing";
    out["secondary_estimator"] = "f_skin = half of late-time plateau crossing";
    if (fs::exists(dir / "manifest.json")) {
        const Json manifest = read_json(dir / "manifest.json");
        const std::string kind = manifest.value("kind", "");
        const std::string key = kind == "sweep" ? "W" : "L";
        out["kind"] = kind;
        out["complete"] = manifest.value("complete", false);
        Json points = Json::array();
        std::vector<double> Ls, S04, S12;
        for (const auto& m : manifest.at("points")) {
            Json p = fit_series(dir / m.at("dir").get<std::string>() / "series.csv");
            Json entry;
            entry[key] = m.at(key);
            for (auto& item : p.items()) entry[item.key()] = item.value();
            points.push_back(entry);
            if (kind == "sizes") {
                const CsvTable t = read_csv_file((dir / m.at("dir").get<std::string>() / "series.csv").string());
                if (t.has("S_half_mean")) {
                    const auto tL = t.column("t_over_L");
                    const auto S = t.column("S_half_mean");
                    Ls.push_back(m.at("L").get<double>());
                    S04.push_back(interpolate(tL, S, 0.4));
                    S12.push_back(interpolate(tL, S, 1.2));
                }
            }
        }
        out["points"] = points;
        if (Ls.size() >= 3) {
            auto scaling = [&](const std::vector<double>& S) {
                const auto f = fit_log_scaling(Ls, S);
                return Json{{"a", f.a}, {"a_se", f.a_se}, {"b", f.b}, {"b_se", f.b_se}, {"r2", f.r2}};
            };
            out["entropy_scaling"] = Json{{"t_over_L_0.4", scaling(S04)}, {"t_over_L_1.2", scaling(S12)}};
        }
    } else if (fs::exists(dir / "series.csv")) {
        Json points = Json::array();
        points.push_back(fit_series(dir / "series.csv"));
        out["kind"] = "single";
        out["points"] = points;
    } else {
        throw ConfigError("input: " + dir.string() + " has neither manifest.json nor series.csv");
    }

    if (fs::exists(dir / "steady_momentum.csv")) {
        const CsvTable t = read_csv_file((dir / "steady_momentum.csv").string());
        const double v0 = estimate_v0_from_pbc(t.column("n_k"));
        out["v0_pbc"] = v0;
        out["tc_predicted"] = v0 != 0.0 ? Json(predict_tc(v0)) : Json(nullptr);
    }
    write_json(dir / "fits.json", out);
    return out;
}

int run_config_file(const std::string& path, const RunOptions& options) {
    try {
        const RunConfig config = load_config(path);
        const int workers = resolve_workers(options);
        const fs::path dir = resolve_output(config, options);
        execute(config, dir, workers, options.log);
        return exit_ok;
    } catch (const ConfigError& e) {
        if (options.log) *options.log << "config error: " << e.what() << std::endl;
        return exit_config;
    } catch (const std::exception& e) {
        if (options.log) *options.log << "numerical failure: " << e.what() << std::endl;
        return exit_numerical;
    }
}

int run_analyze(const fs::path& dir, std::ostream* log) {
    try {
        analyze_directory(dir);
        log_line(log, "wrote " + (dir / "fits.json").string());
        return exit_ok;
    } catch (const ConfigError& e) {
        if (log) *log << "config error: " << e.what() << std::endl;
        return exit_config;
    } catch (const std::exception& e) {
        if (log) *log << "analysis failure: " << e.what() << std::endl;
        return exit_numerical;
    }
}

} // namespace skinsim
