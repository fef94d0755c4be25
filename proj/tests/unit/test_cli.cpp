#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <unistd.h>

#include "skinsim/config.hpp"
#include "skinsim/io.hpp"
#include "skinsim/runner.hpp"

using namespace skinsim;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("skinsim_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& body) {
    const fs::path p = dir / name;
    std::ofstream(p) << body;
    return p;
}

int run(const fs::path& config, const fs::path& out, int workers, std::ostream* log = nullptr) {
    RunOptions o;
    o.workers = workers;
    o.out = out;
    o.log = log;
    return run_config_file(config.string(), o);
}

const char* minimal = R"({"schema_version": 1, "mode": "ensemble", "L": 16, "n_traj": 8, "t_max": 8})";

} // namespace

TEST_CASE("number formatting round-trips") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(-2.0) == "-2");
    CHECK(format_number(1e-300) == "1e-300");
    CHECK(format_number(std::nan("")) == "nan");
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        const double x = u(gen) * std::pow(10.0, static_cast<int>(gen() % 40) - 20);
        CHECK(parse_number(format_number(x)) == x);
    }
    CHECK_THROWS_AS(parse_number("1.5x"), std::invalid_argument);
}

TEST_CASE("csv reader") {
    std::istringstream in("a,b\n1,2\n3,\n");
    const auto t = read_csv(in);
    CHECK(t.column("a") == std::vector<double>{1, 3});
    CHECK(std::isnan(t.column("b")[1]));
    CHECK_THROWS_AS(t.column("c"), std::out_of_range);
    std::istringstream bad("a,b\n1\n");
    CHECK_THROWS_AS(read_csv(bad), std::invalid_argument);
}

TEST_CASE("config parsing") {
    const auto c = parse_config_text(minimal);
    CHECK(c.mode == Mode::ensemble);
    CHECK(c.model.L == 16);
    CHECK(c.n_traj == 8);
    CHECK(c.engine.t_max == 8.0);
    CHECK(c.output == "ensemble");

    auto field_of = [](const std::string& text) {
        try {
            parse_config_text(text);
        } catch (const ConfigError& e) {
            const std::string msg = e.what();
            return msg.substr(0, msg.find(':'));
        }
        return std::string("<accepted>");
    };
    CHECK(field_of(R"({"mode": "ensemble"})") == "schema_version");
    CHECK(field_of(R"({"schema_version": 2})") == "schema_version");
    CHECK(field_of(R"({"schema_version": 1, "Lsize": 4})") == "Lsize");
    CHECK(field_of(R"({"schema_version": 1, "L": "big"})") == "L");
    CHECK(field_of(R"({"schema_version": 1, "L": 1})") == "L");
    CHECK(field_of(R"({"schema_version": 1, "dt": 2.0})") == "dt");
    CHECK(field_of(R"({"schema_version": 1, "mode": "dance"})") == "mode");
    CHECK(field_of(R"({"schema_version": 1, "bc": "twisted"})") == "bc");
    CHECK(field_of(R"({"schema_version": 1, "observables": ["S_half", "spin"]})") == "observables");
    CHECK(field_of(R"({"schema_version": 1, "mode": "sweep"})") == "W_values");
    CHECK(field_of(R"({"schema_version": 1, "mode": "liouvillian", "L": 10})") == "N");
    CHECK(field_of(R"({"schema_version": 1, "mode": "circuit", "p": 2})") == "p");
    CHECK(field_of(R"({"schema_version": 1, "n_traj": 0})") == "n_traj");
    CHECK(field_of("{not json") == "config");
}

TEST_CASE("resolved config round-trips") {
    for (const char* text :
         {minimal, R"({"schema_version": 1, "mode": "sweep", "L": 8, "W_values": [0, 1.5], "t_max": 4})",
          R"({"schema_version": 1, "mode": "circuit", "L": 6, "modules": 4, "shots": 3})",
          R"({"schema_version": 1, "mode": "liouvillian", "L": 4, "t_max": 1})",
          R"({"schema_version": 1, "mode": "pbc-steady", "L": 8, "disorder": "uniform", "W": 2})"}) {
        const auto a = parse_config_text(text);
        const auto j = to_json(a);
        const auto b = parse_config(j);
        CHECK(to_json(b).dump() == j.dump());
        nlohmann::ordered_json meta;
        meta["config"] = j;
        meta["wall_time_s"] = 1.0;
        CHECK(to_json(parse_config(meta)).dump() == j.dump());
    }
    const auto pbc = parse_config_text(R"({"schema_version": 1, "mode": "pbc-steady", "L": 8})");
    CHECK(pbc.model.bc == Boundary::periodic);
    CHECK(pbc.engine.observables.momentum);
}

TEST_CASE("ensemble run writes the documented schema") {
    TempDir tmp;
    const auto cfg = write_config(tmp.path, "min.json", minimal);
    REQUIRE(run(cfg, tmp.path / "a", 1) == exit_ok);
    const std::string series = slurp(tmp.path / "a" / "series.csv");
    CHECK(series.rfind("t,t_over_L,S_half_mean,S_half_se,f_skin_mean,f_skin_se,", 0) == 0);
    CHECK(fs::exists(tmp.path / "a" / "density.csv"));
    CHECK(fs::exists(tmp.path / "a" / "fits.json"));
    const auto meta = nlohmann::json::parse(slurp(tmp.path / "a" / "meta.json"));
    CHECK(meta["status"] == "complete");
    CHECK(meta["seed"] == 1);
    CHECK(meta.contains("wall_time_s"));
    CHECK(meta["code_version"] == std::string(code_version));

    SUBCASE("re-runs are byte-identical for any worker count") {
        REQUIRE(run(cfg, tmp.path / "b", 3) == exit_ok);
        CHECK(slurp(tmp.path / "b" / "series.csv") == series);
        CHECK(slurp(tmp.path / "b" / "density.csv") == slurp(tmp.path / "a" / "density.csv"));
    }
    SUBCASE("meta.json re-ingested reproduces the outputs") {
        REQUIRE(run(tmp.path / "a" / "meta.json", tmp.path / "c", 2) == exit_ok);
        CHECK(slurp(tmp.path / "c" / "series.csv") == series);
        CHECK(slurp(tmp.path / "c" / "density.csv") == slurp(tmp.path / "a" / "density.csv"));
    }
}

TEST_CASE("exit codes") {
    TempDir tmp;
    std::ostringstream log;
    const auto bad = write_config(tmp.path, "bad.json", R"({"schema_version": 1, "gamma": -1})");
    CHECK(run(bad, tmp.path / "bad", 1, &log) == exit_config);
    CHECK(log.str().find("gamma") != std::string::npos);
    CHECK(run(tmp.path / "missing.json", tmp.path / "missing", 1) == exit_config);

    log.str("");
    const auto odd = write_config(tmp.path, "odd.json",
                                  R"({"schema_version": 1, "L": 7, "n_traj": 3, "t_max": 1, "initial": "neel"})");
    CHECK(run(odd, tmp.path / "odd", 1, &log) == exit_numerical);
    CHECK(log.str().find("trajectory") != std::string::npos);
    CHECK(log.str().find("t = ") != std::string::npos);
    const auto meta = nlohmann::json::parse(slurp(tmp.path / "odd" / "meta.json"));
    CHECK(meta["status"] == "failed");
}

TEST_CASE("environment fallbacks") {
    TempDir tmp;
    const auto c = parse_config_text(R"({"schema_version": 1, "output": "sub"})");
    ::setenv("SKINSIM_OUT", tmp.path.c_str(), 1);
    ::setenv("SKINSIM_WORKERS", "5", 1);
    CHECK(resolve_output(c, {}) == tmp.path / "sub");
    CHECK(resolve_workers({}) == 5);
    RunOptions o;
    o.workers = 2;
    o.out = tmp.path / "x";
    CHECK(resolve_workers(o) == 2);
    CHECK(resolve_output(c, o) == tmp.path / "x");
    ::setenv("SKINSIM_WORKERS", "zero", 1);
    CHECK_THROWS_AS(resolve_workers({}), ConfigError);
    ::unsetenv("SKINSIM_OUT");
    ::unsetenv("SKINSIM_WORKERS");
}

TEST_CASE("sweep with manifest and analysis") {
    TempDir tmp;
    const auto cfg = write_config(tmp.path, "sweep.json", R"({"schema_version": 1, "mode": "sweep", "L": 8,
        "W_values": [0, 2], "t_over_L_values": [0, 0.5, 1], "n_traj": 4, "t_max": 8, "record_every": 2})");
    REQUIRE(run(cfg, tmp.path / "s", 1) == exit_ok);
    const auto manifest = nlohmann::json::parse(slurp(tmp.path / "s" / "manifest.json"));
    CHECK(manifest["complete"] == true);
    CHECK(manifest["points"].size() == 2);
    const std::string phase = slurp(tmp.path / "s" / "phase.csv");
    CHECK(phase.rfind("W,0,0.5,1\n0,0,", 0) == 0);
    CHECK(fs::exists(tmp.path / "s" / "W001" / "series.csv"));
    CHECK(slurp(tmp.path / "s" / "transition.csv").rfind("W,tc\n", 0) == 0);

    fs::remove(tmp.path / "s" / "fits.json");
    CHECK(run_analyze(tmp.path / "s", nullptr) == exit_ok);
    const auto fits = nlohmann::json::parse(slurp(tmp.path / "s" / "fits.json"));
    CHECK(fits["kind"] == "sweep");
    REQUIRE(fits["points"].size() == 2);
    CHECK(fits["points"][1]["W"] == 2.0);
    CHECK(fits["points"][0]["L"] == 8);
    CHECK(fits["points"][0].contains("velocity_fit"));
    CHECK(fits["points"][0].contains("tc"));
    CHECK(run_analyze(tmp.path / "nowhere", nullptr) == exit_config);
}

TEST_CASE("size scan writes per-size directories and entropy scaling") {
    TempDir tmp;
    const auto cfg = write_config(tmp.path, "sizes.json", R"({"schema_version": 1, "L_values": [8, 12, 16],
        "n_traj": 2, "t_max": 24, "record_every": 4, "observables": ["S_half", "f_skin"]})");
    REQUIRE(run(cfg, tmp.path / "z", 1) == exit_ok);
    CHECK(fs::exists(tmp.path / "z" / "L12" / "series.csv"));
    const auto fits = nlohmann::json::parse(slurp(tmp.path / "z" / "fits.json"));
    CHECK(fits["kind"] == "sizes");
    CHECK(fits.contains("entropy_scaling"));
}

TEST_CASE("trajectory, pbc-steady, liouvillian and circuit modes") {
    TempDir tmp;
    SUBCASE("trajectory") {
        const auto cfg = write_config(tmp.path, "t.json", R"({"schema_version": 1, "mode": "trajectory", "L": 8,
            "t_max": 2, "trajectory_index": 3, "observables": ["S_half", "density", "correlation"]})");
        REQUIRE(run(cfg, tmp.path / "t", 1) == exit_ok);
        CHECK(slurp(tmp.path / "t" / "series.csv").rfind("t,t_over_L,S_half_mean,S_half_se,jumps_mean,jumps_se\n", 0) == 0);
        CHECK(slurp(tmp.path / "t" / "correlation.csv").rfind("t,t_over_L,l,mean,se\n", 0) == 0);
    }
    SUBCASE("pbc-steady") {
        const auto cfg = write_config(tmp.path, "p.json", R"({"schema_version": 1, "mode": "pbc-steady", "L": 8,
            "n_traj": 4, "t_max": 10})");
        REQUIRE(run(cfg, tmp.path / "p", 1) == exit_ok);
        CHECK(fs::exists(tmp.path / "p" / "momentum.csv"));
        const auto t = read_csv_file((tmp.path / "p" / "steady_momentum.csv").string());
        CHECK(t.rows.size() == 8);
        const auto fits = nlohmann::json::parse(slurp(tmp.path / "p" / "fits.json"));
        CHECK(fits.contains("v0_pbc"));
    }
    SUBCASE("liouvillian") {
        const auto cfg = write_config(tmp.path, "l.json", R"({"schema_version": 1, "mode": "liouvillian", "L": 4,
            "t_max": 2, "record_every": 10})");
        REQUIRE(run(cfg, tmp.path / "l", 1) == exit_ok);
        const auto spec = read_csv_file((tmp.path / "l" / "spectrum.csv").string());
        CHECK(spec.header == std::vector<std::string>{"re", "im"});
        CHECK(spec.rows.size() == 36);
        const auto series = read_csv_file((tmp.path / "l" / "series.csv").string());
        for (double tr : series.column("trace_mean")) CHECK(tr == doctest::Approx(1.0).epsilon(1e-8));
        const auto fits = nlohmann::json::parse(slurp(tmp.path / "l" / "fits.json"));
        CHECK(fits["steady_state"]["near_zero"] == 1);
        CHECK(run_analyze(tmp.path / "l", nullptr) == exit_ok);
        CHECK(nlohmann::json::parse(slurp(tmp.path / "l" / "fits.json")) == fits);
    }
    SUBCASE("circuit") {
        const auto cfg = write_config(tmp.path, "c.json", R"({"schema_version": 1, "mode": "circuit", "L": 6,
            "modules": 6, "shots": 20, "checkpoints": [0, 3, 6]})");
        REQUIRE(run(cfg, tmp.path / "c", 2) == exit_ok);
        const auto shots = read_csv_file((tmp.path / "c" / "shots.csv").string());
        CHECK(shots.header.size() == 7);
        CHECK(shots.rows.size() == 20);
        const auto series = read_csv_file((tmp.path / "c" / "series.csv").string());
        CHECK(series.column("modules") == std::vector<double>{0, 3, 6});
        const auto fits = nlohmann::json::parse(slurp(tmp.path / "c" / "fits.json"));
        CHECK(fits["down_count_exact"] == true);
    }
}

TEST_CASE("checked-in recipes parse and validate") {
    const fs::path dir = fs::path(SKINSIM_RECIPE_DIR);
    std::ifstream in(dir / "index.json");
    REQUIRE(in);
    const auto index = nlohmann::ordered_json::parse(in);
    CHECK(index.size() >= 8);
    for (const auto& [name, entry] : index.items()) {
        CAPTURE(name);
        CHECK(entry.contains("target"));
        CHECK(entry.contains("check"));
        const auto c = load_config((dir / (name + ".json")).string());
        CHECK_NOTHROW(validate(c));
        CHECK(c.label == name);
    }
}
