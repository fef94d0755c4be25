// config.cpp: Parsing, validation and resolution of run configurations

#include "skinsim/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "skinsim/liouvillian.hpp"

namespace skinsim {

namespace {

using Json = nlohmann::ordered_json;

const std::set<std::string, std::less<>> known_keys{
    "schema_version", "mode", "label", "output",
    "L", "J", "W", "alpha", "theta", "gamma", "bc", "disorder", "disorder_seed",
    "dt", "t_max", "record_every", "seed", "observables", "mi_block", "initial", "n_traj", "trajectory_index",
    "L_values", "W_values", "t_over_L_values", "steady_fraction", "N", "max_dimension",
    "delta_t", "p", "modules", "shots", "checkpoints", "input"};

[[noreturn]] void fail(std::string_view key, std::string_view what) {
    throw ConfigError(std::string(key) + ": " + std::string(what));
}

double get_number(const Json& doc, std::string_view key, double fallback) {
    const auto it = doc.find(key);
    if (it == doc.end()) return fallback;
    if (!it->is_number()) fail(key, "expected a number");
    return it->get<double>();
}

long long get_integer(const Json& doc, std::string_view key, long long fallback) {
    const auto it = doc.find(key);
    if (it == doc.end()) return fallback;
    if (it->is_number_integer()) return it->get<long long>();
    if (it->is_number_float()) {
        const double v = it->get<double>();
        if (std::nearbyint(v) == v && std::abs(v) < 9e15) return static_cast<long long>(v);
    }
    fail(key, "expected an integer");
}

int get_int(const Json& doc, std::string_view key, int fallback) {
    const long long v = get_integer(doc, key, fallback);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) fail(key, "integer out of range");
    return static_cast<int>(v);
}

std::uint64_t get_seed(const Json& doc, std::string_view key, std::uint64_t fallback) {
    const auto it = doc.find(key);
    if (it == doc.end()) return fallback;
    if (it->is_number_unsigned()) return it->get<std::uint64_t>();
    if (it->is_number_integer() && it->get<long long>() >= 0) return static_cast<std::uint64_t>(it->get<long long>());
    fail(key, "expected a non-negative integer");
}

std::string get_string(const Json& doc, std::string_view key, std::string fallback) {
    const auto it = doc.find(key);
    if (it == doc.end()) return fallback;
    if (!it->is_string()) fail(key, "expected a string");
    return it->get<std::string>();
}

template <class T>
std::vector<T> get_list(const Json& doc, std::string_view key) {
    const auto it = doc.find(key);
    if (it == doc.end()) return {};
    if (!it->is_array()) fail(key, "expected an array");
    std::vector<T> out;
    for (const auto& v : *it) {
        if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) fail(key, "expected an array of strings");
            out.push_back(v.get<std::string>());
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) fail(key, "expected an array of integers");
            out.push_back(v.get<T>());
        } else {
            if (!v.is_number()) fail(key, "expected an array of numbers");
            out.push_back(v.get<T>());
        }
    }
    return out;
}

template <class Parse>
auto parse_enum(const Json& doc, std::string_view key, std::string_view fallback, Parse parse) {
    const std::string text = get_string(doc, key, std::string(fallback));
    try {
        return parse(text);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

bool uses_model(Mode m) { return m != Mode::circuit && m != Mode::analyze; }
bool uses_engine(Mode m) {
    return m == Mode::trajectory || m == Mode::ensemble || m == Mode::sweep || m == Mode::pbc_steady;
}

} // namespace

std::string_view to_string(Mode mode) noexcept {
    switch (mode) {
    case Mode::trajectory: return "trajectory";
    case Mode::ensemble: return "ensemble";
    case Mode::sweep: return "sweep";
    case Mode::pbc_steady: return "pbc-steady";
    case Mode::liouvillian: return "liouvillian";
    case Mode::circuit: return "circuit";
    case Mode::analyze: return "analyze";
    }
    return "ensemble";
}

Mode parse_mode(std::string_view text) {
    for (Mode m : {Mode::trajectory, Mode::ensemble, Mode::sweep, Mode::pbc_steady, Mode::liouvillian, Mode::circuit,
                   Mode::analyze})
        if (to_string(m) == text) return m;
    throw ConfigError("mode: unknown mode '" + std::string(text) + "'");
}

std::vector<std::string> observable_names(const ObservableSet& s) {
    std::vector<std::string> out;
    if (s.entropy) out.emplace_back("S_half");
    if (s.f_skin) out.emplace_back("f_skin");
    if (s.f_r) out.emplace_back("f_r");
    if (s.velocity) out.emplace_back("velocity");
    if (s.mutual_information) out.emplace_back("I_AB");
    if (s.density) out.emplace_back("density");
    if (s.correlation) out.emplace_back("correlation");
    if (s.momentum) out.emplace_back("momentum");
    return out;
}

ObservableSet parse_observables(const std::vector<std::string>& names) {
    ObservableSet s{false, false, false, false, false, false, false, false};
    for (const auto& n : names) {
        if (n == "S_half") s.entropy = true;
        else if (n == "f_skin") s.f_skin = true;
        else if (n == "f_r") s.f_r = true;
        else if (n == "velocity") s.velocity = true;
        else if (n == "I_AB") s.mutual_information = true;
        else if (n == "density") s.density = true;
        else if (n == "correlation") s.correlation = true;
        else if (n == "momentum") s.momentum = true;
        else fail("observables", "unknown observable '" + n + "'");
    }
    return s;
}

RunConfig parse_config(const Json& input) {
    if (!input.is_object()) throw ConfigError("config: document must be a JSON object");
    const Json& doc = input.contains("config") ? input.at("config") : input;
    if (!doc.is_object()) throw ConfigError("config: member must be a JSON object");
    for (const auto& item : doc.items())
        if (!known_keys.contains(item.key())) fail(item.key(), "unknown key");

    const auto version = doc.find("schema_version");
    if (version == doc.end()) throw ConfigError("schema_version: required");
    if (get_integer(doc, "schema_version", 0) != schema_version)
        fail("schema_version", "unsupported version (expected " + std::to_string(schema_version) + ")");

    RunConfig c;
    c.mode = parse_mode(get_string(doc, "mode", "ensemble"));
    c.label = get_string(doc, "label", std::string(to_string(c.mode)));
    c.output = get_string(doc, "output", c.label);

    ModelSpec& m = c.model;
    m.L = get_int(doc, "L", c.mode == Mode::circuit ? CircuitConfig{}.L : m.L);
    m.J = get_number(doc, "J", m.J);
    m.W = get_number(doc, "W", m.W);
    m.alpha = get_number(doc, "alpha", m.alpha);
    m.theta = get_number(doc, "theta", m.theta);
    m.gamma = get_number(doc, "gamma", m.gamma);
    m.bc = parse_enum(doc, "bc", to_string(m.bc), parse_boundary);
    m.disorder = parse_enum(doc, "disorder", to_string(m.disorder), parse_disorder);
    m.disorder_seed = get_seed(doc, "disorder_seed", m.disorder_seed);

    EngineConfig& e = c.engine;
    e.dt = get_number(doc, "dt", e.dt);
    e.t_max = get_number(doc, "t_max", e.t_max);
    e.record_every = get_int(doc, "record_every", e.record_every);
    e.seed = get_seed(doc, "seed", e.seed);
    if (doc.contains("observables")) e.observables = parse_observables(get_list<std::string>(doc, "observables"));
    e.mi_block = get_int(doc, "mi_block", e.mi_block);
    c.initial = parse_enum(doc, "initial", to_string(c.initial), parse_initial);
    c.n_traj = get_int(doc, "n_traj", c.n_traj);
    c.trajectory_index = get_seed(doc, "trajectory_index", c.trajectory_index);
    c.L_values = get_list<int>(doc, "L_values");

    c.W_values = get_list<double>(doc, "W_values");
    c.t_over_L_values = get_list<double>(doc, "t_over_L_values");
    c.steady_fraction = get_number(doc, "steady_fraction", c.steady_fraction);
    c.N = get_int(doc, "N", c.N);
    c.max_dimension = get_int(doc, "max_dimension", c.max_dimension);

    CircuitConfig& k = c.circuit;
    k.L = m.L;
    k.W = m.W;
    k.alpha = m.alpha;
    k.seed = e.seed;
    k.delta_t = get_number(doc, "delta_t", k.delta_t);
    k.p = get_number(doc, "p", k.p);
    k.modules = get_int(doc, "modules", k.modules);
    k.shots = get_int(doc, "shots", k.shots);
    c.checkpoints = get_list<int>(doc, "checkpoints");

    c.input = get_string(doc, "input", "");
    if (c.mode == Mode::liouvillian && c.N < 0) c.N = m.L / 2;
    if (c.mode == Mode::pbc_steady) {
        m.bc = Boundary::periodic;
        e.observables.momentum = true;
    }
    validate(c);
    if (c.mode == Mode::sweep && c.t_over_L_values.empty()) {
        const double end = e.t_max / m.L;
        for (int i = 0; i < 60; ++i) c.t_over_L_values.push_back(end * i / 59.0);
    }
    if (c.mode == Mode::circuit && c.checkpoints.empty())
        for (int i = 0; i <= k.modules; ++i) c.checkpoints.push_back(i);
    return c;
}

RunConfig parse_config_text(std::string_view text) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config: malformed JSON (") + e.what() + ")");
    }
    return parse_config(doc);
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot read " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

void validate(const RunConfig& c) {
    try {
        if (c.output.empty()) fail("output", "must not be empty");
        if (uses_model(c.mode)) validate(c.model);
        if (uses_engine(c.mode)) validate(c.engine, c.model);
        switch (c.mode) {
        case Mode::trajectory:
            break;
        case Mode::ensemble:
        case Mode::pbc_steady:
        case Mode::sweep:
            if (c.n_traj < 1) fail("n_traj", "need at least one trajectory");
            break;
        default:
            break;
        }
        if (c.mode == Mode::ensemble)
            for (int L : c.L_values) {
                ModelSpec s = c.model;
                s.L = L;
                validate(c.engine, s);
            }
        if (c.mode == Mode::sweep) {
            if (c.W_values.empty()) fail("W_values", "sweep needs at least one W");
            for (double W : c.W_values)
                if (!(W >= 0.0) || !std::isfinite(W)) fail("W_values", "entries must be finite and >= 0");
            for (double t : c.t_over_L_values)
                if (!(t >= 0.0) || !std::isfinite(t)) fail("t_over_L_values", "entries must be finite and >= 0");
        }
        if (c.mode == Mode::pbc_steady && !(c.steady_fraction > 0.0 && c.steady_fraction <= 1.0))
            fail("steady_fraction", "must be in (0, 1]");
        if (c.mode == Mode::liouvillian) {
            if (c.N < 0 || c.N > c.model.L) fail("N", "particle number must be in [0, L]");
            if (c.max_dimension < 1) fail("max_dimension", "must be >= 1");
            if (!(c.engine.dt > 0.0)) fail("dt", "must be positive");
            if (!(c.engine.t_max >= 0.0)) fail("t_max", "must be >= 0");
            if (c.engine.record_every < 0) fail("record_every", "must be >= 0");
            double D = 1.0;
            for (int i = 0; i < c.N; ++i) D = D * (c.model.L - i) / (i + 1);
            if (D > c.max_dimension)
                fail("N", "sector dimension " + std::to_string(static_cast<long long>(std::llround(D))) +
                              " exceeds max_dimension " + std::to_string(c.max_dimension));
        }
        if (c.mode == Mode::circuit) {
            validate(c.circuit);
            if (!std::is_sorted(c.checkpoints.begin(), c.checkpoints.end()))
                fail("checkpoints", "must be ascending");
            for (int m : c.checkpoints)
                if (m < 0 || m > c.circuit.modules) fail("checkpoints", "entries must be in [0, modules]");
        }
        if (c.mode == Mode::analyze && c.input.empty()) fail("input", "analyze needs an input directory");
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

Json to_json(const RunConfig& c) {
    Json j;
    j["schema_version"] = schema_version;
    j["mode"] = std::string(to_string(c.mode));
    j["label"] = c.label;
    j["output"] = c.output;
    if (c.mode == Mode::analyze) {
        j["input"] = c.input;
        return j;
    }
    if (c.mode == Mode::circuit) {
        j["L"] = c.circuit.L;
        j["W"] = c.circuit.W;
        j["alpha"] = c.circuit.alpha;
        j["seed"] = c.circuit.seed;
        j["delta_t"] = c.circuit.delta_t;
        j["p"] = c.circuit.p;
        j["modules"] = c.circuit.modules;
        j["shots"] = c.circuit.shots;
        j["checkpoints"] = c.checkpoints;
        return j;
    }
    const ModelSpec& m = c.model;
    j["L"] = m.L;
    j["J"] = m.J;
    j["W"] = m.W;
    j["alpha"] = m.alpha;
    j["theta"] = m.theta;
    j["gamma"] = m.gamma;
    j["bc"] = std::string(to_string(m.bc));
    j["disorder"] = std::string(to_string(m.disorder));
    j["disorder_seed"] = m.disorder_seed;
    j["dt"] = c.engine.dt;
    j["t_max"] = c.engine.t_max;
    j["record_every"] = c.engine.record_every;
    j["initial"] = std::string(to_string(c.initial));
    if (c.mode == Mode::liouvillian) {
        j["N"] = c.N;
        j["max_dimension"] = c.max_dimension;
        j["seed"] = c.engine.seed;
        return j;
    }
    j["seed"] = c.engine.seed;
    j["observables"] = observable_names(c.engine.observables);
    j["mi_block"] = c.engine.mi_block;
    if (c.mode == Mode::trajectory) {
        j["trajectory_index"] = c.trajectory_index;
        return j;
    }
    j["n_traj"] = c.n_traj;
    if (c.mode == Mode::ensemble && !c.L_values.empty()) j["L_values"] = c.L_values;
    if (c.mode == Mode::sweep) {
        j["W_values"] = c.W_values;
        j["t_over_L_values"] = c.t_over_L_values;
    }
    if (c.mode == Mode::pbc_steady) j["steady_fraction"] = c.steady_fraction;
    return j;
}

} // namespace skinsim
