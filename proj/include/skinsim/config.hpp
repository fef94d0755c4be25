// config.hpp: Run configuration documents (flat JSON, versioned)

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "skinsim/circuit.hpp"
#include "skinsim/engine.hpp"
#include "skinsim/model.hpp"

namespace skinsim {

inline constexpr int schema_version = 1;
inline constexpr std::string_view code_version = "skinsim 0.1.0";

enum class Mode { trajectory, ensemble, sweep, pbc_steady, liouvillian, circuit, analyze };

std::string_view to_string(Mode mode) noexcept;
Mode parse_mode(std::string_view text);

// Message always starts with the offending field name.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct RunConfig {
    Mode mode = Mode::ensemble;
    std::string label;
    std::string output; // directory under the output root; defaults to label

    ModelSpec model;
    EngineConfig engine;
    InitialKind initial = InitialKind::neel;
    int n_traj = 8;
    std::uint64_t trajectory_index = 0;
    std::vector<int> L_values; // ensemble over several sizes

    std::vector<double> W_values;
    std::vector<double> t_over_L_values; // sweep grid; empty means 60 points up to t_max / L

    double steady_fraction = 0.25; // pbc-steady: trailing share of records averaged

    int N = -1; // liouvillian particle number; -1 means L / 2
    int max_dimension = 100;

    CircuitConfig circuit;
    std::vector<int> checkpoints; // module counts; empty means every module

    std::string input; // analyze: directory to read
};

// Accepts a config document or a meta.json (reads its "config" member).
// Unknown keys and type mismatches raise ConfigError.
RunConfig parse_config(const nlohmann::ordered_json& doc);
RunConfig parse_config_text(std::string_view text);
RunConfig load_config(const std::string& path);

// Cross-field checks for the selected mode; raises ConfigError.
void validate(const RunConfig& config);

// Fully resolved document with every default spelled out; parse_config of the
// result reproduces the same run.
nlohmann::ordered_json to_json(const RunConfig& config);

std::vector<std::string> observable_names(const ObservableSet& set);
ObservableSet parse_observables(const std::vector<std::string>& names);

} // namespace skinsim
