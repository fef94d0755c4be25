// runner.hpp: Executes run configurations and writes their artifacts

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "skinsim/config.hpp"

namespace skinsim {

// Process exit codes.
inline constexpr int exit_ok = 0;
inline constexpr int exit_config = 2;
inline constexpr int exit_numerical = 3;

struct RunOptions {
    std::optional<int> workers;              // falls back to SKINSIM_WORKERS, then 1
    std::optional<std::filesystem::path> out; // replaces the output root + config.output
    std::ostream* log = nullptr;             // progress and error lines; nullptr is silent
};

int resolve_workers(const RunOptions& options);
// --out if given, else $SKINSIM_OUT (or the working directory) joined with config.output.
std::filesystem::path resolve_output(const RunConfig& config, const RunOptions& options);

// Runs a parsed configuration into `dir`. Throws ConfigError for unusable
// inputs; numerical failures propagate as their original exceptions.
void execute(const RunConfig& config, const std::filesystem::path& dir, int workers, std::ostream* log = nullptr);

// Reads a run directory (single series, size scan, or W sweep) and writes
// fits.json next to it; returns the document.
nlohmann::ordered_json analyze_directory(const std::filesystem::path& dir);

// Load, run and map failures onto exit codes.
int run_config_file(const std::string& path, const RunOptions& options);
int run_analyze(const std::filesystem::path& dir, std::ostream* log);

} // namespace skinsim
