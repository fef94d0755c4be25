// skinsim: command-line entry point

#include <iostream>

#include <CLI11.hpp>

#include "skinsim/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Monitored free-fermion chains with feedback: trajectories, sweeps, exact checks"};
    app.set_version_flag("--version", std::string(skinsim::code_version));
    app.require_subcommand(1);

    std::string config_path;
    int workers = 0;
    std::string out;
    auto* run = app.add_subcommand("run", "Execute a JSON run configuration");
    run->add_option("config", config_path, "Configuration file (or a meta.json from an earlier run)")->required();
    run->add_option("--workers", workers, "Worker threads (default: SKINSIM_WORKERS or 1)")->check(CLI::PositiveNumber);
    run->add_option("--out", out, "Output directory (default: SKINSIM_OUT or . joined with the config's output)");

    std::string analyze_dir;
    auto* analyze = app.add_subcommand("analyze", "Fit a finished run directory and write fits.json");
    analyze->add_option("dir", analyze_dir, "Run directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : skinsim::exit_config;
    }

    if (run->parsed()) {
        skinsim::RunOptions options;
        if (workers > 0) options.workers = workers;
        if (!out.empty()) options.out = out;
        options.log = &std::cerr;
        return skinsim::run_config_file(config_path, options);
    }
    return skinsim::run_analyze(analyze_dir, &std::cerr);
}
