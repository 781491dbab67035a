// gu-crns: batch driver for the Gauge-Uzawa chemo-repulsion / Navier-Stokes solver.
#include <CLI11.hpp>

#include <iostream>

#include "gucrns/experiments.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Gauge-Uzawa finite element solver for the chemo-repulsion Navier-Stokes system"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    int order = 0;
    double tau = 0.0;
    gucrns::Index nx = 0, ny = 0;

    const std::pair<const char*, const char*> subcommands[] = {
        {"converge-time", "temporal convergence sweep on the manufactured problem"},
        {"converge-space", "spatial convergence sweep on the manufactured problem"},
        {"stability", "unforced energy monitor run"},
        {"repulsion", "chemo-repulsion run with field snapshots"},
        {"plume", "plume run on [0,2]x[0,1] with field snapshots"},
        {"single-run", "one time-stepping run of the configured problem"},
    };
    for (const auto& [name, help] : subcommands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "INI configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
        sub->add_option("--order", order, "scheme order")->check(CLI::IsMember({1, 2}));
        sub->add_option("--tau", tau, "time step (overrides time.tau)")->check(CLI::PositiveNumber);
        sub->add_option("--nx", nx, "cells in x (overrides domain.nx)")->check(CLI::PositiveNumber);
        sub->add_option("--ny", ny, "cells in y (overrides domain.ny)")->check(CLI::PositiveNumber);
    }
    CLI11_PARSE(app, argc, argv);

    const CLI::App* chosen = app.get_subcommands().front();
    gucrns::ConfigOverrides overrides;
    overrides.experiment = chosen->get_name();
    if (chosen->count("--out")) overrides.output_dir = out_dir;
    if (chosen->count("--order")) overrides.order = order;
    if (chosen->count("--tau")) overrides.tau = tau;
    if (chosen->count("--nx")) overrides.nx = nx;
    if (chosen->count("--ny")) overrides.ny = ny;

    gucrns::RunConfig cfg;
    try {
        cfg = gucrns::parse_config(config_path, overrides);
    } catch (const gucrns::ConfigError& err) {
        std::cerr << "config error: " << err.what() << '\n';
        return gucrns::exit_config_error;
    }
    return gucrns::run_experiment(cfg, std::cerr);
}
