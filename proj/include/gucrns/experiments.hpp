#pragma once

#include <iostream>
#include <memory>
#include <string>

#include "gucrns/config.hpp"
#include "gucrns/output.hpp"
#include "gucrns/verification.hpp"

namespace gucrns {

enum ExitStatus : int { exit_ok = 0, exit_solver_failure = 1, exit_config_error = 2, exit_io_error = 3 };

/// Time loop shared by the single-run style experiments. Writes energy.csv
/// every step and a snapshot whenever the config asks for one.
struct TimeLoopResult {
    SchemeState final_state;
    std::shared_ptr<GaugeUzawa> stepper;
};

inline TimeLoopResult run_time_loop(const RunConfig& cfg, std::ostream& log) {
    const bool manufactured = cfg.initial == "manufactured";
    auto mesh = std::make_shared<const TriMesh>(build_rect_mesh(cfg.lx, cfg.ly, cfg.nx, cfg.ny));
    auto stepper = std::make_shared<GaugeUzawa>(mesh, cfg.scheme_params());
    const ManufacturedCase mc = manufactured_case(cfg.mu1, cfg.mu2, cfg.mu3);
    const InitialData data = manufactured ? mc.initial_data() : stock_initial_data(parse_stock_case(cfg.initial));
    const Forcing forcing = mc.forcing();
    const Forcing* f = manufactured ? &forcing : nullptr;

    EnergyCsv energy(cfg.output_dir / "energy.csv");
    const SchemeState initial = stepper->init_state(data);
    SchemeState st = initial;
    energy.row(0, 0.0, stepper->energy_e3(st));
    if (cfg.snapshot_due(0)) write_snapshot(st.now, cfg.output_dir / snapshot_name(0));

    const int steps = cfg.steps();
    for (int k = 0; k < steps; ++k) {
        if (cfg.order == 2 && k > 0) {
            st = stepper->gu2_step(st, f);
        } else {
            st = stepper->gu1_step(st, f);
            if (cfg.order == 2) stepper->start_second_order(st, initial);
        }
        energy.row(st.step, st.step * cfg.tau, stepper->energy_e3(st));
        if (cfg.snapshot_due(st.step)) write_snapshot(st.now, cfg.output_dir / snapshot_name(st.step));
        if (st.step % 100 == 0 || st.step == steps) log << "  step " << st.step << "/" << steps << '\n';
    }
    return {std::move(st), std::move(stepper)};
}

/// Runs the experiment named in the config and writes its artifacts under
/// cfg.output_dir. Returns a process exit status.
inline int run_experiment(const RunConfig& cfg, std::ostream& log = std::clog) {
    try {
        std::error_code ec;
        std::filesystem::create_directories(cfg.output_dir, ec);
        if (ec) throw OutputError(cfg.output_dir, "cannot create directory: " + ec.message());

        log << cfg.experiment << ": h-grid " << cfg.nx << "x" << cfg.ny << ", tau " << cfg.tau << ", T "
            << cfg.final_time << ", order " << cfg.order << '\n';

        if (cfg.experiment == "converge-time" || cfg.experiment == "converge-space") {
            const SweepAxis axis = cfg.experiment == "converge-time" ? SweepAxis::time : SweepAxis::space;
            if (cfg.levels.empty()) throw ConfigError("sweep.levels", "at least one level required");
            if (cfg.nx != cfg.ny && axis == SweepAxis::time)
                throw ConfigError("domain.ny", "the manufactured sweep uses square meshes (nx = ny)");
            ManufacturedRun fixed;
            fixed.n = cfg.nx;
            fixed.tau = cfg.tau;
            fixed.final_time = cfg.final_time;
            fixed.order = cfg.order;
            fixed.params = cfg.scheme_params();
            const ErrorReport report = convergence_sweep(axis, cfg.levels, fixed,
                                                         manufactured_case(cfg.mu1, cfg.mu2, cfg.mu3),
                                                         cfg.parallel_levels);
            write_errors_csv(report, cfg.output_dir / "errors.csv");
            for (const char* var : ErrorReport::variables) {
                log << "  " << var << ":";
                for (const auto& lv : report.levels) log << ' ' << fmt17(ErrorReport::get(lv, var));
                log << "  rates:";
                for (double r : report.rates(var)) log << ' ' << r;
                log << '\n';
            }
            return exit_ok;
        }

        const TimeLoopResult res = run_time_loop(cfg, log);
        if (cfg.initial == "manufactured") {
            ErrorReport report;
            report.axis = SweepAxis::time;
            report.levels.push_back(measure_errors(manufactured_case(cfg.mu1, cfg.mu2, cfg.mu3), res.final_state,
                                                   *res.stepper));
            write_errors_csv(report, cfg.output_dir / "errors.csv", "single");
        }
        log << "  final E3 " << fmt17(res.stepper->energy_e3(res.final_state)) << '\n';
        return exit_ok;
    } catch (const SolverFailure& err) {
        log << "solver failure: " << err.what() << " (iterations " << err.iterations() << ", residual "
            << err.residual() << ")\n";
        return exit_solver_failure;
    } catch (const ConfigError& err) {
        log << "config error: " << err.what() << '\n';
        return exit_config_error;
    } catch (const OutputError& err) {
        log << "output error: " << err.what() << '\n';
        return exit_io_error;
    }
}

}  // namespace gucrns
