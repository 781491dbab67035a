#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gucrns/scheme.hpp"

namespace gucrns {

/// Invalid or missing configuration; `key` names the section.key at fault.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& what) : std::runtime_error(key + ": " + what), key_(std::move(key)) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

inline const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"converge-time", "converge-space", "stability",
                                                "repulsion",     "plume",          "single-run"};
    return names;
}

struct RunConfig {
    std::string experiment;
    std::string initial;  // manufactured | stability | repulsion | plume
    double lx = 1.0, ly = 1.0;
    Index nx = 16, ny = 16;
    double tau = 0.01;
    double final_time = 1.0;
    double mu1 = 1.0, mu2 = 1.0, mu3 = 1.0;
    int order = 1;
    LinearSolver solver = LinearSolver::direct;
    double krylov_tol = 1e-10;
    int gmres_restart = 50;
    int quadrature_degree = default_quadrature_degree;
    ConcentrationRecovery c_recovery = ConcentrationRecovery::gradient;
    std::filesystem::path output_dir = "out";
    int output_every = 1;
    std::vector<int> snapshot_steps;  // overrides output_every when non-empty
    std::vector<double> levels;       // sweep levels: taus (time) or cells per side (space)
    bool parallel_levels = false;
    std::uint64_t seed = 0;           // reserved

    SchemeParams scheme_params() const {
        SchemeParams p;
        p.tau = tau;
        p.mu1 = mu1;
        p.mu2 = mu2;
        p.mu3 = mu3;
        p.step1_solver = solver;
        p.krylov_tol = krylov_tol;
        p.gmres_restart = gmres_restart;
        p.quadrature_degree = quadrature_degree;
        p.c_recovery = c_recovery;
        return p;
    }

    int steps() const { return static_cast<int>(std::lround(final_time / tau)); }

    bool snapshot_due(int step) const {
        if (!snapshot_steps.empty())
            return std::find(snapshot_steps.begin(), snapshot_steps.end(), step) != snapshot_steps.end();
        return step % output_every == 0;
    }
};

/// Command-line values that take precedence over the file.
struct ConfigOverrides {
    std::optional<std::string> experiment;
    std::optional<std::filesystem::path> output_dir;
    std::optional<int> order;
    std::optional<double> tau;
    std::optional<Index> nx, ny;
};

namespace detail {

// Desk-scale defaults per experiment, as "section.key" -> text.
inline std::map<std::string, std::string> experiment_defaults(const std::string& experiment) {
    if (experiment == "converge-time")
        return {{"run.initial", "manufactured"}, {"domain.nx", "64"}, {"domain.ny", "64"},
                {"time.final_time", "1"},        {"time.tau", "0.25"}, {"sweep.levels", "0.25, 0.125, 0.0625, 0.03125"}};
    if (experiment == "converge-space")
        return {{"run.initial", "manufactured"}, {"time.tau", "0.001"}, {"time.final_time", "0.1"},
                {"sweep.levels", "4, 8, 16, 32"}};
    if (experiment == "stability")
        return {{"run.initial", "stability"}, {"domain.nx", "16"}, {"domain.ny", "16"}, {"time.tau", "0.01"},
                {"time.final_time", "2.5"},      {"output.every", "25"}};
    if (experiment == "repulsion")
        return {{"run.initial", "repulsion"}, {"domain.nx", "48"}, {"domain.ny", "48"}, {"time.tau", "0.001"},
                {"time.final_time", "0.03"},     {"output.snapshots", "1, 10, 15, 20, 25, 30"}};
    if (experiment == "plume")
        return {{"run.initial", "plume"}, {"domain.lx", "2"},    {"domain.nx", "96"},
                {"domain.ny", "48"},         {"time.tau", "0.001"}, {"time.final_time", "0.03"},
                {"output.snapshots", "1, 10, 15, 20, 25, 30"}};
    if (experiment == "single-run") return {{"run.initial", "manufactured"}, {"time.final_time", "0.1"}};
    return {};
}

template <class T>
T parse_value(const std::string& key, const std::string& text, const std::string& range) {
    std::istringstream in(text);
    T v{};
    in >> v;
    if (!in || !(in >> std::ws).eof())
        throw ConfigError(key, "cannot parse '" + text + "' (accepted: " + range + ")");
    return v;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& text, const std::string& range) {
    std::vector<T> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        const auto b = item.find_first_not_of(" \t"), e = item.find_last_not_of(" \t");
        if (b == std::string::npos) continue;
        out.push_back(parse_value<T>(key, item.substr(b, e - b + 1), range));
    }
    return out;
}

}  // namespace detail

/// Parses flat INI text (`[section]` headers, `key = value` lines). Keys
/// absent from the text fall back to the experiment's desk-scale defaults,
/// then to the generic defaults (mu = 1, first order, direct solver).
inline RunConfig parse_config_text(const std::string& text, const ConfigOverrides& cli = {}) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        std::istringstream in(text);
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& err) {
        throw ConfigError("line " + std::to_string(err.line()), err.message());
    }

    RunConfig cfg;
    std::string experiment = cli.experiment.value_or(tree.get<std::string>("run.experiment", ""));
    if (cli.experiment && tree.get_optional<std::string>("run.experiment") &&
        tree.get<std::string>("run.experiment") != *cli.experiment)
        throw ConfigError("run.experiment", "file says '" + tree.get<std::string>("run.experiment") +
                                                "' but the subcommand is '" + *cli.experiment + "'");
    const auto& names = experiment_names();
    std::string accepted;
    for (const auto& n : names) accepted += (accepted.empty() ? "" : ", ") + n;
    if (experiment.empty()) throw ConfigError("run.experiment", "missing (accepted: " + accepted + ")");
    if (std::find(names.begin(), names.end(), experiment) == names.end())
        throw ConfigError("run.experiment", "unknown value '" + experiment + "' (accepted: " + accepted + ")");
    cfg.experiment = experiment;

    const auto defaults = detail::experiment_defaults(experiment);
    auto lookup = [&](const std::string& key) -> std::optional<std::string> {
        if (auto v = tree.get_optional<std::string>(key)) return *v;
        if (auto it = defaults.find(key); it != defaults.end()) return it->second;
        return std::nullopt;
    };
    auto number = [&](const std::string& key, auto& target, const std::string& range) {
        using T = std::decay_t<decltype(target)>;
        if (auto v = lookup(key)) target = detail::parse_value<T>(key, *v, range);
    };

    if (auto v = lookup("run.initial")) cfg.initial = *v;
    number("run.seed", cfg.seed, "unsigned integer");
    number("domain.lx", cfg.lx, "> 0");
    number("domain.ly", cfg.ly, "> 0");
    number("domain.nx", cfg.nx, "integer >= 1");
    number("domain.ny", cfg.ny, "integer >= 1");
    number("time.tau", cfg.tau, "> 0");
    number("time.final_time", cfg.final_time, ">= tau");
    number("model.mu1", cfg.mu1, "> 0");
    number("model.mu2", cfg.mu2, "> 0");
    number("model.mu3", cfg.mu3, "> 0");
    number("scheme.order", cfg.order, "1 or 2");
    number("scheme.krylov_tol", cfg.krylov_tol, "> 0");
    number("scheme.gmres_restart", cfg.gmres_restart, "integer >= 1");
    number("scheme.quadrature_degree", cfg.quadrature_degree, "integer in [1, 8]");
    number("output.every", cfg.output_every, "integer >= 1");
    if (auto v = lookup("scheme.solver")) {
        if (*v == "direct")
            cfg.solver = LinearSolver::direct;
        else if (*v == "gmres")
            cfg.solver = LinearSolver::gmres;
        else
            throw ConfigError("scheme.solver", "unknown value '" + *v + "' (accepted: direct, gmres)");
    }
    if (auto v = lookup("scheme.c_recovery")) {
        if (*v == "gradient")
            cfg.c_recovery = ConcentrationRecovery::gradient;
        else if (*v == "sigma")
            cfg.c_recovery = ConcentrationRecovery::sigma;
        else
            throw ConfigError("scheme.c_recovery", "unknown value '" + *v + "' (accepted: gradient, sigma)");
    }
    if (auto v = lookup("output.dir")) cfg.output_dir = *v;
    if (auto v = lookup("output.snapshots")) cfg.snapshot_steps = detail::parse_list<int>("output.snapshots", *v, "integers >= 0");
    if (auto v = lookup("sweep.levels")) cfg.levels = detail::parse_list<double>("sweep.levels", *v, "positive numbers");
    if (auto v = lookup("sweep.parallel")) {
        if (*v == "true" || *v == "1")
            cfg.parallel_levels = true;
        else if (*v == "false" || *v == "0")
            cfg.parallel_levels = false;
        else
            throw ConfigError("sweep.parallel", "unknown value '" + *v + "' (accepted: true, false)");
    }

    if (cli.output_dir) cfg.output_dir = *cli.output_dir;
    if (cli.order) cfg.order = *cli.order;
    if (cli.tau) cfg.tau = *cli.tau;
    if (cli.nx) cfg.nx = *cli.nx;
    if (cli.ny) cfg.ny = *cli.ny;

    // validation
    if (!(cfg.tau > 0.0)) throw ConfigError("time.tau", "must be > 0 (got " + std::to_string(cfg.tau) + ")");
    if (!(cfg.final_time >= cfg.tau)) throw ConfigError("time.final_time", "must be >= tau");
    if (!(cfg.mu1 > 0.0)) throw ConfigError("model.mu1", "must be > 0");
    if (!(cfg.mu2 > 0.0)) throw ConfigError("model.mu2", "must be > 0");
    if (!(cfg.mu3 > 0.0)) throw ConfigError("model.mu3", "must be > 0");
    if (!(cfg.lx > 0.0)) throw ConfigError("domain.lx", "must be > 0");
    if (!(cfg.ly > 0.0)) throw ConfigError("domain.ly", "must be > 0");
    if (cfg.nx < 1) throw ConfigError("domain.nx", "must be an integer >= 1");
    if (cfg.ny < 1) throw ConfigError("domain.ny", "must be an integer >= 1");
    if (cfg.order != 1 && cfg.order != 2) throw ConfigError("scheme.order", "must be 1 or 2");
    if (cfg.output_every < 1) throw ConfigError("output.every", "must be an integer >= 1");
    if (!(cfg.krylov_tol > 0.0)) throw ConfigError("scheme.krylov_tol", "must be > 0");
    if (cfg.gmres_restart < 1) throw ConfigError("scheme.gmres_restart", "must be an integer >= 1");
    if (cfg.quadrature_degree < 1 || cfg.quadrature_degree > 8)
        throw ConfigError("scheme.quadrature_degree", "must be an integer in [1, 8]");
    for (int s : cfg.snapshot_steps)
        if (s < 0) throw ConfigError("output.snapshots", "steps must be >= 0");
    for (double l : cfg.levels)
        if (!(l > 0.0)) throw ConfigError("sweep.levels", "levels must be positive");
    static const std::vector<std::string> initials{"manufactured", "stability", "repulsion", "plume"};
    if (cfg.initial.empty()) cfg.initial = "manufactured";
    if (std::find(initials.begin(), initials.end(), cfg.initial) == initials.end())
        throw ConfigError("run.initial",
                          "unknown value '" + cfg.initial + "' (accepted: manufactured, stability, repulsion, plume)");
    if (cfg.initial == "manufactured" && (cfg.lx != 1.0 || cfg.ly != 1.0))
        throw ConfigError("domain.lx", "the manufactured problem lives on the unit square");
    if ((cfg.experiment == "converge-time" || cfg.experiment == "converge-space") && cfg.initial != "manufactured")
        throw ConfigError("run.initial", "convergence sweeps need the manufactured problem");
    return cfg;
}

inline RunConfig parse_config(const std::filesystem::path& path, const ConfigOverrides& cli = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("--config", "cannot read " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), cli);
}

}  // namespace gucrns
