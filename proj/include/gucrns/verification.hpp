#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <future>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "gucrns/scheme.hpp"

namespace gucrns {

using SpaceTimeScalar = std::function<double(Vec2, double)>;
using SpaceTimeVector = std::function<Vec2(Vec2, double)>;

/// Smooth exact solution on the unit square and the source terms that make
/// it satisfy the transformed chemotaxis-fluid system:
///   eta_t + div(u eta) - mu1 lap eta - div(eta sigma)                 = f_eta
///   sigma_t + grad(u.sigma) - mu2 lap sigma + sigma - eta grad eta     = f_sigma
///   u_t + (u.grad)u - mu3 lap u + grad p + eta grad eta + (div sigma) sigma = f_u
///   c_t + u.sigma - mu2 div sigma + c - eta^2/2                         = f_c
struct ManufacturedCase {
    double mu1 = 1.0, mu2 = 1.0, mu3 = 1.0;
    SpaceTimeScalar eta, c, p;
    SpaceTimeVector sigma, u;
    SpaceTimeScalar f_eta, f_c;
    SpaceTimeVector f_sigma, f_u;

    Forcing forcing() const { return Forcing{f_eta, f_sigma, f_u, f_c, u}; }

    InitialData initial_data() const {
        return InitialData{[f = eta](Vec2 x) { return f(x, 0.0); }, [f = sigma](Vec2 x) { return f(x, 0.0); },
                           [f = u](Vec2 x) { return f(x, 0.0); }, [f = c](Vec2 x) { return f(x, 0.0); },
                           [f = p](Vec2 x) { return f(x, 0.0); }};
    }
};

/// eta = cos(2 pi x) cos(pi y) sin t, c = cos(pi x) cos(2 pi y) sin t,
/// sigma = grad c, u = (sin(pi x) cos(pi y), -cos(pi x) sin(pi y)) sin t,
/// p = cos(pi x) cos(pi y) sin t. Forcing derived by hand.
inline ManufacturedCase manufactured_case(double mu1 = 1.0, double mu2 = 1.0, double mu3 = 1.0) {
    using std::cos;
    using std::sin;
    constexpr double pi = std::numbers::pi;
    ManufacturedCase m;
    m.mu1 = mu1;
    m.mu2 = mu2;
    m.mu3 = mu3;

    struct Eval {
        double eta, eta_t, c, c_t, p;
        Vec2 grad_eta, sigma, sigma_t, u, u_t, grad_p;
        double sxx, sxy, syy;            // Hessian of c = grad sigma
        double u1x, u1y, u2x, u2y;       // velocity gradient
    };
    const auto eval = [](Vec2 x, double t) {
        const double cx = cos(pi * x.x), sx = sin(pi * x.x), cy = cos(pi * x.y), sy = sin(pi * x.y);
        const double c2x = cos(2 * pi * x.x), s2x = sin(2 * pi * x.x), c2y = cos(2 * pi * x.y),
                     s2y = sin(2 * pi * x.y);
        const double st = sin(t), ct = cos(t);
        Eval v{};
        v.eta = c2x * cy * st;
        v.eta_t = c2x * cy * ct;
        v.grad_eta = {-2 * pi * s2x * cy * st, -pi * c2x * sy * st};
        v.c = cx * c2y * st;
        v.c_t = cx * c2y * ct;
        v.sigma = {-pi * sx * c2y * st, -2 * pi * cx * s2y * st};
        v.sigma_t = {-pi * sx * c2y * ct, -2 * pi * cx * s2y * ct};
        v.sxx = -pi * pi * cx * c2y * st;
        v.syy = -4 * pi * pi * cx * c2y * st;
        v.sxy = 2 * pi * pi * sx * s2y * st;
        v.u = {sx * cy * st, -cx * sy * st};
        v.u_t = {sx * cy * ct, -cx * sy * ct};
        v.u1x = pi * cx * cy * st;
        v.u1y = -pi * sx * sy * st;
        v.u2x = pi * sx * sy * st;
        v.u2y = -pi * cx * cy * st;
        v.p = cx * cy * st;
        v.grad_p = {-pi * sx * cy * st, -pi * cx * sy * st};
        return v;
    };

    m.eta = [eval](Vec2 x, double t) { return eval(x, t).eta; };
    m.c = [eval](Vec2 x, double t) { return eval(x, t).c; };
    m.p = [eval](Vec2 x, double t) { return eval(x, t).p; };
    m.sigma = [eval](Vec2 x, double t) { return eval(x, t).sigma; };
    m.u = [eval](Vec2 x, double t) { return eval(x, t).u; };

    // lap eta = -5 pi^2 eta, lap c = div sigma = -5 pi^2 c, lap sigma = -5 pi^2 sigma, lap u = -2 pi^2 u
    m.f_eta = [eval, mu1](Vec2 x, double t) {
        const Eval v = eval(x, t);
        const double div_sigma = -5 * pi * pi * v.c;
        return v.eta_t + dot(v.u, v.grad_eta) + 5 * pi * pi * mu1 * v.eta -
               (dot(v.grad_eta, v.sigma) + v.eta * div_sigma);
    };
    m.f_sigma = [eval, mu2](Vec2 x, double t) {
        const Eval v = eval(x, t);
        // grad(u.sigma) = (grad u)^T sigma + (grad sigma)^T u
        const Vec2 grad_u_sigma{v.u1x * v.sigma.x + v.u2x * v.sigma.y + v.sxx * v.u.x + v.sxy * v.u.y,
                                v.u1y * v.sigma.x + v.u2y * v.sigma.y + v.sxy * v.u.x + v.syy * v.u.y};
        return v.sigma_t + grad_u_sigma + (5 * pi * pi * mu2 + 1.0) * v.sigma - v.eta * v.grad_eta;
    };
    m.f_u = [eval, mu3](Vec2 x, double t) {
        const Eval v = eval(x, t);
        const Vec2 adv{v.u.x * v.u1x + v.u.y * v.u1y, v.u.x * v.u2x + v.u.y * v.u2y};
        const double div_sigma = -5 * pi * pi * v.c;
        return v.u_t + adv + 2 * pi * pi * mu3 * v.u + v.grad_p + v.eta * v.grad_eta + div_sigma * v.sigma;
    };
    m.f_c = [eval, mu2](Vec2 x, double t) {
        const Eval v = eval(x, t);
        return v.c_t + dot(v.u, v.sigma) + (5 * pi * pi * mu2 + 1.0) * v.c - 0.5 * v.eta * v.eta;
    };
    return m;
}

enum class StockCase { stability, repulsion, plume };

inline StockCase parse_stock_case(const std::string& name) {
    if (name == "stability") return StockCase::stability;
    if (name == "repulsion") return StockCase::repulsion;
    if (name == "plume") return StockCase::plume;
    throw std::invalid_argument("unknown initial-data case '" + name +
                                "' (expected stability, repulsion or plume)");
}

/// Initial data of the stability, chemo-repulsion and plume experiments.
/// The gradient field is grad c0 evaluated analytically.
inline InitialData stock_initial_data(StockCase which) {
    using std::cos;
    using std::exp;
    using std::sin;
    constexpr double pi = std::numbers::pi;
    InitialData d;
    switch (which) {
        case StockCase::stability:
            d.eta = [](Vec2 x) { return cos(2 * pi * x.x) + sin(2 * pi * x.y) + 3.0; };
            d.c = [](Vec2 x) { return cos(2 * pi * x.x) + sin(2 * pi * x.y) - 2 * pi * x.y + 9.0; };
            d.sigma = [](Vec2 x) { return Vec2{-2 * pi * sin(2 * pi * x.x), 2 * pi * (cos(2 * pi * x.y) - 1.0)}; };
            d.u = [](Vec2 x) {
                return Vec2{sin(2 * pi * x.y) * (-cos(2 * pi * x.x + pi) - 1.0),
                            sin(2 * pi * x.x) * (cos(2 * pi * x.y + pi) + 1.0)};
            };
            d.p = [](Vec2 x) { return cos(2 * pi * x.x) + sin(2 * pi * x.y); };
            break;
        case StockCase::repulsion:
            d.eta = [](Vec2 x) {
                const double dx = x.x - 1.0, dy = x.y - 1.0;
                return -10.0 * x.x * x.y * (2 - x.x) * (2 - x.y) * exp(-10 * dy * dy - 10 * dx * dx) + 10.0001;
            };
            d.c = [](Vec2 x) {
                const double dx = x.x - 1.0, dy = x.y - 1.0;
                return 200.0 * x.x * x.y * (2 - x.x) * (2 - x.y) * exp(-30 * dy * dy - 30 * dx * dx) + 0.0001;
            };
            d.sigma = [](Vec2 x) {
                // c0 = 200 P(x) P(y) E with P(s) = s (2 - s), E = exp(-30 (x-1)^2 - 30 (y-1)^2)
                const double dx = x.x - 1.0, dy = x.y - 1.0;
                const double px = x.x * (2 - x.x), py = x.y * (2 - x.y);
                const double e = exp(-30 * dy * dy - 30 * dx * dx);
                return Vec2{200.0 * py * e * ((2 - 2 * x.x) - 60 * dx * px),
                            200.0 * px * e * ((2 - 2 * x.y) - 60 * dy * py)};
            };
            d.u = [](Vec2) { return Vec2{}; };
            d.p = [](Vec2) { return 0.0; };
            break;
        case StockCase::plume:
            d.eta = [](Vec2 x) {
                const double dy = x.y - 1.0;
                return 70 * exp(-8 * (x.x - 0.4) * (x.x - 0.4) - 8 * dy * dy) +
                       70 * exp(-8 * (x.x - 0.7) * (x.x - 0.7) - 8 * dy * dy) +
                       70 * exp(-8 * (x.x - 1.5) * (x.x - 1.5) - 8 * dy * dy);
            };
            d.c = [](Vec2 x) { return 30 * exp(-4 * (x.x - 1) * (x.x - 1) - 4 * (x.y - 0.5) * (x.y - 0.5)); };
            d.sigma = [](Vec2 x) {
                const double e = 30 * exp(-4 * (x.x - 1) * (x.x - 1) - 4 * (x.y - 0.5) * (x.y - 0.5));
                return Vec2{-8 * (x.x - 1) * e, -8 * (x.y - 0.5) * e};
            };
            d.u = [](Vec2) { return Vec2{}; };
            d.p = [](Vec2) { return 0.0; };
            break;
    }
    return d;
}

/// ||exact(., t) - field||_{L2} by quadrature. For pressure-space fields both
/// sides are shifted to zero mean first.
inline double l2_error(const Field& field, const SpaceTimeScalar& exact, double t, const QuadratureRule& rule) {
    const TriMesh& mesh = field.space().mesh();
    double shift = 0.0;
    if (field.space().kind() == SpaceKind::PressureP1) {
        const double exact_mean = integrate(mesh, rule, [&](Vec2 x) { return exact(x, t); }) / mesh.area();
        double discrete = 0.0;
        for (Index e = 0; e < mesh.triangle_count(); ++e)
            for (std::size_t q = 0; q < rule.size(); ++q)
                discrete += mesh.element(e).area * rule.weights[q] * field.scalar(e, rule.points[q]);
        shift = exact_mean - discrete / mesh.area();
    }
    double total = 0.0;
    for (Index e = 0; e < mesh.triangle_count(); ++e) {
        double local = 0.0;
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const auto& b = rule.points[q];
            const double d = exact(mesh.map_point(e, b), t) - shift - field.scalar(e, b);
            local += rule.weights[q] * d * d;
        }
        total += mesh.element(e).area * local;
    }
    return std::sqrt(total);
}

inline double l2_error(const Field& field, const SpaceTimeVector& exact, double t, const QuadratureRule& rule) {
    const TriMesh& mesh = field.space().mesh();
    double total = 0.0;
    for (Index e = 0; e < mesh.triangle_count(); ++e) {
        double local = 0.0;
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const auto& b = rule.points[q];
            const Vec2 d = exact(mesh.map_point(e, b), t) - field.vector(e, b);
            local += rule.weights[q] * dot(d, d);
        }
        total += mesh.element(e).area * local;
    }
    return std::sqrt(total);
}

inline double l2_error(const CompositeVelocity& u, const SpaceTimeVector& exact, double t, const QuadratureRule& rule) {
    const TriMesh& mesh = u.hat.space().mesh();
    double total = 0.0;
    for (Index e = 0; e < mesh.triangle_count(); ++e) {
        double local = 0.0;
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const auto& b = rule.points[q];
            const Vec2 d = exact(mesh.map_point(e, b), t) - u.value(e, b);
            local += rule.weights[q] * dot(d, d);
        }
        total += mesh.element(e).area * local;
    }
    return std::sqrt(total);
}

/// Observed order log2(coarse / fine) for a halving refinement.
inline double observed_rate(double coarse, double fine) { return std::log2(coarse / fine); }

enum class SweepAxis { time, space };

inline const char* to_string(SweepAxis a) { return a == SweepAxis::time ? "time" : "space"; }

/// Final-time errors of one refinement level.
struct LevelErrors {
    int level = 0;
    double h = 0.0;
    double tau = 0.0;
    double u = 0.0, p = 0.0, eta = 0.0, c = 0.0, sigma = 0.0;
};

struct ErrorReport {
    SweepAxis axis = SweepAxis::time;
    std::vector<LevelErrors> levels;

    static constexpr std::array<const char*, 5> variables{"u", "p", "eta", "c", "sigma"};

    static double get(const LevelErrors& e, const std::string& var) {
        if (var == "u") return e.u;
        if (var == "p") return e.p;
        if (var == "eta") return e.eta;
        if (var == "c") return e.c;
        if (var == "sigma") return e.sigma;
        throw std::invalid_argument("ErrorReport: unknown variable " + var);
    }

    /// Rates between consecutive levels; empty for a single level.
    std::vector<double> rates(const std::string& var) const {
        std::vector<double> out;
        for (std::size_t i = 1; i < levels.size(); ++i)
            out.push_back(observed_rate(get(levels[i - 1], var), get(levels[i], var)));
        return out;
    }
};

/// Per-step hook for monitoring (state after the step, stepper).
using StepObserver = std::function<void(const SchemeState&, const GaugeUzawa&)>;

struct ManufacturedRun {
    Index n = 8;           // cells per side on the unit square
    double tau = 0.1;
    double final_time = 1.0;
    int order = 1;
    SchemeParams params{};
};

/// Number of steps to reach final_time with step tau (rounded).
inline int step_count(double final_time, double tau) { return static_cast<int>(std::lround(final_time / tau)); }

/// Runs the manufactured problem and returns the final state together with
/// its stepper (needed to interpret the fields).
inline std::pair<SchemeState, std::shared_ptr<GaugeUzawa>> run_manufactured(const ManufacturedCase& mc,
                                                                            const ManufacturedRun& run,
                                                                            const StepObserver& observe = nullptr) {
    SchemeParams params = run.params;
    params.tau = run.tau;
    params.mu1 = mc.mu1;
    params.mu2 = mc.mu2;
    params.mu3 = mc.mu3;
    auto mesh = std::make_shared<const TriMesh>(build_rect_mesh(1.0, 1.0, run.n, run.n));
    auto stepper = std::make_shared<GaugeUzawa>(mesh, params);
    const Forcing forcing = mc.forcing();
    const SchemeState initial = stepper->init_state(mc.initial_data());
    SchemeState st = initial;
    const int steps = step_count(run.final_time, run.tau);
    for (int k = 0; k < steps; ++k) {
        if (run.order == 2 && k > 0)
            st = stepper->gu2_step(st, &forcing);
        else
            st = stepper->gu1_step(st, &forcing);
        if (run.order == 2 && k == 0) stepper->start_second_order(st, initial);
        if (observe) observe(st, *stepper);
    }
    return {std::move(st), std::move(stepper)};
}

inline LevelErrors measure_errors(const ManufacturedCase& mc, const SchemeState& st, const GaugeUzawa& stepper) {
    const auto& rule = stepper.rule();
    LevelErrors e;
    e.h = stepper.mesh().h();
    e.tau = stepper.params().tau;
    e.u = l2_error(st.now.u, mc.u, st.time, rule);
    e.p = l2_error(st.now.p, mc.p, st.time, rule);
    e.eta = l2_error(st.now.eta, mc.eta, st.time, rule);
    e.sigma = l2_error(st.now.sigma, mc.sigma, st.time, rule);
    e.c = st.now.c ? l2_error(*st.now.c, mc.c, st.time, rule) : std::nan("");
    return e;
}

/// Refinement study on the manufactured problem. `values` holds the taus
/// (time axis) or the cells-per-side counts (space axis); `fixed` supplies
/// the other discretization parameter. Levels run concurrently when
/// `parallel` is set; each level is an independent simulation.
inline ErrorReport convergence_sweep(SweepAxis axis, const std::vector<double>& values, const ManufacturedRun& fixed,
                                     const ManufacturedCase& mc = manufactured_case(), bool parallel = false,
                                     const StepObserver& observe = nullptr) {
    for (std::size_t i = 1; i < values.size(); ++i) {
        const bool refining = axis == SweepAxis::time ? values[i] < values[i - 1] : values[i] > values[i - 1];
        if (!refining) throw std::invalid_argument("convergence_sweep: levels must be monotone refinements");
    }
    auto run_level = [&, axis](std::size_t i) {
        ManufacturedRun run = fixed;
        if (axis == SweepAxis::time)
            run.tau = values[i];
        else
            run.n = static_cast<Index>(values[i]);
        try {
            auto [st, stepper] = run_manufactured(mc, run, observe);
            LevelErrors e = measure_errors(mc, st, *stepper);
            e.level = static_cast<int>(i);
            return e;
        } catch (const SolverFailure& err) {
            throw SolverFailure("sweep level " + std::to_string(i) + ": " + err.what(), err.iterations(),
                                err.residual());
        }
    };
    ErrorReport report;
    report.axis = axis;
    if (parallel) {
        std::vector<std::future<LevelErrors>> jobs;
        for (std::size_t i = 0; i < values.size(); ++i) jobs.push_back(std::async(std::launch::async, run_level, i));
        for (auto& j : jobs) report.levels.push_back(j.get());
    } else {
        for (std::size_t i = 0; i < values.size(); ++i) report.levels.push_back(run_level(i));
    }
    return report;
}

}  // namespace gucrns
