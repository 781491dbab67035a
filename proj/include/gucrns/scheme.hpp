#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "gucrns/assembly.hpp"

namespace gucrns {

enum class LinearSolver { direct, gmres };

/// How the concentration is rebuilt after each step:
///   gradient: (c - c^n)/tau + u^n.grad c - mu2 lap c + c = eta^2/2, weak P1 form
///   sigma:    (c - c^n)/tau + u^n.sigma - mu2 div sigma + c = eta^2/2, L2 projection
/// Identical for the continuous problem; the sigma form inherits the O(h)
/// consistency error of div sigma_h and is kept for comparison.
enum class ConcentrationRecovery { gradient, sigma };

struct SchemeParams {
    double tau = 0.01;
    double mu1 = 1.0;
    double mu2 = 1.0;
    double mu3 = 1.0;
    LinearSolver step1_solver = LinearSolver::direct;
    double krylov_tol = 1e-10;
    int gmres_restart = 50;
    int quadrature_degree = default_quadrature_degree;
    ConcentrationRecovery c_recovery = ConcentrationRecovery::gradient;
};

/// Space-time source terms added to each equation, plus the velocity trace
/// imposed on the intermediate velocity. Empty members mean zero.
struct Forcing {
    std::function<double(Vec2, double)> eta;
    std::function<Vec2(Vec2, double)> sigma;
    std::function<Vec2(Vec2, double)> u;
    std::function<double(Vec2, double)> c;
    std::function<Vec2(Vec2, double)> u_boundary;
};

struct InitialData {
    ScalarFunction eta;
    VectorFunction sigma;
    VectorFunction u;
    ScalarFunction c;  // optional; enables concentration recovery
    ScalarFunction p;  // optional; output only
};

/// Discrete unknowns at one time level. `u` is the end-of-step velocity
/// u_hat + grad(phi); for the first-order scheme phi = rho, for the
/// second-order scheme phi is the gauge increment.
struct Level {
    Field eta;
    Field sigma;
    Field u_hat;
    Field rho;
    Field s;
    Field p;
    CompositeVelocity u;
    std::optional<Field> c;
};

struct SchemeState {
    int step = 0;
    double time = 0.0;
    Level now;
    std::optional<Level> before;  // kept by the second-order scheme
};

/// First- and second-order Gauge-Uzawa steppers on one mesh. Holds the
/// coefficient-independent operators and the factorizations reused across
/// steps; the time loop owns the SchemeState values.
class GaugeUzawa {
public:
    GaugeUzawa(std::shared_ptr<const TriMesh> mesh, SchemeParams params)
        : params_(params),
          rule_(rule_for_degree(params.quadrature_degree)),
          spaces_(std::move(mesh)),
          ops_(spaces_, rule_) {
        if (!(params_.tau > 0.0)) throw std::invalid_argument("GaugeUzawa: tau must be positive");
        if (!(params_.mu1 > 0.0 && params_.mu2 > 0.0 && params_.mu3 > 0.0))
            throw std::invalid_argument("GaugeUzawa: mu1, mu2, mu3 must be positive");

        // bordered Neumann Laplacian and mass matrix on M_h (zero-mean multiplier)
        for (auto [op, lu] : {std::pair{&ops_.stiff_m, &poisson_lu_}, std::pair{&ops_.mass_m, &pressure_mass_lu_}}) {
            BlockSystem b({"m"}, {spaces_.pressure->dof_count()});
            b.add_block(0, 0, *op);
            b.add_constraint(0, ops_.mean_m);
            lu->factorize(b.compose());
        }
        density_mass_lu_.factorize(ops_.mass_q);
    }

    const SchemeParams& params() const { return params_; }
    const DiscreteSpaces& spaces() const { return spaces_; }
    const StaticOperators& operators() const { return ops_; }
    const QuadratureRule& rule() const { return rule_; }
    const TriMesh& mesh() const { return *spaces_.mesh; }

    /// L2 projections of the initial data; s = rho = 0, u = u_hat.
    SchemeState init_state(const InitialData& data) const {
        SchemeState st;
        Level& lv = st.now;
        lv.eta = l2_project(spaces_.density, data.eta, rule_);
        lv.sigma = l2_project(spaces_.gradient, data.sigma, rule_);
        lv.u_hat = l2_project(spaces_.velocity, data.u, rule_);
        lv.rho = Field(spaces_.pressure);
        lv.s = Field(spaces_.pressure);
        lv.p = data.p ? l2_project(spaces_.pressure, data.p, rule_) : Field(spaces_.pressure);
        lv.u = CompositeVelocity{lv.u_hat, lv.rho};
        if (data.c) lv.c = l2_project(spaces_.density, data.c, rule_);
        return st;
    }

    /// One first-order step n -> n+1.
    SchemeState gu1_step(const SchemeState& st, const Forcing* forcing = nullptr) {
        const double tau = params_.tau, t1 = st.time + tau;
        const Level& n = st.now;

        Step1Input in{1.0 / tau, params_.mu1, params_.mu2, params_.mu3, n.eta, n.sigma, n.u, {}, {}, {}, nullptr};
        in.rhs_eta = scaled(ops_.mass_q.multiply(n.eta.coeffs()), 1.0 / tau);
        in.rhs_sigma = scaled(ops_.mass_x.multiply(n.sigma.coeffs()), 1.0 / tau);
        in.rhs_u = scaled(composite_load(n.u, ops_), 1.0 / tau);
        add_to(in.rhs_u, scaled(ops_.pressure_div.multiply_transpose(n.s.coeffs()), params_.mu3));
        add_forcing(in, forcing, t1);

        const auto [eta1, sigma1, uhat1] = solve_step1(in, st.step);

        // gauge: (grad rho, grad psi) = (div u_hat, psi), zero mean
        const Vector div_u = ops_.pressure_div.multiply(uhat1.coeffs());
        Field rho1 = solve_bordered(poisson_lu_, div_u, st.step, "gauge solve");
        // accumulator: (s1, q) = (s, q) - (div u_hat, q)
        Vector rhs_s = ops_.mass_m.multiply(n.s.coeffs());
        add_to(rhs_s, scaled(div_u, -1.0));
        Field s1 = solve_bordered(pressure_mass_lu_, rhs_s, st.step, "accumulator solve");

        SchemeState out;
        out.step = st.step + 1;
        out.time = t1;
        Level& lv = out.now;
        lv.eta = eta1;
        lv.sigma = sigma1;
        lv.u_hat = uhat1;
        lv.rho = rho1;
        lv.s = s1;
        lv.u = CompositeVelocity{uhat1, rho1};
        lv.p = params_.mu3 * s1 - (1.0 / tau) * rho1;
        if (n.c) lv.c = recover_c(st, lv.sigma, forcing, /*second_order=*/false);
        return out;
    }

    /// Converts a state produced by one first-order step into the starting
    /// level of the second-order scheme: rho = -(2 tau / 3) p, s = 0. The
    /// previous level is the initial state.
    void start_second_order(SchemeState& st, const SchemeState& initial) const {
        st.before = initial.now;
        st.now.rho = (-2.0 * params_.tau / 3.0) * st.now.p;
        st.now.s = Field(spaces_.pressure);
    }

    /// One second-order step n -> n+1 (needs st.before).
    SchemeState gu2_step(const SchemeState& st, const Forcing* forcing = nullptr) {
        if (!st.before) throw std::logic_error("gu2_step: previous level missing");
        const double tau = params_.tau, t1 = st.time + tau;
        const Level &n = st.now, &m = *st.before;

        const Field eta_bar = 2.0 * n.eta - m.eta;
        const Field sigma_bar = 2.0 * n.sigma - m.sigma;
        const CompositeVelocity u_bar = 2.0 * n.u + (-1.0) * m.u;

        Step1Input in{1.5 / tau, params_.mu1, params_.mu2, params_.mu3, eta_bar, sigma_bar, u_bar, {}, {}, {}, nullptr};
        in.rhs_eta = scaled(ops_.mass_q.multiply((4.0 * n.eta - m.eta).coeffs()), 0.5 / tau);
        in.rhs_sigma = scaled(ops_.mass_x.multiply((4.0 * n.sigma - m.sigma).coeffs()), 0.5 / tau);
        in.rhs_u = scaled(composite_load(4.0 * n.u + (-1.0) * m.u, ops_), 0.5 / tau);
        add_to(in.rhs_u, ops_.pressure_div.multiply_transpose(n.p.coeffs()));
        add_forcing(in, forcing, t1);

        const auto [eta1, sigma1, uhat1] = solve_step1(in, st.step);

        const Vector div_u = ops_.pressure_div.multiply(uhat1.coeffs());
        Vector rhs_rho = ops_.stiff_m.multiply(n.rho.coeffs());
        add_to(rhs_rho, div_u);
        Field rho1 = solve_bordered(poisson_lu_, rhs_rho, st.step, "gauge solve");
        Vector rhs_s = ops_.mass_m.multiply(n.s.coeffs());
        add_to(rhs_s, scaled(div_u, -1.0));
        Field s1 = solve_bordered(pressure_mass_lu_, rhs_s, st.step, "accumulator solve");

        SchemeState out;
        out.step = st.step + 1;
        out.time = t1;
        out.before = n;
        Level& lv = out.now;
        lv.eta = eta1;
        lv.sigma = sigma1;
        lv.u_hat = uhat1;
        lv.rho = rho1;
        lv.s = s1;
        lv.u = CompositeVelocity{uhat1, rho1 - n.rho};
        lv.p = params_.mu3 * s1 - (1.5 / tau) * rho1;
        if (n.c) lv.c = recover_c(st, lv.sigma, forcing, /*second_order=*/true);
        return out;
    }

    /// Concentration at n+1 tested against the density space (see
    /// ConcentrationRecovery). The second-order variant uses the BDF2
    /// difference with extrapolated eta and u.
    Field recover_c(const SchemeState& st, const Field& sigma1, const Forcing* forcing, bool second_order) {
        const Level& n = st.now;
        if (!n.c) throw std::logic_error("recover_c: concentration not initialised");
        const double tau = params_.tau, t1 = st.time + tau, mu2 = params_.mu2;
        const bool bdf2 = second_order && st.before && st.before->c;
        const bool by_sigma = params_.c_recovery == ConcentrationRecovery::sigma;

        Field eta_c = n.eta;
        CompositeVelocity u_c = n.u;
        Vector rhs;
        double coeff;
        if (bdf2) {
            eta_c = 2.0 * n.eta - st.before->eta;
            u_c = 2.0 * n.u + (-1.0) * st.before->u;
            rhs = scaled(ops_.mass_q.multiply((4.0 * *n.c - *st.before->c).coeffs()), 0.5 / tau);
            coeff = 1.5 / tau + 1.0;
        } else {
            rhs = scaled(ops_.mass_q.multiply(n.c->coeffs()), 1.0 / tau);
            coeff = 1.0 / tau + 1.0;
        }
        const auto fc = forcing ? forcing->c : nullptr;
        add_to(rhs, assemble_load(*spaces_.density, rule_, [&](Index e, const auto& bary, Vec2 x) {
                   const double eta = eta_c.scalar(e, bary);
                   double v = 0.5 * eta * eta;
                   if (by_sigma)
                       v += -dot(u_c.value(e, bary), sigma1.vector(e, bary)) + mu2 * sigma1.divergence(e, bary);
                   if (fc) v += fc(x, t1);
                   return v;
               }));
        if (by_sigma) {
            Vector c1 = density_mass_lu_.solve(rhs);
            for (double& v : c1) v /= coeff;
            return Field(spaces_.density, std::move(c1));
        }
        // coeff M + mu2 K + (u.grad c, r); natural condition grad c . nu = sigma . nu = 0
        CsrMatrix a = assemble_bilinear(
            *spaces_.density, *spaces_.density, rule_,
            [&](Index e, const auto& bary, double w, const BasisValues& t, const BasisValues& s, LocalMatrix& local) {
                const Vec2 u = u_c.value(e, bary);
                for (int i = 0; i < t.count; ++i)
                    for (int j = 0; j < s.count; ++j) local[i][j] += w * dot(u, s.grad[j]) * t.value[i];
            });
        const auto& mass = ops_.mass_q;
        const auto& stiff = ops_.stiff_q;
        for (Index r = 0; r < a.rows(); ++r)
            for (Index k = a.row_ptr()[r]; k < a.row_ptr()[r + 1]; ++k) {
                const Index col = a.col_idx()[k];
                a.values()[k] += coeff * mass.at(r, col) + mu2 * stiff.at(r, col);
            }
        try {
            c_lu_.factorize(a);
            return Field(spaces_.density, c_lu_.solve(rhs));
        } catch (const SolverFailure& err) {
            std::ostringstream msg;
            msg << "step " << st.step << ": concentration solve failed: " << err.what();
            throw SolverFailure(msg.str(), err.iterations(), err.residual());
        }
    }

    /// ||eta||^2 + ||sigma||^2 + ||u||^2 + ||s||^2 with the composite velocity
    /// integrated by quadrature.
    double energy_e3(const SchemeState& st) const {
        const Level& lv = st.now;
        return quadratic(ops_.mass_q, lv.eta) + quadratic(ops_.mass_x, lv.sigma) + velocity_norm_sq(lv.u) +
               quadratic(ops_.mass_m, lv.s);
    }

    /// Same functional with the accumulator weighted by mu3 tau; this is the
    /// combination that the step-by-step energy identity telescopes, and it
    /// coincides with energy_e3 when mu3 tau = 1.
    double energy_weighted(const SchemeState& st) const {
        const Level& lv = st.now;
        return quadratic(ops_.mass_q, lv.eta) + quadratic(ops_.mass_x, lv.sigma) + velocity_norm_sq(lv.u) +
               params_.mu3 * params_.tau * quadratic(ops_.mass_m, lv.s);
    }

    double velocity_norm_sq(const CompositeVelocity& u) const {
        double total = 0.0;
        for (Index e = 0; e < mesh().triangle_count(); ++e) {
            double local = 0.0;
            for (std::size_t q = 0; q < rule_.size(); ++q) {
                const Vec2 v = u.value(e, rule_.points[q]);
                local += rule_.weights[q] * dot(v, v);
            }
            total += mesh().element(e).area * local;
        }
        return total;
    }

    /// (u, grad psi_i) for every pressure basis function.
    Vector divergence_residuals(const CompositeVelocity& u) const {
        return weak_divergence(u);
    }

    /// max_i |(u, grad psi_i)| / max(1, ||u||).
    double divergence_residual(const CompositeVelocity& u) const {
        const Vector r = weak_divergence(u);
        double m = 0.0;
        for (double v : r) m = std::max(m, std::abs(v));
        return m / std::max(1.0, std::sqrt(velocity_norm_sq(u)));
    }

    /// Integral of a density-space or pressure-space field.
    double integral(const Field& f) const {
        const Vector ones(f.space().dof_count(), 1.0);
        const CsrMatrix& mass = f.space().kind() == SpaceKind::PressureP1 ? ops_.mass_m : ops_.mass_q;
        return dot(mass.multiply(ones), f.coeffs());
    }

private:
    struct Step1Solution {
        Field eta, sigma, u_hat;
    };

    static Vector scaled(Vector v, double s) {
        for (double& x : v) x *= s;
        return v;
    }
    static void add_to(Vector& a, const Vector& b) {
        for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    }
    static double quadratic(const CsrMatrix& mass, const Field& f) { return dot(f.coeffs(), mass.multiply(f.coeffs())); }

    Vector weak_divergence(const CompositeVelocity& u) const {
        Vector out(spaces_.pressure->dof_count(), 0.0);
        for (Index e = 0; e < mesh().triangle_count(); ++e) {
            Vec2 mean_u;
            for (std::size_t q = 0; q < rule_.size(); ++q) mean_u += rule_.weights[q] * u.value(e, rule_.points[q]);
            const auto& t = mesh().triangle(e);
            const auto& g = mesh().element(e);
            for (int i = 0; i < 3; ++i) out[t[i]] += g.area * dot(mean_u, g.grad[i]);
        }
        return out;
    }

    void add_forcing(Step1Input& in, const Forcing* f, double t1) const {
        if (!f) return;
        if (f->eta)
            add_to(in.rhs_eta,
                   assemble_load(*spaces_.density, rule_, [&](Index, const auto&, Vec2 x) { return f->eta(x, t1); }));
        if (f->sigma)
            add_to(in.rhs_sigma,
                   assemble_load(*spaces_.gradient, rule_, [&](Index, const auto&, Vec2 x) { return f->sigma(x, t1); }));
        if (f->u)
            add_to(in.rhs_u,
                   assemble_load(*spaces_.velocity, rule_, [&](Index, const auto&, Vec2 x) { return f->u(x, t1); }));
        if (f->u_boundary) in.velocity_boundary = [g = f->u_boundary, t1](Vec2 x) { return g(x, t1); };
    }

    Step1Solution solve_step1(const Step1Input& in, int step) {
        BlockSystem sys = assemble_step1_system(in, spaces_, ops_, rule_, &plan_);
        Vector x;
        try {
            if (params_.step1_solver == LinearSolver::direct) {
                step1_lu_.factorize(sys.matrix());
                x = step1_lu_.solve(sys.rhs());
            } else {
                x = gmres_solve(sys.matrix(), sys.rhs(), params_.krylov_tol, params_.gmres_restart,
                                10 * sys.matrix().rows())
                        .x;
            }
        } catch (const SolverFailure& err) {
            std::ostringstream msg;
            msg << "step " << step << ": coupled solve failed: " << err.what();
            throw SolverFailure(msg.str(), err.iterations(), err.residual());
        }
        auto parts = sys.split(x);
        return {Field(spaces_.density, std::move(parts[block_eta])), Field(spaces_.gradient, std::move(parts[block_sigma])),
                Field(spaces_.velocity, std::move(parts[block_u]))};
    }

    Field solve_bordered(const SparseLu& lu, const Vector& rhs, int step, const char* what) const {
        Vector b(rhs);
        b.push_back(0.0);
        Vector x;
        try {
            x = lu.solve(b);
        } catch (const SolverFailure& err) {
            std::ostringstream msg;
            msg << "step " << step << ": " << what << " failed: " << err.what();
            throw SolverFailure(msg.str(), err.iterations(), err.residual());
        }
        x.pop_back();
        return Field(spaces_.pressure, std::move(x));
    }

    SchemeParams params_;
    QuadratureRule rule_;
    DiscreteSpaces spaces_;
    StaticOperators ops_;
    SparseLu poisson_lu_;
    SparseLu pressure_mass_lu_;
    SparseLu density_mass_lu_;
    SparseLu step1_lu_;
    SparseLu c_lu_;
    std::shared_ptr<ScatterPlan> plan_;
};

}  // namespace gucrns
