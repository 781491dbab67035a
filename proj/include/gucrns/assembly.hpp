#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <variant>

#include "gucrns/block_system.hpp"
#include "gucrns/spaces.hpp"

namespace gucrns {

// Form kinds. Entry (i, j) of an assembled matrix is the form evaluated with
// the j-th trial function and the i-th test function.

/// (phi_j, phi_i)
struct MassForm {};
/// (grad phi_j, grad phi_i), componentwise for vector spaces
struct StiffnessForm {};
/// (div w_j, div w_i)
struct DivDivForm {};
/// (curl w_j, curl w_i) with the scalar 2D curl d(w2)/dx - d(w1)/dy
struct CurlCurlForm {};
/// (div v_j, q_i): pressure test space x MINI velocity
struct PressureDivForm {};
/// (grad q_j, v_i): MINI velocity test space x pressure
struct GradientForm {};
/// b(u, v_j, v_i) in skew-symmetric form
struct TrilinearForm {
    std::reference_wrapper<const CompositeVelocity> u;
};
/// -(v_j eta, grad r_i): density test space x MINI velocity
struct ConvEtaForm {
    std::reference_wrapper<const Field> eta;
};
/// (w_j eta, grad r_i): density test space x auxiliary space
struct SigmaEtaForm {
    std::reference_wrapper<const Field> eta;
};
/// -(v_j . sigma, div w_i): auxiliary test space x MINI velocity
struct ConvSigmaForm {
    std::reference_wrapper<const Field> sigma;
};
/// (eta grad r_j, w_i): any vector test space x density
struct EtaGradEtaForm {
    std::reference_wrapper<const Field> eta;
};
/// ((div w_j) sigma, v_i): MINI velocity test space x auxiliary space
struct SigmaDivSigmaForm {
    std::reference_wrapper<const Field> sigma;
};

using FormKind = std::variant<MassForm, StiffnessForm, DivDivForm, CurlCurlForm, PressureDivForm, GradientForm,
                              TrilinearForm, ConvEtaForm, SigmaEtaForm, ConvSigmaForm, EtaGradEtaForm,
                              SigmaDivSigmaForm>;

namespace detail {

inline void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}
inline void require_same_mesh(const Field& f, const FESpace& s) {
    require(f.space().mesh_ptr() == s.mesh_ptr(), "assemble: coefficient field lives on another mesh");
}
inline bool scalar_space(const FESpace& s) { return !s.is_vector(); }
inline double curl_of(const BasisValues& b, int k) {
    return b.component[k] == 0 ? -b.grad[k].y : b.grad[k].x;
}

}  // namespace detail

inline CsrMatrix assemble(const FormKind& form, const FESpace& test, const FESpace& trial, const QuadratureRule& rule) {
    using detail::require;
    return std::visit(
        [&](const auto& f) -> CsrMatrix {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, MassForm>) {
                require(&test == &trial, "MassForm: test and trial space must coincide");
                return assemble_mass(test, rule);
            } else if constexpr (std::is_same_v<T, StiffnessForm>) {
                require(&test == &trial, "StiffnessForm: test and trial space must coincide");
                return assemble_bilinear(test, trial, rule, [](Index, const auto&, double w, const BasisValues& t,
                                                               const BasisValues& s, LocalMatrix& a) {
                    for (int i = 0; i < t.count; ++i)
                        for (int j = 0; j < s.count; ++j)
                            if (t.component[i] == s.component[j]) a[i][j] += w * dot(t.grad[i], s.grad[j]);
                });
            } else if constexpr (std::is_same_v<T, DivDivForm>) {
                require(&test == &trial && test.is_vector(), "DivDivForm: needs one vector space");
                return assemble_bilinear(test, trial, rule, [](Index, const auto&, double w, const BasisValues& t,
                                                               const BasisValues& s, LocalMatrix& a) {
                    for (int i = 0; i < t.count; ++i)
                        for (int j = 0; j < s.count; ++j)
                            a[i][j] += w * t.grad[i][t.component[i]] * s.grad[j][s.component[j]];
                });
            } else if constexpr (std::is_same_v<T, CurlCurlForm>) {
                require(&test == &trial && test.is_vector(), "CurlCurlForm: needs one vector space");
                return assemble_bilinear(test, trial, rule, [](Index, const auto&, double w, const BasisValues& t,
                                                               const BasisValues& s, LocalMatrix& a) {
                    for (int i = 0; i < t.count; ++i)
                        for (int j = 0; j < s.count; ++j)
                            a[i][j] += w * detail::curl_of(t, i) * detail::curl_of(s, j);
                });
            } else if constexpr (std::is_same_v<T, PressureDivForm>) {
                require(detail::scalar_space(test) && trial.is_vector(), "PressureDivForm: scalar test, vector trial");
                return assemble_bilinear(test, trial, rule, [](Index, const auto&, double w, const BasisValues& t,
                                                               const BasisValues& s, LocalMatrix& a) {
                    for (int i = 0; i < t.count; ++i)
                        for (int j = 0; j < s.count; ++j)
                            a[i][j] += w * t.value[i] * s.grad[j][s.component[j]];
                });
            } else if constexpr (std::is_same_v<T, GradientForm>) {
                require(test.is_vector() && detail::scalar_space(trial), "GradientForm: vector test, scalar trial");
                return assemble_bilinear(test, trial, rule, [](Index, const auto&, double w, const BasisValues& t,
                                                               const BasisValues& s, LocalMatrix& a) {
                    for (int i = 0; i < t.count; ++i)
                        for (int j = 0; j < s.count; ++j) a[i][j] += w * s.grad[j][t.component[i]] * t.value[i];
                });
            } else if constexpr (std::is_same_v<T, TrilinearForm>) {
                const CompositeVelocity& u = f.u.get();
                require(&test == &trial && test.is_vector(), "TrilinearForm: needs one vector space");
                detail::require_same_mesh(u.hat, test);
                // 1/2 ((u.grad) v_j, v_i) - 1/2 ((u.grad) v_i, v_j): skew for any u,
                // and equal to ((u.grad) v, w) + 1/2 ((div u) v, w) on zero-trace
                // continuous velocities.
                return assemble_bilinear(test, trial, rule, [&u](Index e, const auto& bary, double w,
                                                                 const BasisValues& t, const BasisValues& s,
                                                                 LocalMatrix& a) {
                    const Vec2 uq = u.value(e, bary);
                    std::array<double, max_local_dofs> adv{};
                    for (int k = 0; k < t.count; ++k) adv[k] = dot(uq, t.grad[k]);
                    for (int i = 0; i < t.count; ++i)
                        for (int j = 0; j < s.count; ++j)
                            if (t.component[i] == s.component[j])
                                a[i][j] += 0.5 * w * (adv[j] * t.value[i] - adv[i] * s.value[j]);
                });
            } else if constexpr (std::is_same_v<T, ConvEtaForm>) {
                const Field& eta = f.eta.get();
                require(detail::scalar_space(test) && trial.kind() == SpaceKind::MiniVelocity,
                        "ConvEtaForm: density test, MINI trial");
                detail::require_same_mesh(eta, test);
                return assemble_bilinear(test, trial, rule, [&eta](Index e, const auto& bary, double w,
                                                                   const BasisValues& t, const BasisValues& s,
                                                                   LocalMatrix& a) {
                    const double c = eta.scalar(e, bary);
                    for (int i = 0; i < t.count; ++i)
                        for (int j = 0; j < s.count; ++j) a[i][j] -= w * c * s.value[j] * t.grad[i][s.component[j]];
                });
            } else if constexpr (std::is_same_v<T, SigmaEtaForm>) {
                const Field& eta = f.eta.get();
                require(detail::scalar_space(test) && trial.is_vector(), "SigmaEtaForm: density test, vector trial");
                detail::require_same_mesh(eta, test);
                return assemble_bilinear(test, trial, rule, [&eta](Index e, const auto& bary, double w,
                                                                   const BasisValues& t, const BasisValues& s,
                                                                   LocalMatrix& a) {
                    const double c = eta.scalar(e, bary);
                    for (int i = 0; i < t.count; ++i)
                        for (int j = 0; j < s.count; ++j) a[i][j] += w * c * s.value[j] * t.grad[i][s.component[j]];
                });
            } else if constexpr (std::is_same_v<T, ConvSigmaForm>) {
                const Field& sigma = f.sigma.get();
                require(test.is_vector() && trial.is_vector(), "ConvSigmaForm: vector test and trial");
                detail::require_same_mesh(sigma, test);
                return assemble_bilinear(test, trial, rule, [&sigma](Index e, const auto& bary, double w,
                                                                     const BasisValues& t, const BasisValues& s,
                                                                     LocalMatrix& a) {
                    const Vec2 sq = sigma.vector(e, bary);
                    for (int i = 0; i < t.count; ++i) {
                        const double div_i = t.grad[i][t.component[i]];
                        for (int j = 0; j < s.count; ++j) a[i][j] -= w * s.value[j] * sq[s.component[j]] * div_i;
                    }
                });
            } else if constexpr (std::is_same_v<T, EtaGradEtaForm>) {
                const Field& eta = f.eta.get();
                require(test.is_vector() && detail::scalar_space(trial), "EtaGradEtaForm: vector test, density trial");
                detail::require_same_mesh(eta, test);
                return assemble_bilinear(test, trial, rule, [&eta](Index e, const auto& bary, double w,
                                                                   const BasisValues& t, const BasisValues& s,
                                                                   LocalMatrix& a) {
                    const double c = eta.scalar(e, bary);
                    for (int i = 0; i < t.count; ++i)
                        for (int j = 0; j < s.count; ++j) a[i][j] += w * c * s.grad[j][t.component[i]] * t.value[i];
                });
            } else if constexpr (std::is_same_v<T, SigmaDivSigmaForm>) {
                const Field& sigma = f.sigma.get();
                require(test.is_vector() && trial.is_vector(), "SigmaDivSigmaForm: vector test and trial");
                detail::require_same_mesh(sigma, test);
                return assemble_bilinear(test, trial, rule, [&sigma](Index e, const auto& bary, double w,
                                                                     const BasisValues& t, const BasisValues& s,
                                                                     LocalMatrix& a) {
                    const Vec2 sq = sigma.vector(e, bary);
                    for (int i = 0; i < t.count; ++i)
                        for (int j = 0; j < s.count; ++j)
                            a[i][j] += w * s.grad[j][s.component[j]] * sq[t.component[i]] * t.value[i];
                });
            }
        },
        form);
}

inline CsrMatrix assemble_trilinear(const CompositeVelocity& u, const FESpace& velocity, const QuadratureRule& rule) {
    return assemble(TrilinearForm{u}, velocity, velocity, rule);
}

/// The four discrete spaces on one mesh: density Q_h (also used for the
/// recovered concentration), auxiliary gradient X_h, MINI velocity Y_h and
/// pressure-like M_h.
struct DiscreteSpaces {
    std::shared_ptr<const TriMesh> mesh;
    std::shared_ptr<const FESpace> density;
    std::shared_ptr<const FESpace> gradient;
    std::shared_ptr<const FESpace> velocity;
    std::shared_ptr<const FESpace> pressure;

    explicit DiscreteSpaces(std::shared_ptr<const TriMesh> m)
        : mesh(std::move(m)),
          density(build_space(mesh, SpaceKind::ScalarP1)),
          gradient(build_space(mesh, SpaceKind::VectorP1)),
          velocity(build_space(mesh, SpaceKind::MiniVelocity)),
          pressure(build_space(mesh, SpaceKind::PressureP1)) {}
};

/// Coefficient-independent matrices, assembled once per mesh.
struct StaticOperators {
    CsrMatrix mass_q, stiff_q;
    CsrMatrix mass_x, divdiv_x, curlcurl_x;
    CsrMatrix mass_y, stiff_y;
    CsrMatrix mass_m, stiff_m;
    CsrMatrix pressure_div;  // (div v_j, q_i)
    CsrMatrix gradient;      // (grad q_j, v_i)
    Vector mean_m;           // (1, q_i)

    StaticOperators(const DiscreteSpaces& s, const QuadratureRule& rule)
        : mass_q(assemble(MassForm{}, *s.density, *s.density, rule)),
          stiff_q(assemble(StiffnessForm{}, *s.density, *s.density, rule)),
          mass_x(assemble(MassForm{}, *s.gradient, *s.gradient, rule)),
          divdiv_x(assemble(DivDivForm{}, *s.gradient, *s.gradient, rule)),
          curlcurl_x(assemble(CurlCurlForm{}, *s.gradient, *s.gradient, rule)),
          mass_y(assemble(MassForm{}, *s.velocity, *s.velocity, rule)),
          stiff_y(assemble(StiffnessForm{}, *s.velocity, *s.velocity, rule)),
          mass_m(assemble(MassForm{}, *s.pressure, *s.pressure, rule)),
          stiff_m(assemble(StiffnessForm{}, *s.pressure, *s.pressure, rule)),
          pressure_div(assemble(PressureDivForm{}, *s.pressure, *s.velocity, rule)),
          gradient(assemble(GradientForm{}, *s.velocity, *s.pressure, rule)),
          mean_m(mass_m.multiply(Vector(s.pressure->dof_count(), 1.0))) {}
};

/// Everything the coupled (density, auxiliary gradient, intermediate
/// velocity) solve needs at one time level. `time_coefficient` multiplies the
/// new-level mass terms (1/tau for backward Euler, 3/(2 tau) for BDF2); the
/// right-hand sides already contain history, pressure and forcing terms.
struct Step1Input {
    double time_coefficient;
    double mu1, mu2, mu3;
    const Field& eta;
    const Field& sigma;
    const CompositeVelocity& u;
    Vector rhs_eta;
    Vector rhs_sigma;
    Vector rhs_u;
    VectorFunction velocity_boundary;  // null: no-slip
};

inline constexpr int block_eta = 0;
inline constexpr int block_sigma = 1;
inline constexpr int block_u = 2;

/// Monolithic system in the unknowns [eta; sigma; u_hat] with the essential
/// conditions of the auxiliary and velocity spaces applied.
inline BlockSystem assemble_step1_system(const Step1Input& in, const DiscreteSpaces& s, const StaticOperators& ops,
                                         const QuadratureRule& rule,
                                         std::shared_ptr<ScatterPlan>* plan_cache = nullptr) {
    const FESpace &q = *s.density, &x = *s.gradient, &y = *s.velocity;
    BlockSystem sys({"eta", "sigma", "u"}, {q.dof_count(), x.dof_count(), y.dof_count()});
    const double a = in.time_coefficient;

    sys.add_block(block_eta, block_eta, ops.mass_q, a);
    sys.add_block(block_eta, block_eta, ops.stiff_q, in.mu1);
    sys.add_block(block_eta, block_sigma, assemble(SigmaEtaForm{in.eta}, q, x, rule));
    sys.add_block(block_eta, block_u, assemble(ConvEtaForm{in.eta}, q, y, rule));

    sys.add_block(block_sigma, block_sigma, ops.mass_x, a + 1.0);
    sys.add_block(block_sigma, block_sigma, ops.divdiv_x, in.mu2);
    sys.add_block(block_sigma, block_sigma, ops.curlcurl_x, in.mu2);
    sys.add_block(block_sigma, block_eta, assemble(EtaGradEtaForm{in.eta}, x, q, rule), -1.0);
    sys.add_block(block_sigma, block_u, assemble(ConvSigmaForm{in.sigma}, x, y, rule));

    sys.add_block(block_u, block_u, ops.mass_y, a);
    sys.add_block(block_u, block_u, ops.stiff_y, in.mu3);
    sys.add_block(block_u, block_u, assemble_trilinear(in.u, y, rule));
    sys.add_block(block_u, block_eta, assemble(EtaGradEtaForm{in.eta}, y, q, rule));
    sys.add_block(block_u, block_sigma, assemble(SigmaDivSigmaForm{in.sigma}, y, x, rule));

    std::copy(in.rhs_eta.begin(), in.rhs_eta.end(), sys.rhs(block_eta).begin());
    std::copy(in.rhs_sigma.begin(), in.rhs_sigma.end(), sys.rhs(block_sigma).begin());
    std::copy(in.rhs_u.begin(), in.rhs_u.end(), sys.rhs(block_u).begin());

    sys.compose(plan_cache);
    apply_dirichlet(sys, block_sigma, x);
    apply_dirichlet(sys, block_u, y, in.velocity_boundary);
    return sys;
}

/// (u, v_i) for a composite velocity: mass times hat plus the gradient
/// coupling for the piecewise-constant part.
inline Vector composite_load(const CompositeVelocity& u, const StaticOperators& ops) {
    Vector out = ops.mass_y.multiply(u.hat.coeffs());
    const Vector g = ops.gradient.multiply(u.rho.coeffs());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += g[i];
    return out;
}

/// First-order system from the level-n fields.
inline BlockSystem assemble_gu1_system(const Field& eta, const Field& sigma, const CompositeVelocity& u,
                                       const Field& s, double tau, double mu1, double mu2, double mu3,
                                       const DiscreteSpaces& spaces, const StaticOperators& ops,
                                       const QuadratureRule& rule, VectorFunction velocity_boundary = nullptr) {
    Step1Input in{1.0 / tau, mu1, mu2, mu3, eta, sigma, u, {}, {}, {}, std::move(velocity_boundary)};
    in.rhs_eta = ops.mass_q.multiply(eta.coeffs());
    in.rhs_sigma = ops.mass_x.multiply(sigma.coeffs());
    in.rhs_u = composite_load(u, ops);
    for (double& v : in.rhs_eta) v /= tau;
    for (double& v : in.rhs_sigma) v /= tau;
    for (double& v : in.rhs_u) v /= tau;
    const Vector bs = ops.pressure_div.multiply_transpose(s.coeffs());
    for (std::size_t i = 0; i < in.rhs_u.size(); ++i) in.rhs_u[i] += mu3 * bs[i];
    return assemble_step1_system(in, spaces, ops, rule);
}

}  // namespace gucrns
