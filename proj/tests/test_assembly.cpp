#include <gtest/gtest.h>

#include "helpers.hpp"

using namespace gucrns;
using namespace testing_support;

namespace {
struct Fixture {
    std::shared_ptr<const TriMesh> mesh;
    QuadratureRule rule = rule_for_degree(default_quadrature_degree);
    DiscreteSpaces spaces;
    StaticOperators ops;
    explicit Fixture(Index n) : mesh(unit_mesh(n)), spaces(mesh), ops(spaces, rule) {}
};

double bilinear(const CsrMatrix& a, const Vector& test, const Vector& trial) { return dot(test, a.multiply(trial)); }
// sum |a_ij v_i w_j|: the natural size of v^T A w for a roundoff bound
double abs_bilinear(const CsrMatrix& a, const Vector& v, const Vector& w) {
    double s = 0.0;
    for (Index r = 0; r < a.rows(); ++r)
        for (Index k = a.row_ptr()[r]; k < a.row_ptr()[r + 1]; ++k)
            s += std::abs(a.values()[k] * v[r] * w[a.col_idx()[k]]);
    return s;
}
}  // namespace

TEST(Assembly, MassIntegratesConstants) {
    Fixture s(4);
    const Vector one_q(s.spaces.density->dof_count(), 1.0);
    EXPECT_NEAR(bilinear(s.ops.mass_q, one_q, one_q), 1.0, 1e-14);
    // stiffness annihilates constants
    for (double v : s.ops.stiff_q.multiply(one_q)) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(Assembly, SymmetricOperators) {
    Fixture s(3);
    for (const CsrMatrix* a : {&s.ops.mass_q, &s.ops.stiff_q, &s.ops.mass_x, &s.ops.divdiv_x, &s.ops.curlcurl_x,
                               &s.ops.mass_y, &s.ops.stiff_y, &s.ops.mass_m, &s.ops.stiff_m}) {
        const CsrMatrix t = a->transpose();
        for (Index r = 0; r < a->rows(); ++r)
            for (Index k = a->row_ptr()[r]; k < a->row_ptr()[r + 1]; ++k)
                EXPECT_NEAR(a->values()[k], t.at(r, a->col_idx()[k]), 1e-13);
    }
}

TEST(Assembly, DivCurlEqualsGradientNormForZeroTrace) {
    // ||div w||^2 + ||curl w||^2 = ||grad w||^2 when w vanishes on the boundary
    Fixture s(6);
    std::mt19937_64 rng(4);
    Field w = random_field(s.spaces.gradient, rng);
    for (Index v = 0; v < s.mesh->vertex_count(); ++v) {
        const Vec2 x = s.mesh->vertex(v);
        if (x.x == 0.0 || x.y == 0.0 || x.x == 1.0 || x.y == 1.0) w.coeffs()[2 * v] = w.coeffs()[2 * v + 1] = 0.0;
    }
    const double lhs = bilinear(s.ops.divdiv_x, w.coeffs(), w.coeffs()) + bilinear(s.ops.curlcurl_x, w.coeffs(), w.coeffs());
    const CsrMatrix k = assemble(StiffnessForm{}, *s.spaces.gradient, *s.spaces.gradient, s.rule);
    EXPECT_NEAR(lhs, bilinear(k, w.coeffs(), w.coeffs()), 1e-10 * lhs);
}

TEST(Assembly, GradientIsMinusDivergenceAdjoint) {
    // (div v, q) = -(v, grad q) for v with zero trace
    Fixture s(4);
    std::mt19937_64 rng(8);
    const Field v = with_zero_trace(random_field(s.spaces.velocity, rng));
    const Field q = random_field(s.spaces.pressure, rng);
    const double a = bilinear(s.ops.pressure_div, q.coeffs(), v.coeffs());
    const double b = bilinear(s.ops.gradient, v.coeffs(), q.coeffs());
    EXPECT_NEAR(a, -b, 1e-12 * std::max(1.0, std::abs(a)));
}

TEST(Assembly, TrilinearFormIsSkewSymmetric) {
    Fixture s(8);
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
        const CompositeVelocity u{random_field(s.spaces.velocity, rng), random_field(s.spaces.pressure, rng)};
        const CsrMatrix b = assemble_trilinear(u, *s.spaces.velocity, s.rule);
        const Field v = random_field(s.spaces.velocity, rng), w = random_field(s.spaces.velocity, rng);
        const double scale = abs_bilinear(b, v.coeffs(), v.coeffs()) + abs_bilinear(b, w.coeffs(), v.coeffs());
        EXPECT_LE(std::abs(bilinear(b, v.coeffs(), v.coeffs())), 1e-12 * scale);
        EXPECT_LE(std::abs(bilinear(b, w.coeffs(), v.coeffs()) + bilinear(b, v.coeffs(), w.coeffs())), 1e-12 * scale);
    }
}

TEST(Assembly, CouplingBlocksCancelInTheEnergy) {
    // the off-diagonal couplings are negative adjoints of each other, which is
    // what makes the coupled system energy-stable
    Fixture s(5);
    std::mt19937_64 rng(17);
    const Field eta = random_field(s.spaces.density, rng);
    const Field sigma = random_field(s.spaces.gradient, rng);
    const auto& q = *s.spaces.density;
    const auto& x = *s.spaces.gradient;
    const auto& y = *s.spaces.velocity;
    const auto check_adjoint = [&](const CsrMatrix& a, const CsrMatrix& b, double sign) {
        const CsrMatrix bt = b.transpose();
        ASSERT_EQ(a.rows(), bt.rows());
        double worst = 0.0;
        for (Index r = 0; r < a.rows(); ++r)
            for (Index k = a.row_ptr()[r]; k < a.row_ptr()[r + 1]; ++k)
                worst = std::max(worst, std::abs(a.values()[k] - sign * bt.at(r, a.col_idx()[k])));
        EXPECT_LE(worst, 1e-12 * std::max(1.0, a.max_abs()));
    };
    check_adjoint(assemble(ConvEtaForm{eta}, q, y, s.rule), assemble(EtaGradEtaForm{eta}, y, q, s.rule), -1.0);
    check_adjoint(assemble(SigmaEtaForm{eta}, q, x, s.rule), assemble(EtaGradEtaForm{eta}, x, q, s.rule), 1.0);
    check_adjoint(assemble(ConvSigmaForm{sigma}, x, y, s.rule), assemble(SigmaDivSigmaForm{sigma}, y, x, s.rule), -1.0);
}

TEST(Assembly, DensityRowConservesMass) {
    // testing the density row with r = 1 kills every flux term
    Fixture s(4);
    std::mt19937_64 rng(5);
    const Field eta = random_field(s.spaces.density, rng);
    const Vector one(s.spaces.density->dof_count(), 1.0);
    for (const CsrMatrix& a : {assemble(ConvEtaForm{eta}, *s.spaces.density, *s.spaces.velocity, s.rule),
                               assemble(SigmaEtaForm{eta}, *s.spaces.density, *s.spaces.gradient, s.rule)}) {
        for (double v : a.multiply_transpose(one)) EXPECT_NEAR(v, 0.0, 1e-12);
    }
}

TEST(Assembly, SpaceMismatchRejected) {
    Fixture s(2);
    EXPECT_THROW(assemble(PressureDivForm{}, *s.spaces.velocity, *s.spaces.pressure, s.rule), std::invalid_argument);
    auto other = unit_mesh(2);
    const auto foreign = build_space(other, SpaceKind::ScalarP1);
    EXPECT_THROW(assemble(MassForm{}, *foreign, *s.spaces.density, s.rule), std::invalid_argument);
}

TEST(Assembly, Step1SystemZeroStateGivesZeroSolution) {
    Fixture s(3);
    const Field eta(s.spaces.density), sigma(s.spaces.gradient);
    const CompositeVelocity u{Field(s.spaces.velocity), Field(s.spaces.pressure)};
    BlockSystem sys = assemble_gu1_system(eta, sigma, u, Field(s.spaces.pressure), 0.1, 1, 1, 1, s.spaces, s.ops, s.rule);
    const Vector x = lu_solve(sys.matrix(), sys.rhs());
    for (double v : x) EXPECT_EQ(v, 0.0);
}

TEST(Assembly, Step1SystemImposesVelocityTrace) {
    Fixture s(3);
    std::mt19937_64 rng(6);
    const Field eta = random_field(s.spaces.density, rng);
    const Field sigma = with_zero_trace(random_field(s.spaces.gradient, rng));
    const CompositeVelocity u{with_zero_trace(random_field(s.spaces.velocity, rng)), Field(s.spaces.pressure)};
    BlockSystem sys = assemble_gu1_system(eta, sigma, u, Field(s.spaces.pressure), 0.1, 1, 1, 1, s.spaces, s.ops, s.rule,
                                          [](Vec2 x) { return Vec2{x.y, -x.x}; });
    const auto parts = sys.split(lu_solve(sys.matrix(), sys.rhs()));
    for (const auto& ed : s.spaces.velocity->essential_dofs()) {
        const Vec2 x = s.mesh->vertex(ed.vertex);
        EXPECT_NEAR(parts[block_u][ed.dof], ed.component == 0 ? x.y : -x.x, 1e-12);
    }
    for (const auto& ed : s.spaces.gradient->essential_dofs()) EXPECT_NEAR(parts[block_sigma][ed.dof], 0.0, 1e-14);
}
