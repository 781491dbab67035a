#include <gtest/gtest.h>

#include "helpers.hpp"

using namespace gucrns;
using namespace testing_support;

TEST(Spaces, DofCounts) {
    auto m = unit_mesh(3);  // 16 vertices, 18 triangles
    EXPECT_EQ(build_space(m, SpaceKind::ScalarP1)->dof_count(), 16);
    EXPECT_EQ(build_space(m, SpaceKind::PressureP1)->dof_count(), 16);
    EXPECT_EQ(build_space(m, SpaceKind::VectorP1)->dof_count(), 32);
    EXPECT_EQ(build_space(m, SpaceKind::MiniVelocity)->dof_count(), 32 + 36);
}

TEST(Spaces, EssentialDofs) {
    auto m = unit_mesh(4);  // 16 boundary vertices, 4 corners
    const auto mini = build_space(m, SpaceKind::MiniVelocity);
    EXPECT_EQ(mini->essential_dofs().size(), 32u);
    const auto aux = build_space(m, SpaceKind::VectorP1);
    EXPECT_EQ(aux->essential_dofs().size(), 12u + 2u * 4u);
    // left side vertex (0, 0.25): only the x component is fixed
    int fixed_x = 0, fixed_y = 0;
    for (const auto& ed : aux->essential_dofs())
        if (ed.vertex == 5) (ed.component == 0 ? fixed_x : fixed_y)++;
    EXPECT_EQ(fixed_x, 1);
    EXPECT_EQ(fixed_y, 0);
    EXPECT_TRUE(build_space(m, SpaceKind::ScalarP1)->essential_dofs().empty());
}

TEST(Spaces, P1PartitionOfUnityAndBubble) {
    auto m = unit_mesh(2);
    const auto q = build_space(m, SpaceKind::ScalarP1);
    const auto y = build_space(m, SpaceKind::MiniVelocity);
    const std::array<double, 3> bary{0.2, 0.3, 0.5};
    const BasisValues b = eval_basis(*q, 1, bary);
    ASSERT_EQ(b.count, 3);
    EXPECT_NEAR(b.value[0] + b.value[1] + b.value[2], 1.0, 1e-15);
    const BasisValues bc = eval_basis(*y, 1, {1.0 / 3, 1.0 / 3, 1.0 / 3});
    ASSERT_EQ(bc.count, 8);
    EXPECT_NEAR(bc.value[6], 1.0, 1e-14);  // bubble peaks at the centroid
    const BasisValues bv = eval_basis(*y, 1, {1.0, 0.0, 0.0});
    EXPECT_NEAR(bv.value[6], 0.0, 1e-15);  // and vanishes on the boundary
}

TEST(Spaces, ProjectionReproducesLinearFunctions) {
    auto m = unit_mesh(5);
    const QuadratureRule rule = rule_for_degree(default_quadrature_degree);
    const Field f = l2_project(build_space(m, SpaceKind::ScalarP1), [](Vec2 x) { return 2.0 + 3.0 * x.x - x.y; }, rule);
    for (Index v = 0; v < m->vertex_count(); ++v) {
        const Vec2 x = m->vertex(v);
        EXPECT_NEAR(f[v], 2.0 + 3.0 * x.x - x.y, 1e-12);
    }
    // a linear field with zero normal trace on the unit square
    const Field g = l2_project(build_space(m, SpaceKind::VectorP1),
                               [](Vec2 x) { return Vec2{x.x * 0.0, 0.0}; }, rule);
    for (double c : g.coeffs()) EXPECT_NEAR(c, 0.0, 1e-14);
}

TEST(Spaces, PressureProjectionHasZeroMean) {
    auto m = unit_mesh(6);
    const QuadratureRule rule = rule_for_degree(default_quadrature_degree);
    const auto mspace = build_space(m, SpaceKind::PressureP1);
    const Field p = l2_project(mspace, [](Vec2 x) { return 5.0 + std::sin(3.0 * x.x) * x.y; }, rule);
    const CsrMatrix mass = assemble_mass(*mspace, rule);
    EXPECT_NEAR(dot(mass.multiply(Vector(mspace->dof_count(), 1.0)), p.coeffs()), 0.0, 1e-13);
}

TEST(Spaces, ProjectionConvergesAtSecondOrder) {
    const QuadratureRule rule = rule_for_degree(default_quadrature_degree);
    const auto f = [](Vec2 x) { return std::cos(2.0 * M_PI * x.x) * std::sin(M_PI * x.y); };
    double prev = 0.0;
    for (Index n : {8, 16, 32}) {
        auto m = unit_mesh(n);
        const Field p = l2_project(build_space(m, SpaceKind::ScalarP1), f, rule);
        const double err = l2_error(p, [&](Vec2 x, double) { return f(x); }, 0.0, rule);
        if (prev > 0.0) EXPECT_NEAR(prev / err, 4.0, 0.8);
        prev = err;
    }
}

TEST(Spaces, FieldEvaluation) {
    auto m = unit_mesh(3);
    const auto x = build_space(m, SpaceKind::VectorP1);
    Field f(x);
    for (Index v = 0; v < m->vertex_count(); ++v) {
        const Vec2 p = m->vertex(v);
        f.coeffs()[2 * v] = 2.0 * p.x;      // div = 2 + 3
        f.coeffs()[2 * v + 1] = 3.0 * p.y;
    }
    const std::array<double, 3> bary{0.1, 0.6, 0.3};
    for (Index e = 0; e < m->triangle_count(); ++e) {
        EXPECT_NEAR(f.divergence(e, bary), 5.0, 1e-12);
        const Vec2 at = m->map_point(e, bary);
        EXPECT_NEAR(f.vector(e, bary).x, 2.0 * at.x, 1e-14);
    }
}

TEST(Spaces, ArithmeticAcrossSpacesThrows) {
    auto m = unit_mesh(2);
    Field a(build_space(m, SpaceKind::ScalarP1));
    Field b(build_space(m, SpaceKind::PressureP1));
    EXPECT_THROW(a += b, std::invalid_argument);
}
