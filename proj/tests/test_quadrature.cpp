#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"

using namespace gucrns;

namespace {
double factorial(int n) { return std::tgamma(n + 1.0); }

// Normalized integral of l1^a l2^b l3^c over a triangle (divided by its area).
double monomial_exact(int a, int b, int c) {
    return 2.0 * factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 2);
}
}  // namespace

class RuleExactness : public ::testing::TestWithParam<int> {};

TEST_P(RuleExactness, MatchesFactorialFormula) {
    const int d = GetParam();
    const QuadratureRule rule = rule_for_degree(d);
    EXPECT_EQ(rule.degree, d);
    ASSERT_EQ(rule.points.size(), rule.weights.size());
    for (int a = 0; a <= d; ++a)
        for (int b = 0; a + b <= d; ++b)
            for (int c = 0; a + b + c <= d; ++c) {
                double q = 0.0;
                for (std::size_t k = 0; k < rule.size(); ++k)
                    q += rule.weights[k] * std::pow(rule.points[k][0], a) * std::pow(rule.points[k][1], b) *
                         std::pow(rule.points[k][2], c);
                const double exact = monomial_exact(a, b, c);
                EXPECT_LE(std::abs(q - exact) / exact, 1e-13) << "degree " << d << " monomial " << a << b << c;
            }
}

INSTANTIATE_TEST_SUITE_P(AllDegrees, RuleExactness, ::testing::Range(1, 9));

TEST(Quadrature, PointsAreBarycentric) {
    for (int d = 1; d <= 8; ++d) {
        const QuadratureRule rule = rule_for_degree(d);
        for (const auto& p : rule.points) {
            EXPECT_NEAR(p[0] + p[1] + p[2], 1.0, 1e-15);
            for (double l : p) EXPECT_GE(l, 0.0);
        }
    }
}

TEST(Quadrature, UnsupportedDegreeThrows) {
    EXPECT_THROW(rule_for_degree(0), std::invalid_argument);
    EXPECT_THROW(rule_for_degree(9), std::invalid_argument);
}

TEST(Quadrature, IntegratesPolynomialOverMesh) {
    const TriMesh m = build_rect_mesh(2.0, 1.0, 3, 2);
    // int_0^2 int_0^1 x^3 y^2 = 4 * 1/3
    const double v = integrate(m, rule_for_degree(5), [](Vec2 x) { return x.x * x.x * x.x * x.y * x.y; });
    EXPECT_NEAR(v, 4.0 / 3.0, 1e-13);
}
