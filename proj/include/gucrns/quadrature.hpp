#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "gucrns/mesh.hpp"

namespace gucrns {

/// Symmetric triangle rule in barycentric form. Weights sum to one, so the
/// physical integral over T is |T| * sum_q w_q f(x_q).
struct QuadratureRule {
    std::vector<std::array<double, 3>> points;
    std::vector<double> weights;
    int degree = 0;

    std::size_t size() const { return points.size(); }
};

/// Default exactness degree for every form in the solver.
inline constexpr int default_quadrature_degree = 7;

namespace detail {

class RuleBuilder {
public:
    explicit RuleBuilder(int degree) { rule_.degree = degree; }

    RuleBuilder& centroid(double w) {
        add({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, w);
        return *this;
    }
    RuleBuilder& s21(double a, double w) {
        const double b = 1.0 - 2.0 * a;
        add({a, a, b}, w);
        add({a, b, a}, w);
        add({b, a, a}, w);
        return *this;
    }
    RuleBuilder& s111(double a, double b, double w) {
        const double c = 1.0 - a - b;
        add({a, b, c}, w);
        add({a, c, b}, w);
        add({b, a, c}, w);
        add({b, c, a}, w);
        add({c, a, b}, w);
        add({c, b, a}, w);
        return *this;
    }
    QuadratureRule build() { return std::move(rule_); }

private:
    void add(std::array<double, 3> p, double w) {
        rule_.points.push_back(p);
        rule_.weights.push_back(w);
    }
    QuadratureRule rule_;
};

}  // namespace detail

/// Lowest-cost tabulated rule that integrates every polynomial of total
/// degree <= d exactly (Dunavant orbit layouts, values refined to full
/// double precision). Supported range 1..8.
inline QuadratureRule rule_for_degree(int d) {
    using detail::RuleBuilder;
    switch (d) {
        case 1:
            return RuleBuilder(1).centroid(1.0).build();
        case 2:
            return RuleBuilder(2).s21(1.0 / 6.0, 1.0 / 3.0).build();
        case 3:
            return RuleBuilder(3).centroid(-0.5625).s21(0.2, 0.52083333333333333333).build();
        case 4:
            return RuleBuilder(4)
                .s21(0.44594849091596488632, 0.22338158967801146570)
                .s21(0.091576213509770743460, 0.10995174365532186764)
                .build();
        case 5:
            return RuleBuilder(5)
                .centroid(0.225)
                .s21(0.47014206410511508977, 0.13239415278850618074)
                .s21(0.10128650732345633880, 0.12593918054482715260)
                .build();
        case 6:
            return RuleBuilder(6)
                .s21(0.24928674517091042129, 0.11678627572637936603)
                .s21(0.063089014491502228340, 0.050844906370206816921)
                .s111(0.053145049844816947353, 0.31035245103378440542, 0.082851075618373575194)
                .build();
        case 7:
            return RuleBuilder(7)
                .centroid(-0.14957004446768175063)
                .s21(0.26034596607903982693, 0.17561525743320781175)
                .s21(0.065130102902215811538, 0.053347235608838491270)
                .s111(0.048690315425316411793, 0.31286549600487386141, 0.077113760890257140260)
                .build();
        case 8:
            return RuleBuilder(8)
                .centroid(0.14431560767778716825)
                .s21(0.45929258829272315603, 0.095091634267284624794)
                .s21(0.17056930775176020662, 0.10321737053471825028)
                .s21(0.050547228317030975458, 0.032458497623198080311)
                .s111(0.0083947774099576053372, 0.26311282963463811342, 0.027230314174434994265)
                .build();
        default:
            throw std::invalid_argument("rule_for_degree: unsupported degree " + std::to_string(d) +
                                        " (supported 1..8)");
    }
}

/// Sum over elements of |T| * sum_q w_q f(x_q).
template <class F>
double integrate(const TriMesh& mesh, const QuadratureRule& rule, F&& f) {
    double total = 0.0;
    for (Index e = 0; e < mesh.triangle_count(); ++e) {
        double local = 0.0;
        for (std::size_t q = 0; q < rule.size(); ++q) local += rule.weights[q] * f(mesh.map_point(e, rule.points[q]));
        total += mesh.element(e).area * local;
    }
    return total;
}

}  // namespace gucrns
