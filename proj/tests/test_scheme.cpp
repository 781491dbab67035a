#include <gtest/gtest.h>

#include "helpers.hpp"

using namespace gucrns;
using namespace testing_support;

namespace {

SchemeParams params_with(double tau, LinearSolver solver = LinearSolver::direct) {
    SchemeParams p;
    p.tau = tau;
    p.step1_solver = solver;
    return p;
}

InitialData zero_data() {
    InitialData d;
    d.eta = [](Vec2) { return 0.0; };
    d.sigma = [](Vec2) { return Vec2{}; };
    d.u = [](Vec2) { return Vec2{}; };
    d.c = [](Vec2) { return 0.0; };
    return d;
}

// A bumpy but compatible state: sigma = grad c0 with zero normal trace.
InitialData bump_data() {
    InitialData d;
    d.eta = [](Vec2 x) { return 1.0 + 0.5 * std::cos(M_PI * x.x) * std::cos(2 * M_PI * x.y); };
    d.c = [](Vec2 x) { return std::cos(M_PI * x.x) * std::cos(M_PI * x.y); };
    d.sigma = [](Vec2 x) {
        return Vec2{-M_PI * std::sin(M_PI * x.x) * std::cos(M_PI * x.y),
                    -M_PI * std::cos(M_PI * x.x) * std::sin(M_PI * x.y)};
    };
    d.u = [](Vec2 x) {
        const double sx = std::sin(M_PI * x.x), sy = std::sin(M_PI * x.y);
        return Vec2{sx * sx * std::sin(2 * M_PI * x.y), -std::sin(2 * M_PI * x.x) * sy * sy};
    };
    return d;
}

double max_abs(const Vector& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

TEST(Scheme, ZeroIsAFixedPoint) {
    for (int order : {1, 2}) {
        GaugeUzawa g(unit_mesh(4), params_with(0.05));
        const SchemeState init = g.init_state(zero_data());
        SchemeState st = g.gu1_step(init);
        if (order == 2) {
            g.start_second_order(st, init);
            st = g.gu2_step(st);
        }
        for (const Field* f : {&st.now.eta, &st.now.sigma, &st.now.u_hat, &st.now.rho, &st.now.s, &st.now.p})
            EXPECT_EQ(max_abs(f->coeffs()), 0.0) << "order " << order;
        EXPECT_EQ(g.energy_e3(st), 0.0);
    }
}

TEST(Scheme, ConcentrationRecoveryOfConstantDensity) {
    // eta = k, sigma = u = c = 0: c solves c/tau + c = k^2/2 exactly
    const double k = 1.7, tau = 0.2;
    for (auto mode : {ConcentrationRecovery::gradient, ConcentrationRecovery::sigma}) {
        SchemeParams p = params_with(tau);
        p.c_recovery = mode;
        GaugeUzawa g(unit_mesh(4), p);
        InitialData d = zero_data();
        d.eta = [k](Vec2) { return k; };
        const SchemeState st = g.gu1_step(g.init_state(d));
        ASSERT_TRUE(st.now.c.has_value());
        for (double c : st.now.c->coeffs()) EXPECT_NEAR(c, 0.5 * k * k * tau / (1.0 + tau), 1e-12);
        for (double e : st.now.eta.coeffs()) EXPECT_NEAR(e, k, 1e-12);
    }
}

TEST(Scheme, InitialStateProjection) {
    GaugeUzawa g(unit_mesh(3), params_with(0.1));
    InitialData d = zero_data();
    d.eta = [](Vec2) { return 1.0; };
    const SchemeState st = g.init_state(d);
    for (double e : st.now.eta.coeffs()) EXPECT_NEAR(e, 1.0, 1e-14);
    EXPECT_NEAR(g.energy_e3(st), 1.0, 1e-13);  // |Omega| = 1
    EXPECT_EQ(st.step, 0);
}

class SchemeInvariants : public ::testing::TestWithParam<int> {};

TEST_P(SchemeInvariants, MassDivergenceAndMeanFreeAccumulator) {
    const int order = GetParam();
    GaugeUzawa g(unit_mesh(8), params_with(0.01));
    const SchemeState init = g.init_state(bump_data());
    const double mass0 = g.integral(init.now.eta);
    SchemeState st = g.gu1_step(init);
    if (order == 2) g.start_second_order(st, init);
    for (int k = 0; k < 8; ++k) {
        if (order == 2) st = g.gu2_step(st);
        else st = g.gu1_step(st);
        EXPECT_NEAR(g.integral(st.now.eta), mass0, 1e-10 * std::abs(mass0));
        EXPECT_LE(g.divergence_residual(st.now.u), 1e-8);
        EXPECT_NEAR(g.integral(st.now.s), 0.0, 1e-12);
        EXPECT_NEAR(g.integral(st.now.rho), 0.0, 1e-12);
    }
}

INSTANTIATE_TEST_SUITE_P(Orders, SchemeInvariants, ::testing::Values(1, 2));

TEST(Scheme, WeightedEnergyIsNonIncreasing) {
    // unforced, no-slip: the weighted functional telescopes step by step
    for (double tau : {1e-2, 1e-1}) {
        GaugeUzawa g(unit_mesh(8), params_with(tau));
        SchemeState st = g.init_state(bump_data());
        double prev = g.energy_weighted(st);
        for (int k = 0; k < 20; ++k) {
            st = g.gu1_step(st);
            const double e = g.energy_weighted(st);
            EXPECT_LE(e, prev * (1.0 + 1e-12)) << "tau " << tau << " step " << st.step;
            prev = e;
        }
    }
}

TEST(Scheme, EnergyFunctionalsAgreeWhenWeightIsOne) {
    GaugeUzawa g(unit_mesh(6), params_with(1.0));
    SchemeState st = g.gu1_step(g.gu1_step(g.init_state(bump_data())));
    EXPECT_NEAR(g.energy_e3(st), g.energy_weighted(st), 1e-13 * g.energy_e3(st));
}

TEST(Scheme, GmresMatchesDirectSolve) {
    GaugeUzawa direct(unit_mesh(6), params_with(0.02));
    SchemeParams p = params_with(0.02, LinearSolver::gmres);
    p.krylov_tol = 1e-12;
    GaugeUzawa krylov(unit_mesh(6), p);
    SchemeState a = direct.init_state(bump_data()), b = krylov.init_state(bump_data());
    for (int k = 0; k < 3; ++k) {
        a = direct.gu1_step(a);
        b = krylov.gu1_step(b);
    }
    EXPECT_LE(rel_diff(b.now.eta.coeffs(), a.now.eta.coeffs()), 1e-8);
    EXPECT_LE(rel_diff(b.now.u_hat.coeffs(), a.now.u_hat.coeffs()), 1e-8);
    EXPECT_LE(rel_diff(b.now.sigma.coeffs(), a.now.sigma.coeffs()), 1e-8);
}

TEST(Scheme, Deterministic) {
    const auto run = [] {
        GaugeUzawa g(unit_mesh(5), params_with(0.05));
        const SchemeState init = g.init_state(bump_data());
        SchemeState st = g.gu1_step(init);
        g.start_second_order(st, init);
        for (int k = 0; k < 3; ++k) st = g.gu2_step(st);
        return st;
    };
    const SchemeState a = run(), b = run();
    EXPECT_EQ(a.now.eta.coeffs(), b.now.eta.coeffs());
    EXPECT_EQ(a.now.u_hat.coeffs(), b.now.u_hat.coeffs());
    EXPECT_EQ(a.now.p.coeffs(), b.now.p.coeffs());
}

TEST(Scheme, PressureUpdateIdentity) {
    // first order: p = mu3 s - rho / tau
    SchemeParams prm = params_with(0.05);
    prm.mu3 = 0.7;
    GaugeUzawa g(unit_mesh(5), prm);
    const SchemeState st = g.gu1_step(g.gu1_step(g.init_state(bump_data())));
    for (std::size_t i = 0; i < st.now.p.coeffs().size(); ++i)
        EXPECT_NEAR(st.now.p[i], 0.7 * st.now.s[i] - st.now.rho[i] / 0.05, 1e-10 * (1.0 + std::abs(st.now.p[i])));
}

TEST(Scheme, RejectsBadInput) {
    EXPECT_THROW(GaugeUzawa(unit_mesh(2), params_with(0.0)), std::invalid_argument);
    EXPECT_THROW(GaugeUzawa(unit_mesh(2), params_with(-1.0)), std::invalid_argument);
    SchemeParams p = params_with(0.1);
    p.mu2 = 0.0;
    EXPECT_THROW(GaugeUzawa(unit_mesh(2), p), std::invalid_argument);
    GaugeUzawa g(unit_mesh(2), params_with(0.1));
    EXPECT_THROW(g.gu2_step(g.init_state(zero_data())), std::logic_error);
}
