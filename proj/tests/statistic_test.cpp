#include "smalldiff/statistic.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "smalldiff/error.hpp"
#include "smalldiff/limitdist.hpp"

using namespace smalldiff;
using expr::Expression;
using model::ModelSpec;

namespace {

sim::ObservedPath observed(std::vector<double> times, std::vector<double> values, double eps) {
    return sim::ObservedPath{sim::SamplingGrid(std::move(times)), std::move(values), eps, 0, std::nullopt};
}

ModelSpec make(const char* drift, const char* sigma, double eps, double x0 = 1.0) {
    return ModelSpec(Expression::parse(drift), Expression::parse(sigma), x0, 1.0, eps);
}

Expression parse(const char* s) { return Expression::parse(s); }

// Value of a right-continuous step curve at u.
double step_value(const stat::TestCurve& c, double u) {
    const auto it = std::upper_bound(c.u_grid.begin(), c.u_grid.end(), u);
    return c.values[static_cast<std::size_t>(it - c.u_grid.begin()) - 1];
}

}  // namespace

TEST(UStatistic, NullEulerPathIsZero) {
    // Observations built by the Euler recursion of the null drift itself.
    const auto s0 = parse("-x + 0.5*sin(x)");
    std::vector<double> t{0.0};
    std::vector<double> x{1.0};
    for (int i = 1; i <= 50; ++i) {
        t.push_back(i / 50.0);
        x.push_back(x.back() + s0.eval(x.back()) * (t[i] - t[i - 1]));
    }
    const auto c = stat::u_statistic(observed(t, x, 0.1), s0);
    EXPECT_LT(c.sup_abs, 1e-13);
}

TEST(UStatistic, DirectSums) {
    {
        const auto c = stat::u_statistic(observed({0, 0.5, 1}, {0, 1, 1}, 1.0), parse("0"));
        EXPECT_EQ(c.values, (std::vector<double>{0, 1, 1}));
        EXPECT_EQ(c.sup_abs, 1.0);
        EXPECT_EQ(c.u_grid, (std::vector<double>{0, 0.5, 1}));
    }
    {
        const auto c = stat::u_statistic(observed({0, 0.5, 1}, {0, 1, 1}, 0.5), parse("2"));
        EXPECT_EQ(c.values, (std::vector<double>{0, 0, -2}));
        EXPECT_EQ(c.sup_abs, 2.0);
    }
}

TEST(UStatistic, PropagatesEvaluationErrors) {
    EXPECT_THROW((void)stat::u_statistic(observed({0, 1}, {0, 1}, 0.1), parse("1/x")), EvalError);
}

TEST(UStatistic, SupAttainedAtStoredPoints) {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> t{0.0};
        std::vector<double> x{unit(gen)};
        for (int i = 0; i < 30; ++i) {
            t.push_back(t.back() + 0.01 + unit(gen));
            x.push_back(x.back() + unit(gen) - 0.5);
        }
        const auto c = stat::u_statistic(observed(t, x, 0.2), parse("cos(x)"));
        double dense = 0.0;
        for (int k = 0; k <= 20'000; ++k) {
            dense = std::max(dense, std::fabs(step_value(c, t.back() * k / 20'000.0)));
        }
        EXPECT_LE(dense, c.sup_abs);
        EXPECT_TRUE(std::any_of(c.values.begin(), c.values.end(),
                                [&](double v) { return std::fabs(v) == c.sup_abs; }));
    }
}

TEST(SigmaHat, Examples) {
    EXPECT_EQ(stat::sigma_hat(observed({0, 0.5, 1}, {2, 2, 2}, 0.1)).sigma_hat, 0.0);
    const auto p = observed({0, 0.5, 1}, {0, 0.1, -0.1}, 0.5);
    const auto v = stat::sigma_hat(p);
    EXPECT_NEAR(v.sigma_hat, std::sqrt(0.2), 1e-15);
    EXPECT_NEAR(v.sigma_hat, 0.447214, 1e-6);
    EXPECT_EQ(v.n_increments, 2u);
    EXPECT_EQ(stat::sigma_hat(observed({0, 0.5, 1}, {0, 0.1, -0.1}, 1.0)).sigma_hat, v.sigma_hat / 2.0);
}

TEST(SigmaHat, EpsHomogeneityIsExact) {
    std::mt19937_64 gen(5);
    std::normal_distribution<double> z;
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> t{0.0};
        std::vector<double> x{z(gen)};
        for (int i = 1; i < 40; ++i) {
            t.push_back(i);
            x.push_back(x.back() + z(gen));
        }
        const double eps = std::ldexp(1.0, -1 - trial % 8);
        const double a = stat::sigma_hat(observed(t, x, eps)).sigma_hat;
        const double b = stat::sigma_hat(observed(t, x, 2.0 * eps)).sigma_hat;
        ASSERT_EQ(a, 2.0 * b);
    }
}

TEST(RunTest, DegeneratePath) {
    EXPECT_THROW((void)stat::run_test(observed({0, 0.5, 1}, {1, 1, 1}, 0.1), parse("0"), 0.05), DegenerateError);
    EXPECT_THROW((void)stat::run_test(observed({0, 1}, {0, 1}, 0.1), parse("0"), 0.0), std::invalid_argument);
    EXPECT_THROW((void)stat::run_test(observed({0, 1}, {0, 1}, 0.1), parse("0"), 1.0), std::invalid_argument);
}

TEST(RunTest, BoundaryStatistic) {
    // Increments {1, -1} and constant null drift -c: Sigma = sqrt(2), U = {0, 1 + c/2, c}.
    const double q = limitdist::standard().quantile(0.95);
    for (double d : {2.2414, q, std::nextafter(q, 0.0), std::nextafter(q, 10.0), q * (1 + 1e-12),
                     q * (1 - 1e-12)}) {
        const double c = d * std::sqrt(2.0);
        const auto r = stat::run_test(observed({0, 0.5, 1}, {0, 1, 0}, 1.0), parse(std::to_string(-c).c_str()), 0.05);
        EXPECT_EQ(r.reject, r.statistic > r.critical_value);
        EXPECT_EQ(r.reject, r.p_value < r.alpha) << d;
    }
    const auto r = stat::run_test(observed({0, 0.5, 1}, {0, 1, 0}, 1.0), parse("-3.16981"), 0.05);
    EXPECT_NEAR(r.statistic, 2.2414, 1e-5);
    EXPECT_NEAR(r.p_value, 0.05, 1e-3);
    EXPECT_NEAR(r.critical_value, 2.2414, 1e-3);
}

TEST(RunTest, ConsistencyOnSimulatedNullPaths) {
    const auto m = make("-x", "1", 0.05);
    const auto grid = sim::make_grid(1.0, 0.05, 2.5);
    for (double alpha : {0.01, 0.05, 0.5}) {
        for (std::uint64_t r = 0; r < 100; ++r) {
            const auto rep = stat::run_test(sim::simulate_path(m, grid, 4, {0, r}), m.drift(), alpha);
            ASSERT_EQ(rep.reject, rep.statistic > limitdist::standard().quantile(1.0 - alpha));
            ASSERT_EQ(rep.reject, rep.p_value < alpha);
            ASSERT_GE(rep.p_value, 0.0);
            ASSERT_LE(rep.p_value, 1.0);
            ASSERT_EQ(rep.statistic, rep.curve.sup_abs / rep.sigma_hat.sigma_hat);
        }
    }
}

TEST(VStatistic, EqualsUWithoutSubsteps) {
    const auto m = make("-x + sin(x)", "1", 0.1);
    const auto path = sim::simulate_path(m, sim::make_grid(1.0, 0.1, 2.5), 1, {0, 4}, true);
    const auto u = stat::u_statistic(path, m.drift());
    const auto v = stat::v_statistic(path, m.drift());
    EXPECT_EQ(u.values, v.values);
    EXPECT_THROW((void)stat::v_statistic(sim::simulate_path(m, path.grid, 1, {0, 4}), m.drift()),
                 std::invalid_argument);
    EXPECT_THROW((void)stat::m_statistic(sim::simulate_path(m, path.grid, 1, {0, 4}), m.drift()),
                 std::invalid_argument);
}

TEST(VStatistic, DeterministicPathBoundShrinks) {
    // sigma = 0: |U - V| <= eps^-1 K sup|S0(x)| T h.
    const auto m = make("-x", "0", 0.1);
    double previous = INFINITY;
    for (double gamma : {2.0, 2.5, 3.0}) {
        const auto grid = sim::make_grid(1.0, 0.1, gamma);
        const auto path = sim::simulate_path(m, grid, 8, {0, 0}, true);
        const double d = stat::sup_distance(stat::u_statistic(path, m.drift()), stat::v_statistic(path, m.drift()));
        EXPECT_LE(d, 1.0 / 0.1 * 1.0 * 1.0 * 1.0 * grid.mesh());
        EXPECT_LT(d, previous);
        previous = d;
    }
}

TEST(MStatistic, TerminalValueMatchesV) {
    const auto m = make("-x", "1 + 0.3*sin(x)", 0.1);
    const auto grid = sim::make_grid(1.0, 0.1, 2.5, sim::GridLayout::Jittered, {2, 0});
    for (std::uint64_t r = 0; r < 20; ++r) {
        const auto path = sim::simulate_path(m, grid, 8, {2, r}, true);
        const auto v = stat::v_statistic(path, m.drift());
        const auto mm = stat::m_statistic(path, m.drift());
        EXPECT_NEAR(mm.values.back(), v.values.back(), 1e-12);
        EXPECT_EQ(mm.u_grid, path.fine->times);
        EXPECT_EQ(mm.values.front(), 0.0);
    }
}

TEST(MStatistic, DeterministicPathVanishes) {
    const auto m = make("-x + sin(x)", "0", 0.1);
    const auto path = sim::simulate_path(m, sim::make_grid(1.0, 0.1, 2.5), 8, {0, 0}, true);
    EXPECT_LT(stat::m_statistic(path, m.drift()).sup_abs, 1e-6);
}

TEST(DriftDiscrepancy, Examples) {
    const auto m = make("-x", "1", 0.1);
    const auto path = sim::simulate_path(m, sim::make_grid(1.0, 0.1, 2.5), 4, {0, 1});
    EXPECT_EQ(stat::drift_discrepancy(path, m.drift(), m.drift()).sup_abs, 0.0);
    const auto c = stat::drift_discrepancy(path, parse("-x + 0.5"), m.drift());
    for (std::size_t j = 0; j < path.grid.size(); ++j) {
        EXPECT_NEAR(c.values[j], 0.5 * path.grid.times()[j] / 0.1, 1e-12);
    }
}

TEST(DriftDiscrepancy, DecompositionIdentity) {
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const char* drifts[] = {"-x", "-x + 1", "sin(x)", "x^2 - 1", "0.3*tanh(x)", "2"};
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> t{0.0};
        std::vector<double> x{2.0 * unit(gen) - 1.0};
        const int n = 2 + static_cast<int>(gen() % 60);
        for (int i = 0; i < n; ++i) {
            t.push_back(t.back() + 0.001 + 0.1 * unit(gen));
            x.push_back(x.back() + 0.2 * (unit(gen) - 0.5));
        }
        const auto p = observed(t, x, 0.01 + unit(gen));
        const auto s = parse(drifts[gen() % 6]);
        const auto s0 = parse(drifts[gen() % 6]);
        const auto u0 = stat::u_statistic(p, s0);
        const auto us = stat::u_statistic(p, s);
        const auto ud = stat::drift_discrepancy(p, s, s0);
        for (std::size_t j = 0; j < t.size(); ++j) {
            ASSERT_NEAR(u0.values[j], us.values[j] + ud.values[j], 1e-10);
        }
    }
}

TEST(SupDistance, StepCurves) {
    const stat::TestCurve a{{0.0, 0.5, 1.0}, {0.0, 1.0, 2.0}, 2.0};
    const stat::TestCurve b{{0.0, 0.25, 0.75, 1.0}, {0.0, 0.5, 3.0, 2.0}, 3.0};
    // On [0.75, 1): a = 1, b = 3.
    EXPECT_EQ(stat::sup_distance(a, b), 2.0);
    EXPECT_EQ(stat::sup_distance(b, a), 2.0);
    EXPECT_EQ(stat::sup_distance(a, a), 0.0);
}

TEST(Separation, NullAgainstItself) {
    const auto m = make("-x", "1", 0.1);
    const auto s = stat::separation_curve(m.drift(), m.drift(), m);
    EXPECT_EQ(s.max_abs, 0.0);
    EXPECT_FALSE(s.separated);
}

TEST(Separation, ConstantDifference) {
    const auto m = make("-x", "1", 0.1);
    const auto s = stat::separation_curve(parse("-x + 1"), m.drift(), m);
    EXPECT_NEAR(s.max_abs, 1.0, 1e-12);
    EXPECT_EQ(s.u_star, 1.0);
    EXPECT_TRUE(s.separated);
    for (std::size_t k = 0; k < s.curve.u_grid.size(); ++k) {
        ASSERT_NEAR(s.curve.values[k], s.curve.u_grid[k], 1e-12);
    }
}

TEST(Separation, MatchesBruteForceOracle) {
    // x' = -x + sin x from x0 = 1; A(u) = int_0^u sin(x_t) dt. The oracle
    // integrates with 10^6 RK4 steps and a trapezoid sum along the way.
    constexpr int n = 1'000'000;
    const double h = 1.0 / n;
    auto f = [](double x) { return -x + std::sin(x); };
    double x = 1.0;
    double integral = 0.0;
    double best = 0.0;
    for (int k = 0; k < n; ++k) {
        const double k1 = f(x);
        const double k2 = f(x + 0.5 * h * k1);
        const double k3 = f(x + 0.5 * h * k2);
        const double k4 = f(x + h * k3);
        const double next = x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        integral += 0.5 * h * (std::sin(x) + std::sin(next));
        best = std::max(best, std::fabs(integral));
        x = next;
    }
    const auto m = make("-x", "1", 0.1);
    const auto s = stat::separation_curve(parse("-x + sin(x)"), m.drift(), m);
    EXPECT_NEAR(s.max_abs, best, 1e-6);
    EXPECT_NEAR(s.curve.values.back(), integral, 1e-6);
    EXPECT_EQ(s.u_star, 1.0);
}

TEST(Separation, FollowsAlternativePath) {
    // Null drift 0 and alternative x: integrand x_t^S = e^t along the alternative path.
    const auto m = make("0", "1", 0.1);
    const auto s = stat::separation_curve(parse("x"), m.drift(), m);
    EXPECT_NEAR(s.max_abs, std::exp(1.0) - 1.0, 1e-10);
}

TEST(DriftDiscrepancy, ConcentratesNearSeparation) {
    const auto null_drift = parse("-x");
    const auto m = make("-x + sin(x)", "1", 0.05);
    const double a = stat::separation_curve(m.drift(), null_drift, m).max_abs;
    const auto grid = sim::make_grid(1.0, 0.05, 2.5);
    std::vector<double> scaled;
    for (std::uint64_t r = 0; r < 100; ++r) {
        const auto path = sim::simulate_path(m, grid, 4, {8, r});
        scaled.push_back(0.05 * stat::drift_discrepancy(path, m.drift(), null_drift).sup_abs);
    }
    std::nth_element(scaled.begin(), scaled.begin() + 50, scaled.end());
    EXPECT_NEAR(scaled[50], a, 0.2 * a);
}
