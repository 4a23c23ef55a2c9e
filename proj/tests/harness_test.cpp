#include "smalldiff/harness.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>

#include "smalldiff/error.hpp"
#include "smalldiff/io.hpp"

using namespace smalldiff;
using expr::Expression;
using harness::ExperimentConfig;

namespace {

ExperimentConfig ou_config(std::size_t reps, std::vector<double> eps_list, const char* sigma = "1") {
    return ExperimentConfig{
        .model = model::ModelSpec(Expression::parse("-x"), Expression::parse(sigma), 1.0, 1.0, eps_list.front()),
        .null_drift = Expression::parse("-x"),
        .alt_drift = std::nullopt,
        .gamma = 2.5,
        .substeps = 4,
        .replications = reps,
        .alpha = 0.05,
        .base_seed = 0,
        .eps_list = std::move(eps_list),
        .layout = sim::GridLayout::Uniform,
        .threads = 1,
    };
}

std::string dump(const harness::McReport& r) { return io::to_json(r, false).dump(); }

}  // namespace

TEST(Wilson, MatchesScoreFormula) {
    // Closed-form endpoints for 5/10 and 0/10 at z = 1.96.
    const auto a = harness::wilson_interval(5, 10);
    EXPECT_NEAR(a.lo, 0.2365931, 1e-6);
    EXPECT_NEAR(a.hi, 0.7634069, 1e-6);
    const auto b = harness::wilson_interval(0, 10);
    EXPECT_EQ(b.lo, 0.0);
    EXPECT_NEAR(b.hi, 0.2775328, 1e-6);
    const auto c = harness::wilson_interval(10, 10);
    EXPECT_NEAR(c.lo, 0.7224672, 1e-6);
    EXPECT_EQ(c.hi, 1.0);
}

TEST(Wilson, ContainsRate) {
    for (std::size_t n : {1u, 7u, 100u, 2000u}) {
        for (std::size_t k = 0; k <= n; k += std::max<std::size_t>(1, n / 37)) {
            const auto ci = harness::wilson_interval(k, n);
            const double p = static_cast<double>(k) / static_cast<double>(n);
            ASSERT_LE(ci.lo, p);
            ASSERT_GE(ci.hi, p);
            ASSERT_GE(ci.lo, 0.0);
            ASSERT_LE(ci.hi, 1.0);
        }
    }
}

TEST(Median, OddEvenEmpty) {
    EXPECT_EQ(harness::median({3.0, 1.0, 2.0}), 2.0);
    EXPECT_EQ(harness::median({4.0, 1.0, 3.0, 2.0}), 2.5);
    EXPECT_TRUE(std::isnan(harness::median({})));
}

TEST(ParallelFor, VisitsEveryIndexOnce) {
    std::vector<std::atomic<int>> hits(1000);
    harness::parallel_for(hits.size(), 4, [&](std::size_t r) { ++hits[r]; });
    for (const auto& h : hits) {
        EXPECT_EQ(h.load(), 1);
    }
}

TEST(ParallelFor, RethrowsWorkerFailure) {
    EXPECT_THROW(harness::parallel_for(100, 3,
                                       [](std::size_t r) {
                                           if (r == 42) throw std::runtime_error("boom");
                                       }),
                 std::runtime_error);
}

TEST(SizeExperiment, ConfigValidation) {
    EXPECT_THROW((void)harness::run_size_experiment(ou_config(99, {0.1})), ConfigError);
    auto cfg = ou_config(100, {0.1});
    cfg.alpha = 1.0;
    EXPECT_THROW((void)harness::run_size_experiment(cfg), ConfigError);
    cfg = ou_config(100, {0.1, 1.5});
    EXPECT_THROW((void)harness::run_size_experiment(cfg), ConfigError);
}

TEST(SizeExperiment, DeterministicAcrossRunsAndThreads) {
    auto cfg = ou_config(100, {0.1, 0.05});
    const auto a = harness::run_size_experiment(cfg);
    const auto b = harness::run_size_experiment(cfg);
    cfg.threads = 3;
    const auto c = harness::run_size_experiment(cfg);
    EXPECT_EQ(dump(a), dump(b));
    EXPECT_EQ(dump(a), dump(c));
    cfg.base_seed = 1;
    EXPECT_NE(dump(a), dump(harness::run_size_experiment(cfg)));
}

TEST(SizeExperiment, RowBookkeeping) {
    const auto report = harness::run_size_experiment(ou_config(200, {0.1}));
    ASSERT_EQ(report.rows.size(), 1u);
    const auto& row = report.rows[0];
    EXPECT_EQ(report.kind, "size");
    EXPECT_EQ(row.n_reps, row.rejections + row.acceptances + row.errors);
    EXPECT_EQ(row.rejection_rate, static_cast<double>(row.rejections) / 200.0);
    EXPECT_LE(row.wilson_ci_lo, row.rejection_rate);
    EXPECT_GE(row.wilson_ci_hi, row.rejection_rate);
    EXPECT_NEAR(row.sigma_limit, 1.0, 1e-10);
    EXPECT_EQ(row.n_obs, 317u + 1u);
    EXPECT_FALSE(report.separation.has_value());
}

TEST(SizeExperiment, HalfLevelRejectsHalf) {
    // Fine sampling keeps the drift bias of sigma_hat (see SigmaHatBias) out
    // of the comparison; at gamma = 2.5 it lowers this rate to about 0.46.
    auto cfg = ou_config(500, {0.05});
    cfg.gamma = 3.5;
    cfg.substeps = 1;
    cfg.alpha = 0.5;
    const auto row = harness::run_size_experiment(cfg).rows[0];
    EXPECT_LE(row.wilson_ci_lo, 0.5) << row.rejection_rate;
    EXPECT_GE(row.wilson_ci_hi, 0.5) << row.rejection_rate;
}

TEST(SizeExperiment, TooManyFailuresAbort) {
    // sqrt(x) fails as soon as a path crosses zero, which most paths do here.
    auto cfg = ou_config(100, {0.5});
    cfg.model = model::ModelSpec(Expression::parse("-x"), Expression::parse("sqrt(x)"), 0.05, 1.0, 0.5);
    EXPECT_THROW((void)harness::run_size_experiment(cfg), Error);
}

TEST(PowerExperiment, RequiresSeparatedAlternative) {
    auto cfg = ou_config(100, {0.1});
    EXPECT_THROW((void)harness::run_power_experiment(cfg), ConfigError);
    cfg.alt_drift = Expression::parse("-x");
    EXPECT_THROW((void)harness::run_power_experiment(cfg), ConfigError);
}

TEST(PowerExperiment, ShiftedDriftIsDetected) {
    auto cfg = ou_config(200, {0.1, 0.05});
    cfg.alt_drift = Expression::parse("-x + 1");
    const auto report = harness::run_power_experiment(cfg);
    EXPECT_EQ(report.kind, "power");
    ASSERT_TRUE(report.separation.has_value());
    EXPECT_NEAR(*report.separation, 1.0, 1e-10);
    EXPECT_EQ(*report.u_star, 1.0);
    EXPECT_GE(report.rows[1].rejection_rate, 0.95);
    EXPECT_GE(report.rows[1].rejection_rate, report.rows[0].rejection_rate);
}

TEST(ConvergenceSweep, ConfigValidation) {
    EXPECT_THROW((void)harness::run_convergence_sweep(ou_config(100, {0.2, 0.1})), ConfigError);
    EXPECT_THROW((void)harness::run_convergence_sweep(ou_config(100, {0.2, 0.1, 0.1})), ConfigError);
    EXPECT_THROW((void)harness::run_convergence_sweep(ou_config(100, {0.1, 0.2, 0.05})), ConfigError);
}

TEST(ConvergenceSweep, DeterministicPathsHaveNoMartingalePart) {
    auto cfg = ou_config(100, {0.2, 0.1, 0.05}, "0");
    const auto report = harness::run_convergence_sweep(cfg);
    for (const auto& row : report.rows) {
        EXPECT_LT(row.median_sup_v_minus_m, 1e-6);
        EXPECT_EQ(row.sigma_limit, 0.0);
        EXPECT_GE(row.median_sigma_hat_error, 0.0);
    }
}

TEST(ConvergenceSweep, ApproximationTrends) {
    auto cfg = ou_config(200, {0.2, 0.1, 0.05});
    cfg.substeps = 8;
    const auto report = harness::run_convergence_sweep(cfg);
    EXPECT_TRUE(report.u_minus_v_decreasing);
    EXPECT_TRUE(report.v_minus_m_decreasing);
    EXPECT_TRUE(report.sigma_hat_error_decreasing);
}

TEST(SigmaHatBias, MatchesDriftContribution) {
    // For S = -x, sigma = 1 the drift adds about (h / eps^2) int_0^1 x_t^2 dt
    // to E[sigma_hat^2], with x_t = e^{-t}. At gamma = 2.5, eps = 0.05 the
    // shift is sqrt(1 + 0.2236 * 0.4323) - 1 = 0.047.
    auto cfg = ou_config(500, {0.05});
    const auto row = harness::run_size_experiment(cfg).rows[0];
    const double h = row.mesh;
    const double predicted = std::sqrt(1.0 + h / (0.05 * 0.05) * (1.0 - std::exp(-2.0)) / 2.0) - 1.0;
    EXPECT_NEAR(predicted, 0.047, 1e-3);
    EXPECT_NEAR(row.median_sigma_hat_error, predicted, 0.01);
}

TEST(SigmaHatBias, VanishesOnFinerSampling) {
    auto cfg = ou_config(100, {0.05});
    cfg.gamma = 3.5;
    cfg.substeps = 1;
    const auto row = harness::run_size_experiment(cfg).rows[0];
    EXPECT_LT(row.median_sigma_hat_error, 0.02);
}
