#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "smalldiff/expr.hpp"
#include "smalldiff/model.hpp"
#include "smalldiff/simulate.hpp"

namespace smalldiff::harness {

struct ExperimentConfig {
    /// Diffusion, x0 and T are taken from here; the drift used for
    /// simulation is `null_drift` (size, sweep) or `alt_drift` (power).
    model::ModelSpec model;
    expr::Expression null_drift;
    std::optional<expr::Expression> alt_drift;
    double gamma = 2.5;
    std::size_t substeps = 4;
    std::size_t replications = 2000;
    double alpha = 0.05;
    std::uint64_t base_seed = 0;
    std::vector<double> eps_list;
    sim::GridLayout layout = sim::GridLayout::Uniform;
    /// Worker threads; 0 picks the hardware concurrency. Never affects results.
    unsigned threads = 0;
};

inline constexpr std::size_t kMinReplications = 100;
/// Share of failed replications above which an experiment is aborted.
inline constexpr double kMaxErrorRate = 0.01;

struct WilsonInterval {
    double lo = 0.0;
    double hi = 1.0;
};

/// 95% Wilson score interval for `successes` out of `trials`.
[[nodiscard]] WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054);

/// Median of `values` (mean of the middle pair for even sizes). NaN when empty.
[[nodiscard]] double median(std::vector<double> values);

struct McRow {
    double eps = 0.0;
    std::size_t n_reps = 0;
    std::size_t rejections = 0;
    std::size_t acceptances = 0;
    std::size_t errors = 0;
    double rejection_rate = 0.0;
    double wilson_ci_lo = 0.0;
    double wilson_ci_hi = 0.0;
    double median_statistic = 0.0;
    /// Median of |sigma_hat - Sigma| / Sigma with Sigma from the simulating model.
    double median_sigma_hat_error = 0.0;
    double sigma_limit = 0.0;
    std::size_t n_obs = 0;
    double mesh = 0.0;
};

struct McReport {
    std::string kind;  ///< "size" or "power"
    std::vector<McRow> rows;
    /// Power runs only.
    std::optional<double> separation;
    std::optional<double> u_star;
    double wall_seconds = 0.0;
};

struct SweepRow {
    double eps = 0.0;
    std::size_t n_reps = 0;
    double median_sup_u_minus_v = 0.0;
    double median_sup_v_minus_m = 0.0;
    /// Relative error when Sigma > 0, absolute error otherwise.
    double median_sigma_hat_error = 0.0;
    double sigma_limit = 0.0;
};

struct SweepReport {
    std::vector<SweepRow> rows;
    bool u_minus_v_decreasing = false;
    bool v_minus_m_decreasing = false;
    bool sigma_hat_error_decreasing = false;
    double wall_seconds = 0.0;
};

/// Simulates under the null drift and tests against it. Replication r of
/// every eps uses stream key (base_seed, r). Failed replications are
/// counted as errors; more than kMaxErrorRate of them throws Error.
[[nodiscard]] McReport run_size_experiment(const ExperimentConfig& cfg);

/// Simulates under `alt_drift` and tests against `null_drift`. Throws
/// ConfigError if the alternative is absent or not separated (max |A| <= 1e-6).
[[nodiscard]] McReport run_power_experiment(const ExperimentConfig& cfg);

/// Convergence diagnostics under the null: per eps, medians of sup|U - V|,
/// sup|V - M| and the sigma_hat error. Requires >= 3 strictly decreasing eps.
[[nodiscard]] SweepReport run_convergence_sweep(const ExperimentConfig& cfg);

/// Minimum separation accepted by run_power_experiment.
inline constexpr double kMinPowerSeparation = 1e-6;

/// Runs `task(r)` for r in [0, n) on `threads` workers. Output placement is
/// the caller's job; the call order across workers is unspecified.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& task);

}  // namespace smalldiff::harness
