#include "smalldiff/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "smalldiff/error.hpp"
#include "smalldiff/statistic.hpp"

namespace smalldiff::harness {

WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z) {
    if (trials == 0) {
        return {0.0, 1.0};
    }
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {std::max(0.0, std::min(center - half, p)), std::min(1.0, std::max(center + half, p))};
}

double median(std::vector<double> values) {
    if (values.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1) {
        return upper;
    }
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& task) {
    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t r = next++; r < n; r = next++) {
            try {
                task(r);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
                next = n;
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned w = 0; w < threads; ++w) {
            pool.emplace_back(worker);
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

namespace {

void check_config(const ExperimentConfig& cfg) {
    if (cfg.replications < kMinReplications) {
        throw ConfigError("replications must be at least 100");
    }
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) {
        throw ConfigError("alpha must lie in (0, 1)");
    }
    if (cfg.eps_list.empty()) {
        throw ConfigError("eps_list must not be empty");
    }
    for (double e : cfg.eps_list) {
        if (!(e > 0.0) || e > 1.0) {
            throw ConfigError("every eps must lie in (0, 1]");
        }
    }
    if (!(cfg.gamma > 0.0)) {
        throw ConfigError("gamma must be positive");
    }
    if (cfg.substeps < 1) {
        throw ConfigError("substeps must be at least 1");
    }
}

double sigma_error(double estimate, double truth) {
    const double diff = std::fabs(estimate - truth);
    return truth >= model::kDegenerateSigma ? diff / truth : diff;
}

struct Replicate {
    bool ok = false;
    bool reject = false;
    double statistic = 0.0;
    double sigma_hat = 0.0;
};

McRow run_row(const ExperimentConfig& cfg, const expr::Expression& simulating_drift, double eps) {
    const auto model = cfg.model.with_drift(simulating_drift).with_eps(eps);
    const auto grid = sim::make_grid(model.horizon(), eps, cfg.gamma, cfg.layout, {cfg.base_seed, 0});
    const double sigma_limit = model::limit_variance(model, model::solve_ode(model)).sigma_limit;

    std::vector<Replicate> results(cfg.replications);
    parallel_for(cfg.replications, cfg.threads, [&](std::size_t r) {
        Replicate out;
        try {
            const auto path = sim::simulate_path(model, grid, cfg.substeps, {cfg.base_seed, r});
            const auto report = stat::run_test(path, cfg.null_drift, cfg.alpha);
            out = {true, report.reject, report.statistic, report.sigma_hat.sigma_hat};
        } catch (const Error&) {
            out.ok = false;
        }
        results[r] = out;
    });

    McRow row;
    row.eps = eps;
    row.n_reps = cfg.replications;
    row.sigma_limit = sigma_limit;
    row.n_obs = grid.size();
    row.mesh = grid.mesh();
    std::vector<double> statistics;
    std::vector<double> sigma_errors;
    statistics.reserve(results.size());
    sigma_errors.reserve(results.size());
    for (const auto& r : results) {
        if (!r.ok) {
            ++row.errors;
            continue;
        }
        (r.reject ? row.rejections : row.acceptances) += 1;
        statistics.push_back(r.statistic);
        sigma_errors.push_back(sigma_error(r.sigma_hat, sigma_limit));
    }
    if (static_cast<double>(row.errors) > kMaxErrorRate * static_cast<double>(row.n_reps)) {
        throw Error(std::to_string(row.errors) + " of " + std::to_string(row.n_reps) +
                    " replications failed at eps=" + std::to_string(eps) + " (limit 1%)");
    }
    row.rejection_rate = static_cast<double>(row.rejections) / static_cast<double>(row.n_reps);
    const auto ci = wilson_interval(row.rejections, row.n_reps);
    row.wilson_ci_lo = ci.lo;
    row.wilson_ci_hi = ci.hi;
    row.median_statistic = median(std::move(statistics));
    row.median_sigma_hat_error = median(std::move(sigma_errors));
    return row;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

bool strictly_decreasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (!(v[i] < v[i - 1])) {
            return false;
        }
    }
    return true;
}

}  // namespace

McReport run_size_experiment(const ExperimentConfig& cfg) {
    check_config(cfg);
    const auto start = std::chrono::steady_clock::now();
    McReport report;
    report.kind = "size";
    for (double eps : cfg.eps_list) {
        report.rows.push_back(run_row(cfg, cfg.null_drift, eps));
    }
    report.wall_seconds = seconds_since(start);
    return report;
}

McReport run_power_experiment(const ExperimentConfig& cfg) {
    check_config(cfg);
    if (!cfg.alt_drift) {
        throw ConfigError("power experiment needs an alternative drift");
    }
    const auto separation = stat::separation_curve(*cfg.alt_drift, cfg.null_drift, cfg.model);
    if (!(separation.max_abs > kMinPowerSeparation)) {
        throw ConfigError("alternative is not separated from the null: max |int (S - S0)(x_t^S) dt| = " +
                          std::to_string(separation.max_abs));
    }
    const auto start = std::chrono::steady_clock::now();
    McReport report;
    report.kind = "power";
    report.separation = separation.max_abs;
    report.u_star = separation.u_star;
    for (double eps : cfg.eps_list) {
        report.rows.push_back(run_row(cfg, *cfg.alt_drift, eps));
    }
    report.wall_seconds = seconds_since(start);
    return report;
}

SweepReport run_convergence_sweep(const ExperimentConfig& cfg) {
    check_config(cfg);
    if (cfg.eps_list.size() < 3) {
        throw ConfigError("convergence sweep needs at least three eps values");
    }
    if (!strictly_decreasing(cfg.eps_list)) {
        throw ConfigError("convergence sweep eps values must be strictly decreasing");
    }
    const auto start = std::chrono::steady_clock::now();
    SweepReport report;
    for (double eps : cfg.eps_list) {
        const auto model = cfg.model.with_drift(cfg.null_drift).with_eps(eps);
        const auto grid = sim::make_grid(model.horizon(), eps, cfg.gamma, cfg.layout, {cfg.base_seed, 0});
        const double sigma_limit = model::limit_variance(model, model::solve_ode(model)).sigma_limit;

        struct Diag {
            double u_v, v_m, sigma_err;
        };
        std::vector<Diag> diags(cfg.replications);
        parallel_for(cfg.replications, cfg.threads, [&](std::size_t r) {
            const auto path = sim::simulate_path(model, grid, cfg.substeps, {cfg.base_seed, r}, true);
            const auto u = stat::u_statistic(path, cfg.null_drift);
            const auto v = stat::v_statistic(path, cfg.null_drift);
            const auto m = stat::m_statistic(path, cfg.null_drift);
            diags[r] = {stat::sup_distance(u, v), stat::sup_distance(v, m),
                        sigma_error(stat::sigma_hat(path).sigma_hat, sigma_limit)};
        });

        SweepRow row;
        row.eps = eps;
        row.n_reps = cfg.replications;
        row.sigma_limit = sigma_limit;
        std::vector<double> uv, vm, se;
        for (const auto& d : diags) {
            uv.push_back(d.u_v);
            vm.push_back(d.v_m);
            se.push_back(d.sigma_err);
        }
        row.median_sup_u_minus_v = median(std::move(uv));
        row.median_sup_v_minus_m = median(std::move(vm));
        row.median_sigma_hat_error = median(std::move(se));
        report.rows.push_back(row);
    }
    auto column = [&](auto member) {
        std::vector<double> out;
        for (const auto& row : report.rows) {
            out.push_back(row.*member);
        }
        return out;
    };
    report.u_minus_v_decreasing = strictly_decreasing(column(&SweepRow::median_sup_u_minus_v));
    report.v_minus_m_decreasing = strictly_decreasing(column(&SweepRow::median_sup_v_minus_m));
    report.sigma_hat_error_decreasing = strictly_decreasing(column(&SweepRow::median_sigma_hat_error));
    report.wall_seconds = seconds_since(start);
    return report;
}

}  // namespace smalldiff::harness
