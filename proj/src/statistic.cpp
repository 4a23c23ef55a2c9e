#include "smalldiff/statistic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "smalldiff/error.hpp"
#include "smalldiff/limitdist.hpp"

namespace smalldiff::stat {

namespace {

double sup_abs_of(const std::vector<double>& values) {
    double best = 0.0;
    for (double v : values) {
        best = std::max(best, std::fabs(v));
    }
    return best;
}

void require_observations(const sim::ObservedPath& path) {
    if (path.values.size() < 2 || path.values.size() != path.grid.size()) {
        throw std::invalid_argument("path needs at least two observations matching its grid");
    }
    if (!(path.eps > 0.0)) {
        throw std::invalid_argument("path eps must be positive");
    }
}

const sim::FinePath& require_fine(const sim::ObservedPath& path) {
    require_observations(path);
    if (!path.fine) {
        throw std::invalid_argument("fine path data missing: simulate with keep_fine enabled");
    }
    return *path.fine;
}

// Left-point Riemann sum of S0 over fine steps [from, to).
double riemann_drift(const sim::FinePath& fine, const expr::Expression& null_drift, std::size_t from,
                     std::size_t to) {
    double sum = 0.0;
    for (std::size_t k = from; k < to; ++k) {
        sum += null_drift.eval(fine.values[k]) * (fine.times[k + 1] - fine.times[k]);
    }
    return sum;
}

}  // namespace

TestCurve u_statistic(const sim::ObservedPath& path, const expr::Expression& null_drift) {
    require_observations(path);
    const auto t = path.grid.times();
    const auto& x = path.values;
    const double inv_eps = 1.0 / path.eps;

    TestCurve curve;
    curve.u_grid.assign(t.begin(), t.end());
    curve.values.resize(t.size());
    curve.values[0] = 0.0;
    double cumulative = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) {
        cumulative += x[i] - x[i - 1] - null_drift.eval(x[i - 1]) * (t[i] - t[i - 1]);
        curve.values[i] = inv_eps * cumulative;
    }
    curve.sup_abs = sup_abs_of(curve.values);
    return curve;
}

VarianceEstimate sigma_hat(const sim::ObservedPath& path) {
    require_observations(path);
    double qv = 0.0;
    for (std::size_t i = 1; i < path.values.size(); ++i) {
        const double d = path.values[i] - path.values[i - 1];
        qv += d * d;
    }
    return {std::sqrt(qv) / path.eps, path.values.size() - 1};
}

TestReport run_test(const sim::ObservedPath& path, const expr::Expression& null_drift, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("alpha must lie in (0, 1)");
    }
    TestReport report;
    report.alpha = alpha;
    report.sigma_hat = sigma_hat(path);
    if (report.sigma_hat.sigma_hat < kDegenerateSigmaHat) {
        throw DegenerateError("degenerate path: estimated limit standard deviation is zero");
    }
    report.curve = u_statistic(path, null_drift);
    report.statistic = report.curve.sup_abs / report.sigma_hat.sigma_hat;

    const auto& law = limitdist::standard();
    report.critical_value = law.quantile(1.0 - alpha);
    report.p_value = law.p_value(report.statistic);
    report.reject = report.statistic > report.critical_value;
    // The quantile is only accurate to 1e-8 in probability, so near the
    // boundary the p-value is pinned to agree with the decision.
    if (report.reject && report.p_value >= alpha) {
        report.p_value = std::nextafter(alpha, 0.0);
    } else if (!report.reject && report.p_value < alpha) {
        report.p_value = alpha;
    }
    return report;
}

TestCurve v_statistic(const sim::ObservedPath& path, const expr::Expression& null_drift) {
    const auto& fine = require_fine(path);
    const auto t = path.grid.times();
    const auto& x = path.values;
    const double inv_eps = 1.0 / path.eps;

    TestCurve curve;
    curve.u_grid.assign(t.begin(), t.end());
    curve.values.resize(t.size());
    curve.values[0] = 0.0;
    double cumulative = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) {
        cumulative += x[i] - x[i - 1] - riemann_drift(fine, null_drift, fine.obs_index[i - 1], fine.obs_index[i]);
        curve.values[i] = inv_eps * cumulative;
    }
    curve.sup_abs = sup_abs_of(curve.values);
    return curve;
}

TestCurve m_statistic(const sim::ObservedPath& path, const expr::Expression& null_drift) {
    const auto& fine = require_fine(path);
    const double inv_eps = 1.0 / path.eps;

    TestCurve curve;
    curve.u_grid = fine.times;
    curve.values.resize(fine.times.size());
    curve.values[0] = 0.0;
    double cumulative = 0.0;
    for (std::size_t k = 1; k < fine.times.size(); ++k) {
        const double dt = fine.times[k] - fine.times[k - 1];
        cumulative += fine.values[k] - fine.values[k - 1] - null_drift.eval(fine.values[k - 1]) * dt;
        curve.values[k] = inv_eps * cumulative;
    }
    curve.sup_abs = sup_abs_of(curve.values);
    return curve;
}

TestCurve drift_discrepancy(const sim::ObservedPath& path, const expr::Expression& alt_drift,
                            const expr::Expression& null_drift) {
    require_observations(path);
    const auto t = path.grid.times();
    const auto& x = path.values;
    const double inv_eps = 1.0 / path.eps;

    TestCurve curve;
    curve.u_grid.assign(t.begin(), t.end());
    curve.values.resize(t.size());
    curve.values[0] = 0.0;
    double cumulative = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) {
        cumulative += (alt_drift.eval(x[i - 1]) - null_drift.eval(x[i - 1])) * (t[i] - t[i - 1]);
        curve.values[i] = inv_eps * cumulative;
    }
    curve.sup_abs = sup_abs_of(curve.values);
    return curve;
}

double sup_distance(const TestCurve& a, const TestCurve& b) {
    if (a.u_grid.empty() || b.u_grid.empty()) {
        throw std::invalid_argument("sup_distance: empty curve");
    }
    std::size_t i = 0;
    std::size_t j = 0;
    double best = std::fabs(a.values[0] - b.values[0]);
    // Walk the merged grid; at each point both curves take their latest value.
    while (i + 1 < a.u_grid.size() || j + 1 < b.u_grid.size()) {
        const double next_a = i + 1 < a.u_grid.size() ? a.u_grid[i + 1] : INFINITY;
        const double next_b = j + 1 < b.u_grid.size() ? b.u_grid[j + 1] : INFINITY;
        const double u = std::min(next_a, next_b);
        if (next_a == u) {
            ++i;
        }
        if (next_b == u) {
            ++j;
        }
        best = std::max(best, std::fabs(a.values[i] - b.values[j]));
    }
    return best;
}

SeparationCurve separation_curve(const expr::Expression& alt_drift, const expr::Expression& null_drift,
                                 const model::ModelSpec& model_with_alt) {
    const auto alt_model = model_with_alt.with_drift(alt_drift);
    const auto path = model::solve_ode(alt_model);
    const std::size_t n = path.values.size();
    std::vector<double> f(n);
    for (std::size_t k = 0; k < n; ++k) {
        f[k] = alt_drift.eval(path.values[k]) - null_drift.eval(path.values[k]);
    }

    SeparationCurve out;
    out.curve.u_grid = path.times;
    out.curve.values.assign(n, 0.0);
    const double h = path.step;
    // Simpson over each interval pair; the midpoint node uses the integral of
    // the same interpolating parabola over its first half.
    for (std::size_t m = 0; m + 2 < n; m += 2) {
        const double base = out.curve.values[m];
        out.curve.values[m + 1] = base + h / 12.0 * (5.0 * f[m] + 8.0 * f[m + 1] - f[m + 2]);
        out.curve.values[m + 2] = base + h / 3.0 * (f[m] + 4.0 * f[m + 1] + f[m + 2]);
    }
    for (std::size_t k = 0; k < n; ++k) {
        const double v = std::fabs(out.curve.values[k]);
        if (v > out.max_abs) {
            out.max_abs = v;
            out.u_star = out.curve.u_grid[k];
        }
    }
    out.curve.sup_abs = out.max_abs;
    out.separated = out.max_abs >= kSeparationTolerance;
    return out;
}

}  // namespace smalldiff::stat
