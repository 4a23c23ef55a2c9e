#include "smalldiff/model.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "smalldiff/error.hpp"

namespace smalldiff::model {

ModelSpec::ModelSpec(expr::Expression drift, expr::Expression diffusion, double x0, double T, double eps)
    : drift_(std::move(drift)), diffusion_(std::move(diffusion)), x0_(x0), T_(T), eps_(eps) {
    if (!std::isfinite(x0)) {
        throw ConfigError("x0 must be finite");
    }
    if (!(T > 0.0) || !std::isfinite(T)) {
        throw ConfigError("horizon T must be positive and finite");
    }
    if (!(eps > 0.0) || eps > 1.0) {
        throw ConfigError("eps must lie in (0, 1]");
    }
    (void)drift_.eval(x0);
    (void)diffusion_.eval(x0);
}

ModelSpec ModelSpec::with_drift(expr::Expression drift) const {
    return ModelSpec(std::move(drift), diffusion_, x0_, T_, eps_);
}

ModelSpec ModelSpec::with_eps(double eps) const { return ModelSpec(drift_, diffusion_, x0_, T_, eps); }

double rk4_step(const expr::Expression& drift, double x, double dt) {
    const double k1 = drift.eval(x);
    const double k2 = drift.eval(x + 0.5 * dt * k1);
    const double k3 = drift.eval(x + 0.5 * dt * k2);
    const double k4 = drift.eval(x + dt * k3);
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

DeterministicPath solve_ode(const ModelSpec& model, double step) {
    const double T = model.horizon();
    if (!(step > 0.0) || step > T) {
        throw std::invalid_argument("solve_ode: require 0 < step <= T");
    }
    auto n = static_cast<std::size_t>(std::ceil(T / step));
    n += n % 2;
    const double h = T / static_cast<double>(n);

    DeterministicPath path;
    path.step = h;
    path.times.resize(n + 1);
    path.values.resize(n + 1);
    path.times[0] = 0.0;
    path.values[0] = model.x0();
    for (std::size_t i = 1; i <= n; ++i) {
        path.times[i] = i == n ? T : T * (static_cast<double>(i) / static_cast<double>(n));
        double next = 0.0;
        try {
            next = rk4_step(model.drift(), path.values[i - 1], h);
        } catch (const EvalError& e) {
            throw DivergenceError(std::string("drift evaluation failed (") + e.what() + ")",
                                  path.times[i - 1]);
        }
        if (!std::isfinite(next)) {
            throw DivergenceError("ODE state became non-finite", path.times[i]);
        }
        path.values[i] = next;
    }
    return path;
}

DeterministicPath solve_ode(const ModelSpec& model) { return solve_ode(model, model.horizon() / 1e4); }

std::vector<double> solve_ode_at(const expr::Expression& drift, double x0, std::span<const double> times,
                                 double max_step) {
    if (!(max_step > 0.0)) {
        throw std::invalid_argument("solve_ode_at: max_step must be positive");
    }
    std::vector<double> values(times.size());
    if (times.empty()) {
        return values;
    }
    double x = x0;
    double t = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double gap = times[i] - t;
        if (gap < 0.0) {
            throw std::invalid_argument("solve_ode_at: times must be ascending from 0");
        }
        if (gap > 0.0) {
            const auto pieces = static_cast<std::size_t>(std::ceil(gap / max_step));
            const double dt = gap / static_cast<double>(pieces);
            for (std::size_t k = 0; k < pieces; ++k) {
                x = rk4_step(drift, x, dt);
            }
            if (!std::isfinite(x)) {
                throw DivergenceError("ODE state became non-finite", times[i]);
            }
        }
        values[i] = x;
        t = times[i];
    }
    return values;
}

double simpson(std::span<const double> values, double step) {
    if (values.size() < 3 || values.size() % 2 == 0) {
        throw std::invalid_argument("simpson: need an even number of intervals (odd point count >= 3)");
    }
    double odd = 0.0;
    double even = 0.0;
    const std::size_t last = values.size() - 1;
    for (std::size_t i = 1; i < last; ++i) {
        (i % 2 == 1 ? odd : even) += values[i];
    }
    return step / 3.0 * (values.front() + 4.0 * odd + 2.0 * even + values.back());
}

LimitVariance limit_variance(const ModelSpec& model, const DeterministicPath& path) {
    std::vector<double> integrand(path.values.size());
    std::transform(path.values.begin(), path.values.end(), integrand.begin(), [&](double x) {
        const double s = model.diffusion().eval(x);
        return s * s;
    });
    const double integral = simpson(integrand, path.step);
    assert(integral >= 0.0);
    return {std::sqrt(std::max(integral, 0.0)), path.step};
}

std::pair<double, double> default_working_interval(const ModelSpec& model, const DeterministicPath& path) {
    const auto [min_it, max_it] = std::minmax_element(path.values.begin(), path.values.end());
    const double lo = std::min(model.x0() - 5.0, *min_it);
    const double hi = std::max(model.x0() + 5.0, *max_it);
    const double pad = 0.1 * (hi - lo);
    return {lo - pad, hi + pad};
}

namespace {

std::string format(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

// Warn when the slope estimate keeps growing with the interval, which is how
// a locally (but not globally) Lipschitz coefficient shows up numerically.
void check_global_lipschitz(const expr::Expression& e, const char* label, std::pair<double, double> interval,
                            double estimate, std::vector<std::string>& warnings) {
    const double mid = 0.5 * (interval.first + interval.second);
    const double half = interval.second - interval.first;
    double wider = 0.0;
    try {
        wider = expr::estimate_lipschitz(e, mid - half, mid + half, kLipschitzSamples);
    } catch (const EvalError& err) {
        warnings.push_back(std::string(label) + " cannot be evaluated on the doubled interval (" + err.what() +
                           "); Lipschitz growth not checked");
        return;
    }
    if (wider > 1.1 * estimate + 1e-9) {
        warnings.push_back(std::string(label) + " appears locally Lipschitz only: slope estimate " +
                           format(estimate) + " on [" + format(interval.first) + ", " +
                           format(interval.second) + "] grows to " + format(wider) +
                           " when the interval is doubled");
    }
}

}  // namespace

ValidationReport validate(const ModelSpec& model, std::optional<std::pair<double, double>> working_interval) {
    const auto path = solve_ode(model);
    const auto interval = working_interval.value_or(default_working_interval(model, path));
    if (!(interval.first < interval.second)) {
        throw ConfigError("working interval must satisfy lo < hi");
    }
    if (model.x0() < interval.first || model.x0() > interval.second) {
        throw ConfigError("working interval must contain x0");
    }

    ValidationReport report;
    report.working_interval = interval;
    report.lipschitz_drift = expr::estimate_lipschitz(model.drift(), interval.first, interval.second,
                                                      kLipschitzSamples);
    report.lipschitz_sigma = expr::estimate_lipschitz(model.diffusion(), interval.first, interval.second,
                                                      kLipschitzSamples);
    check_global_lipschitz(model.drift(), "drift", interval, report.lipschitz_drift, report.warnings);
    check_global_lipschitz(model.diffusion(), "diffusion", interval, report.lipschitz_sigma, report.warnings);

    const auto [path_min, path_max] = std::minmax_element(path.values.begin(), path.values.end());
    if (*path_min < interval.first || *path_max > interval.second) {
        report.warnings.push_back("deterministic path leaves the working interval");
    }

    report.eps_ok = model.eps() <= 1.0;
    report.sigma_limit = limit_variance(model, path).sigma_limit;
    report.a3_ok = report.sigma_limit >= kDegenerateSigma;
    if (!report.a3_ok) {
        throw DegenerateError("limit standard deviation is zero: the diffusion vanishes along the "
                              "deterministic path");
    }
    return report;
}

}  // namespace smalldiff::model
