#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "smalldiff/expr.hpp"

namespace smalldiff::model {

/// dX = S(X) dt + eps * sigma(X) dW on [0, T], X_0 = x0.
class ModelSpec {
public:
    /// Throws ConfigError unless T > 0 and 0 < eps <= 1, and EvalError if
    /// drift or diffusion fails at x0.
    ModelSpec(expr::Expression drift, expr::Expression diffusion, double x0, double T, double eps);

    [[nodiscard]] const expr::Expression& drift() const noexcept { return drift_; }
    [[nodiscard]] const expr::Expression& diffusion() const noexcept { return diffusion_; }
    [[nodiscard]] double x0() const noexcept { return x0_; }
    [[nodiscard]] double horizon() const noexcept { return T_; }
    [[nodiscard]] double eps() const noexcept { return eps_; }

    [[nodiscard]] ModelSpec with_drift(expr::Expression drift) const;
    [[nodiscard]] ModelSpec with_eps(double eps) const;

private:
    expr::Expression drift_;
    expr::Expression diffusion_;
    double x0_;
    double T_;
    double eps_;
};

/// Solution of the noiseless ODE dx/dt = S(x), x(0) = x0.
struct DeterministicPath {
    std::vector<double> times;
    std::vector<double> values;
    double step = 0.0;
};

struct LimitVariance {
    double sigma_limit = 0.0;
    double quadrature_step = 0.0;
};

struct ValidationReport {
    double lipschitz_drift = 0.0;
    double lipschitz_sigma = 0.0;
    double sigma_limit = 0.0;
    bool a3_ok = false;
    bool eps_ok = false;
    // The mesh condition h = o(eps^2) depends on the sampling grid, not the model.
    std::string h_condition = "unchecked: evaluated when a sampling grid is built";
    std::pair<double, double> working_interval{0.0, 0.0};
    std::vector<std::string> warnings;
};

/// Below this the limit standard deviation is treated as zero.
inline constexpr double kDegenerateSigma = 1e-12;

/// Samples used by `validate` for each Lipschitz estimate.
inline constexpr std::size_t kLipschitzSamples = 10'001;

/// Fixed-step RK4 for dx/dt = S(x) on a uniform grid with an even number of
/// intervals, each no wider than `step`; the last grid time is exactly T.
/// Throws std::invalid_argument unless 0 < step <= T, DivergenceError when the
/// state leaves the finite range.
[[nodiscard]] DeterministicPath solve_ode(const ModelSpec& model, double step);

/// Same as above with the default step T / 10^4.
[[nodiscard]] DeterministicPath solve_ode(const ModelSpec& model);

/// RK4 values of the ODE at arbitrary ascending `times` starting at 0; each
/// gap is split into equal substeps no wider than `max_step`.
[[nodiscard]] std::vector<double> solve_ode_at(const expr::Expression& drift, double x0,
                                               std::span<const double> times, double max_step);

/// One RK4 step of dx/dt = S(x).
[[nodiscard]] double rk4_step(const expr::Expression& drift, double x, double dt);

/// Composite Simpson rule over an evenly spaced grid with an even interval count.
[[nodiscard]] double simpson(std::span<const double> values, double step);

/// Sigma_{S,sigma} = sqrt(int_0^T sigma(x_t)^2 dt) along `path`.
[[nodiscard]] LimitVariance limit_variance(const ModelSpec& model, const DeterministicPath& path);

/// Default interval used by `validate`: the hull of [x0 - 5, x0 + 5] and
/// the range of `path`, widened by 10% of its width on each side.
[[nodiscard]] std::pair<double, double> default_working_interval(const ModelSpec& model,
                                                                 const DeterministicPath& path);

/// Numeric check of the standing assumptions. Problems are reported as
/// warnings, except a limit standard deviation below kDegenerateSigma, which
/// throws DegenerateError.
[[nodiscard]] ValidationReport validate(const ModelSpec& model,
                                        std::optional<std::pair<double, double>> working_interval = {});

}  // namespace smalldiff::model
