#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "smalldiff/expr.hpp"
#include "smalldiff/model.hpp"
#include "smalldiff/simulate.hpp"

namespace smalldiff::stat {

/// A cumulative field evaluated at `u_grid`, right-continuous and piecewise
/// constant between grid points, so `sup_abs` is its supremum over [0, T].
struct TestCurve {
    std::vector<double> u_grid;
    std::vector<double> values;
    double sup_abs = 0.0;
};

struct VarianceEstimate {
    double sigma_hat = 0.0;
    std::size_t n_increments = 0;
};

struct TestReport {
    TestCurve curve;
    VarianceEstimate sigma_hat;
    double statistic = 0.0;       ///< sup|U| / sigma_hat
    double p_value = 1.0;
    double alpha = 0.05;
    bool reject = false;          ///< statistic > critical_value, strictly
    double critical_value = 0.0;  ///< (1 - alpha)-quantile of sup_{[0,1]}|B|
};

/// Residual field U(t_j) = eps^-1 sum_{i <= j} [X_{t_i} - X_{t_{i-1}} - S0(X_{t_{i-1}}) (t_i - t_{i-1})],
/// with U(0) = 0. Throws EvalError if S0 fails at an observed value.
[[nodiscard]] TestCurve u_statistic(const sim::ObservedPath& path, const expr::Expression& null_drift);

/// sqrt(eps^-2 sum_i |X_{t_i} - X_{t_{i-1}}|^2), the realized quadratic
/// variation rescaled by eps.
[[nodiscard]] VarianceEstimate sigma_hat(const sim::ObservedPath& path);

/// Below this the variance estimate cannot normalize the statistic.
inline constexpr double kDegenerateSigmaHat = 1e-12;

/// Normalized sup test at level `alpha`. Throws std::invalid_argument unless
/// 0 < alpha < 1, DegenerateError when sigma_hat < kDegenerateSigmaHat.
[[nodiscard]] TestReport run_test(const sim::ObservedPath& path, const expr::Expression& null_drift,
                                  double alpha);

/// U with the drift term replaced by a left-point Riemann sum of S0 over the
/// fine path inside each observation interval. Requires fine data.
[[nodiscard]] TestCurve v_statistic(const sim::ObservedPath& path, const expr::Expression& null_drift);

/// eps^-1 int_0^u [dX_s - S0(X_s) ds] on the fine grid (left-point sums).
/// Requires fine data.
[[nodiscard]] TestCurve m_statistic(const sim::ObservedPath& path, const expr::Expression& null_drift);

/// U_Delta(t_j) = eps^-1 sum_{i <= j} (S(X_{t_{i-1}}) - S0(X_{t_{i-1}})) (t_i - t_{i-1}).
[[nodiscard]] TestCurve drift_discrepancy(const sim::ObservedPath& path, const expr::Expression& alt_drift,
                                          const expr::Expression& null_drift);

/// sup over u of |a(u) - b(u)| for two right-continuous step curves. Each
/// curve is held constant from one of its grid points to the next.
[[nodiscard]] double sup_distance(const TestCurve& a, const TestCurve& b);

struct SeparationCurve {
    TestCurve curve;
    double u_star = 0.0;
    double max_abs = 0.0;
    bool separated = false;
};

/// Threshold below which an alternative counts as not separated from the null.
inline constexpr double kSeparationTolerance = 1e-10;

/// A(u) = int_0^u (S - S0)(x_t^S) dt along the ODE path of the alternative
/// model (whose drift is replaced by `alt_drift`), by cumulative Simpson
/// quadrature on the default ODE grid.
[[nodiscard]] SeparationCurve separation_curve(const expr::Expression& alt_drift,
                                               const expr::Expression& null_drift,
                                               const model::ModelSpec& model_with_alt);

}  // namespace smalldiff::stat
