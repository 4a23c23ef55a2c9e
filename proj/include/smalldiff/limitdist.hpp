#pragma once

#include <cstddef>

namespace smalldiff::limitdist {

/// Law of sup_{t in [0,1]} |B_t| for a standard Brownian motion B.
///
/// The CDF is evaluated by the theta series
///
///     P(sup|B| <= x) = 4/pi * sum_{k>=0} (-1)^k / (2k+1) * exp(-(2k+1)^2 pi^2 / (8 x^2))
///
/// for x below kTailSwitch, and above it by the equivalent reflection
/// series 1 - 4 * sum_{k>=0} (-1)^k Phi_bar((2k+1) x), which keeps full
/// relative precision in the upper tail.
class SupAbsBmDistribution {
public:
    /// Throws std::invalid_argument unless series_terms >= 5 and tolerance > 0.
    explicit SupAbsBmDistribution(std::size_t series_terms = 50, double tolerance = 1e-12);

    [[nodiscard]] double cdf(double x) const;

    /// x with |cdf(x) - p| <= 1e-8, by bisection on [1e-6, 20].
    /// Throws std::domain_error unless 0 < p < 1.
    [[nodiscard]] double quantile(double p) const;

    /// 1 - cdf(d). Throws std::domain_error for negative or NaN d.
    [[nodiscard]] double p_value(double d) const;

    [[nodiscard]] std::size_t series_terms() const noexcept { return terms_; }
    [[nodiscard]] double tolerance() const noexcept { return tolerance_; }

private:
    std::size_t terms_;
    double tolerance_;
};

/// Arguments below this give a CDF under 1e-15 and return 0.
inline constexpr double kLowerClamp = 0.05;
inline constexpr double kTailSwitch = 1.5;

/// Theta series truncated after exactly `terms` terms, no clamping.
[[nodiscard]] double theta_series(double x, std::size_t terms);

/// Upper tail P(sup|B| > x) from the reflection series truncated after `terms` terms.
[[nodiscard]] double reflection_tail(double x, std::size_t terms);

/// Shared instance with the default settings.
[[nodiscard]] const SupAbsBmDistribution& standard();

}  // namespace smalldiff::limitdist
