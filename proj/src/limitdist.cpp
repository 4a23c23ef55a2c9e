#include "smalldiff/limitdist.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace smalldiff::limitdist {

double theta_series(double x, std::size_t terms) {
    if (!(x > 0.0)) {
        return 0.0;
    }
    const double scale = std::numbers::pi * std::numbers::pi / (8.0 * x * x);
    double sum = 0.0;
    for (std::size_t k = 0; k < terms; ++k) {
        const double odd = static_cast<double>(2 * k + 1);
        const double term = std::exp(-odd * odd * scale) / odd;
        sum += (k % 2 == 0) ? term : -term;
    }
    return 4.0 / std::numbers::pi * sum;
}

double reflection_tail(double x, std::size_t terms) {
    if (!(x > 0.0)) {
        return 1.0;
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < terms; ++k) {
        const double z = static_cast<double>(2 * k + 1) * x;
        const double upper = 0.5 * std::erfc(z / std::numbers::sqrt2);
        sum += (k % 2 == 0) ? upper : -upper;
    }
    return 4.0 * sum;
}

SupAbsBmDistribution::SupAbsBmDistribution(std::size_t series_terms, double tolerance)
    : terms_(series_terms), tolerance_(tolerance) {
    if (series_terms < 5) {
        throw std::invalid_argument("SupAbsBmDistribution: need at least 5 series terms");
    }
    if (!(tolerance > 0.0)) {
        throw std::invalid_argument("SupAbsBmDistribution: tolerance must be positive");
    }
}

double SupAbsBmDistribution::cdf(double x) const {
    if (std::isnan(x)) {
        throw std::domain_error("cdf: NaN argument");
    }
    if (x <= kLowerClamp) {
        return 0.0;
    }
    if (x < kTailSwitch) {
        // Extend past the configured truncation if the first omitted term is
        // still above tolerance; for x < kTailSwitch this never triggers at K >= 5.
        std::size_t terms = terms_;
        const double scale = std::numbers::pi * std::numbers::pi / (8.0 * x * x);
        auto omitted = [&](std::size_t k) {
            const double odd = static_cast<double>(2 * k + 1);
            return 4.0 / std::numbers::pi * std::exp(-odd * odd * scale) / odd;
        };
        while (omitted(terms) >= tolerance_) {
            ++terms;
        }
        return std::clamp(theta_series(x, terms), 0.0, 1.0);
    }
    return std::clamp(1.0 - reflection_tail(x, terms_), 0.0, 1.0);
}

double SupAbsBmDistribution::p_value(double d) const {
    if (!(d >= 0.0)) {
        throw std::domain_error("p_value: statistic must be non-negative");
    }
    if (d >= kTailSwitch) {
        return std::clamp(reflection_tail(d, terms_), 0.0, 1.0);
    }
    return 1.0 - cdf(d);
}

double SupAbsBmDistribution::quantile(double p) const {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("quantile: p must lie in (0, 1)");
    }
    double lo = 1e-6;
    double hi = 20.0;
    for (int iter = 0; iter < 200 && hi - lo > 1e-15; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (cdf(mid) < p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

const SupAbsBmDistribution& standard() {
    static const SupAbsBmDistribution instance;
    return instance;
}

}  // namespace smalldiff::limitdist
