#pragma once

#include <cmath>
#include <numbers>

#include <boost/math/distributions/normal.hpp>

namespace driftcast::stats {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// P(Z > z) without cancellation for large z.
inline double normal_upper_tail(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

inline double normal_quantile(double p) {
    static const boost::math::normal_distribution<double> standard;
    return boost::math::quantile(standard, p);
}

/// Two-sided p-value of a standard-normal statistic.
inline double two_sided_p(double z) {
    if (std::isinf(z)) return 0.0;
    return std::erfc(std::fabs(z) / std::numbers::sqrt2);
}

}  // namespace driftcast::stats
