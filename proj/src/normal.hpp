#pragma once

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

namespace maxembed::normal {

inline double pdf(double u) { return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi); }
inline double cdf(double u) { return 0.5 * std::erfc(-u / std::numbers::sqrt2); }
inline double tail(double u) { return 0.5 * std::erfc(u / std::numbers::sqrt2); }

inline double quantile(double p) {
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

/// pdf(u) / tail(u). Switches to the Mills-ratio series where the tail underflows.
inline double hazard(double u) {
    if (u < 30.0) {
        return pdf(u) / tail(u);
    }
    const double v = 1.0 / (u * u);
    return u / (1.0 - v + 3.0 * v * v - 15.0 * v * v * v);
}

}  // namespace maxembed::normal
