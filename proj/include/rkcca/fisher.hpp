#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "rkcca/error.hpp"

namespace rkcca {

/// z = (ln(1 + r) - ln(1 - r)) / 2 for 0 <= r < 1.
[[nodiscard]] inline double fisher_z(double r) {
    detail::require(r >= 0.0 && r < 1.0, "fisher_z needs 0 <= r < 1, got " + std::to_string(r));
    return 0.5 * (std::log1p(r) - std::log1p(-r));
}

[[nodiscard]] inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// 2 (1 - Phi(|t|)), evaluated without cancellation.
[[nodiscard]] inline double two_sided_p(double t) { return std::erfc(std::abs(t) / std::numbers::sqrt2); }

}  // namespace rkcca
