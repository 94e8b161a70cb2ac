// SPDX-License-Identifier: MIT
#pragma once

#include <cmath>
#include <span>

namespace sdvi {

/// Sample mean with standard error = sample std / sqrt(n).
struct Estimate {
    double mean = 0.0;
    double se = 0.0;
};

/// Two-pass estimator, summed in index order.
[[nodiscard]] inline Estimate estimate(std::span<const double> v) {
    Estimate e;
    if (v.empty()) return e;
    double s = 0.0;
    for (double x : v) s += x;
    e.mean = s / static_cast<double>(v.size());
    if (v.size() < 2) return e;
    double ss = 0.0;
    for (double x : v) ss += (x - e.mean) * (x - e.mean);
    const double var = ss / static_cast<double>(v.size() - 1);
    e.se = std::sqrt(var / static_cast<double>(v.size()));
    return e;
}

}  // namespace sdvi
