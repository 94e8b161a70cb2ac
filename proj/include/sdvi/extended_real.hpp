// SPDX-License-Identifier: MIT
#pragma once

#include <cmath>
#include <compare>
#include <limits>

#include "sdvi/error.hpp"

namespace sdvi {

/// Value in (-inf, +inf]. Minus infinity is only produced by the lower
/// directional subdifferential.
class ExtendedReal {
public:
    constexpr ExtendedReal() = default;
    constexpr ExtendedReal(double v) : v_(v) {}  // NOLINT(implicit)

    static constexpr ExtendedReal pos_inf() { return {std::numeric_limits<double>::infinity()}; }
    static constexpr ExtendedReal neg_inf() { return {-std::numeric_limits<double>::infinity()}; }

    [[nodiscard]] bool is_finite() const { return std::isfinite(v_); }
    [[nodiscard]] bool is_pos_inf() const { return std::isinf(v_) && v_ > 0; }
    [[nodiscard]] bool is_neg_inf() const { return std::isinf(v_) && v_ < 0; }
    [[nodiscard]] constexpr double value() const { return v_; }

    friend ExtendedReal operator+(ExtendedReal a, ExtendedReal b) {
        if ((a.is_pos_inf() && b.is_neg_inf()) || (a.is_neg_inf() && b.is_pos_inf())) {
            throw InvalidInput("ExtendedReal: +inf + -inf is undefined");
        }
        return {a.v_ + b.v_};
    }
    friend ExtendedReal operator-(ExtendedReal a) { return {-a.v_}; }

    friend constexpr auto operator<=>(ExtendedReal a, ExtendedReal b) { return a.v_ <=> b.v_; }
    friend constexpr bool operator==(ExtendedReal a, ExtendedReal b) { return a.v_ == b.v_; }

private:
    double v_ = 0.0;
};

}  // namespace sdvi
