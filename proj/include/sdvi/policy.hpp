// SPDX-License-Identifier: MIT
#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "sdvi/types.hpp"

namespace sdvi {

struct Scenario;

/// Index into the scenario's control list, held for the whole horizon.
struct ConstantPolicy {
    std::size_t control = 0;
};

/// controls[i] applies on [knots[i-1], knots[i]) with knots[-1] = -inf and
/// knots[k] = +inf; needs controls.size() == knots.size() + 1.
struct PiecewiseConstantPolicy {
    std::vector<double> knots;
    std::vector<std::size_t> controls;
};

/// Nearest-node lookup on a regular grid over (x, y) in R^{2d}. Axes with a
/// single node are ignored. controls is row-major with the last axis fastest.
struct FeedbackTablePolicy {
    Vec lo, hi;
    std::vector<int> nodes;
    std::vector<std::size_t> controls;
};

class Policy {
public:
    using Kind = std::variant<ConstantPolicy, PiecewiseConstantPolicy, FeedbackTablePolicy>;

    Policy() = default;
    Policy(Kind kind, std::string name = {}) : kind_(std::move(kind)), name_(std::move(name)) {}

    static Policy constant(std::size_t control) { return Policy(ConstantPolicy{control}); }

    [[nodiscard]] std::size_t control_index(double t, const Vec& x, const Vec& y) const;
    [[nodiscard]] const Kind& kind() const { return kind_; }
    [[nodiscard]] std::string name() const;

    /// Throws ConfigError when an index is outside the scenario's control set or
    /// the table shape does not match the state dimension.
    void validate(const Scenario& scn) const;

private:
    Kind kind_ = ConstantPolicy{};
    std::string name_;
};

using PolicyFamily = std::vector<Policy>;

}  // namespace sdvi
