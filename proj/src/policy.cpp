// SPDX-License-Identifier: MIT
#include "sdvi/policy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sdvi/error.hpp"
#include "sdvi/scenario.hpp"

namespace sdvi {

std::size_t Policy::control_index(double t, const Vec& x, const Vec& y) const {
    if (const auto* c = std::get_if<ConstantPolicy>(&kind_)) return c->control;
    if (const auto* pw = std::get_if<PiecewiseConstantPolicy>(&kind_)) {
        const auto it = std::upper_bound(pw->knots.begin(), pw->knots.end(), t);
        return pw->controls[static_cast<std::size_t>(it - pw->knots.begin())];
    }
    const auto& tab = std::get<FeedbackTablePolicy>(kind_);
    const auto d = x.size();
    std::size_t index = 0;
    for (Eigen::Index a = 0; a < 2 * d; ++a) {
        const int nodes = tab.nodes[static_cast<std::size_t>(a)];
        long cell = 0;
        if (nodes > 1) {
            const double v = a < d ? x(a) : y(a - d);
            const double frac = (v - tab.lo(a)) / (tab.hi(a) - tab.lo(a));
            cell = std::lround(frac * (nodes - 1));
            cell = std::clamp<long>(cell, 0, nodes - 1);
        }
        index = index * static_cast<std::size_t>(nodes) + static_cast<std::size_t>(cell);
    }
    return tab.controls[index];
}

std::string Policy::name() const {
    if (!name_.empty()) return name_;
    std::ostringstream os;
    if (const auto* c = std::get_if<ConstantPolicy>(&kind_)) {
        os << "constant[" << c->control << "]";
    } else if (const auto* pw = std::get_if<PiecewiseConstantPolicy>(&kind_)) {
        os << "piecewise[";
        for (std::size_t i = 0; i < pw->controls.size(); ++i) os << (i ? "," : "") << pw->controls[i];
        os << "]";
    } else {
        os << "feedback-table";
    }
    return os.str();
}

void Policy::validate(const Scenario& scn) const {
    const std::size_t nu = scn.controls.size();
    auto check_index = [&](std::size_t i) {
        if (i >= nu) {
            std::ostringstream os;
            os << "policy " << name() << ": control index " << i << " outside the control set of size " << nu;
            throw ConfigError(os.str());
        }
    };
    if (const auto* c = std::get_if<ConstantPolicy>(&kind_)) {
        check_index(c->control);
    } else if (const auto* pw = std::get_if<PiecewiseConstantPolicy>(&kind_)) {
        if (pw->controls.size() != pw->knots.size() + 1) {
            throw ConfigError("policy " + name() + ": need one control per interval (knots + 1)");
        }
        if (!std::is_sorted(pw->knots.begin(), pw->knots.end())) {
            throw ConfigError("policy " + name() + ": knots must be increasing");
        }
        for (auto i : pw->controls) check_index(i);
    } else {
        const auto& tab = std::get<FeedbackTablePolicy>(kind_);
        const auto dims = static_cast<std::size_t>(2 * scn.d);
        if (tab.nodes.size() != dims || static_cast<std::size_t>(tab.lo.size()) != dims ||
            static_cast<std::size_t>(tab.hi.size()) != dims) {
            throw ConfigError("policy " + name() + ": table must span the 2d axes of (x, y)");
        }
        std::size_t cells = 1;
        for (std::size_t a = 0; a < dims; ++a) {
            if (tab.nodes[a] < 1) throw ConfigError("policy " + name() + ": node counts must be >= 1");
            if (tab.nodes[a] > 1 && !(tab.hi(static_cast<Eigen::Index>(a)) > tab.lo(static_cast<Eigen::Index>(a)))) {
                throw ConfigError("policy " + name() + ": table box needs lo < hi on every resolved axis");
            }
            cells *= static_cast<std::size_t>(tab.nodes[a]);
        }
        if (tab.controls.size() != cells) throw ConfigError("policy " + name() + ": table size does not match node counts");
        for (auto i : tab.controls) check_index(i);
    }
}

}  // namespace sdvi
