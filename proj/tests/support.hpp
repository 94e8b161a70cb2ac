// SPDX-License-Identifier: MIT
// Scenario builders shared by the unit tests and the acceptance driver.
#pragma once

#include <vector>

#include "sdvi/control.hpp"
#include "sdvi/mc_lab.hpp"
#include "sdvi/scenario.hpp"

namespace sdvi::test {

inline Monomial mono(double c, std::vector<int> x = {}, std::vector<int> y = {}, std::vector<int> u = {}, int t = 0) {
    return Monomial{c, t, std::move(x), std::move(y), std::move(u)};
}

inline Polynomial poly(std::vector<Monomial> terms) { return Polynomial{std::move(terms)}; }

// Declared constants set to the induced ones and a generous growth bound.
inline Scenario& finish(Scenario& s, double kappa_bar = 100.0, int p = 2) {
    s.ell = s.induced_lipschitz();
    s.kappa = s.induced_kappa();
    s.kappa_bar = kappa_bar;
    s.p = p;
    s.validate();
    return s;
}

inline Vec vec1(double a) { return Vec::Constant(1, a); }

inline InitialData constant_init(const Scenario& s, double c, double h, double start = 0.0) {
    return {start, PathSegment::constant(Vec::Constant(s.d, c), s.delta, h)};
}

// dX = u dt, U = {-1, +1}, f = 0, h(x, y) = x.
inline Scenario steering(double horizon = 1.0, double delta = 0.1) {
    Scenario s = Scenario::zeros(1, 1, 1);
    s.delta = delta;
    s.horizon = horizon;
    s.drift.bu(0, 0) = 1.0;
    s.controls = {vec1(-1.0), vec1(1.0)};
    s.terminal_cost = poly({mono(1.0, {1})});
    return finish(s);
}

inline PolicyFamily constants(const Scenario& s) {
    PolicyFamily f;
    for (std::size_t i = 0; i < s.controls.size(); ++i) f.push_back(Policy::constant(i));
    return f;
}

}  // namespace sdvi::test
