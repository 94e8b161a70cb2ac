// SPDX-License-Identifier: MIT
//
// Brute-force Moreau envelope for d <= 2, written without the library's
// projection or prox code. Indicators become exact penalties
// M * (violation); with M well above |x - v*| / eps the penalized minimum
// equals the constrained one. Minimization is golden-section, nested in 2-D,
// which is valid because the objective is convex.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using V = Eigen::VectorXd;
using M = Eigen::MatrixXd;

struct SetSpec {
    enum Kind { zero, quadratic, box, ball, halfspace, polyhedron } kind = zero;
    M q;
    V lo, hi;
    V center;
    double radius = 0.0;
    std::vector<std::pair<V, double>> faces;  // <a, v> <= c; halfspace uses faces[0]

    // phi for full-domain kinds; for indicators, the distance-like violation.
    [[nodiscard]] double value(const V& v) const {
        switch (kind) {
            case zero:
                return 0.0;
            case quadratic:
                return 0.5 * v.dot(q * v);
            case box: {
                double s = 0.0;
                for (int i = 0; i < v.size(); ++i) s += std::max({0.0, lo(i) - v(i), v(i) - hi(i)});
                return s;
            }
            case ball:
                return std::max(0.0, (v - center).norm() - radius);
            case halfspace:
            case polyhedron: {
                double s = 0.0;
                for (const auto& [a, c] : faces) s += std::max(0.0, (a.dot(v) - c) / a.norm());
                return s;
            }
        }
        return 0.0;
    }
    [[nodiscard]] bool indicator() const { return kind != zero && kind != quadratic; }
};

inline double golden(const std::function<double(double)>& f, double a, double b, int iters) {
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < iters; ++i) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    return std::min(fc, fd);
}

/// inf_v |v - x|^2 / (2 eps) + phi(v), d in {1, 2}.
inline double envelope(const SetSpec& s, double eps, const V& x) {
    double scale = 1.0 + x.norm();
    if (s.kind == SetSpec::ball) scale += s.center.norm() + s.radius;
    if (s.kind == SetSpec::box) scale += s.lo.norm() + s.hi.norm();
    for (const auto& f : s.faces) scale += std::abs(f.second) / f.first.norm();
    const double pen = s.indicator() ? 1e3 * scale / eps : 1.0;
    const double r = 2.0 * scale;
    auto obj = [&](const V& v) { return (v - x).squaredNorm() / (2.0 * eps) + pen * s.value(v); };
    constexpr int kIters = 90;
    if (x.size() == 1) {
        V v(1);
        return golden([&](double a) { v(0) = a; return obj(v); }, x(0) - r, x(0) + r, kIters);
    }
    V v(2);
    return golden(
        [&](double a) {
            return golden([&](double b) { v(0) = a; v(1) = b; return obj(v); }, x(1) - r, x(1) + r, kIters);
        },
        x(0) - r, x(0) + r, kIters);
}

}  // namespace oracle
