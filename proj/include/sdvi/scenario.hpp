// SPDX-License-Identifier: MIT
//
// Scenario: coefficients of the controlled constrained delay system drawn
// from an affine catalog, polynomial costs, finite control set and the
// declared regularity constants they must respect.
#pragma once

#include <vector>

#include "sdvi/convex.hpp"
#include "sdvi/types.hpp"

namespace sdvi {

/// b(t,x,y,z,u) = b0 + bt t + Bx x + By y + Bz z + Bu u.
struct AffineDrift {
    Vec b0, bt;
    Mat bx, by, bz, bu;

    void eval(double t, const Vec& x, const Vec& y, const Vec& z, const Vec& u, Vec& out) const;
};

/// Column j of sigma(t,x,y,z,u) is s0.col(j) + st.col(j) t + Sx[j] x + Sy[j] y + Sz[j] z + Su[j] u.
struct AffineDiffusion {
    Mat s0, st;
    std::vector<Mat> sx, sy, sz, su;

    void eval(double t, const Vec& x, const Vec& y, const Vec& z, const Vec& u, Mat& out) const;
    [[nodiscard]] bool state_independent() const;
};

/// coef * t^tp * prod x_i^xp_i * prod y_i^yp_i * prod u_i^up_i
struct Monomial {
    double coef = 0.0;
    int t_pow = 0;
    std::vector<int> x_pow, y_pow, u_pow;
};

struct Polynomial {
    std::vector<Monomial> terms;

    [[nodiscard]] double eval(double t, const Vec& x, const Vec& y, const Vec& u) const;
    /// Total degree in (x, y).
    [[nodiscard]] int degree_xy() const;
    [[nodiscard]] bool depends_on_y() const;

    static Polynomial constant(double c);
};

struct Scenario {
    int d = 1;  // state dimension
    int n = 1;  // Brownian dimension
    int m = 1;  // control dimension
    double delta = 0.0;
    double lambda = 0.0;
    double horizon = 1.0;  // T
    double s0 = 0.0;
    ConvexConstraint constraint = ConvexConstraint::zero(1);
    AffineDrift drift;
    AffineDiffusion diffusion;
    Polynomial running_cost;   // f(t, x, y, u)
    Polynomial terminal_cost;  // h(x, y)
    std::vector<Vec> controls;
    double ell = 0.0;
    double kappa = 0.0;
    double kappa_bar = 1.0;
    int p = 1;

    /// All coefficients zero, one zero control, zero constraint.
    static Scenario zeros(int d, int n, int m);

    [[nodiscard]] double induced_lipschitz() const;
    [[nodiscard]] double induced_kappa() const;
    /// Throws ConfigError naming the violated constraint.
    void validate() const;
};

}  // namespace sdvi
