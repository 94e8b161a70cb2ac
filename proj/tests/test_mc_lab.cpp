// SPDX-License-Identifier: MIT
#include <cmath>

#include "doctest.h"
#include "sdvi/error.hpp"
#include "sdvi/mc_lab.hpp"
#include "support.hpp"

using namespace sdvi;
using namespace sdvi::test;

namespace {

Scenario frozen() {
    Scenario s = Scenario::zeros(1, 1, 1);
    s.delta = 0.5;
    return finish(s);
}

SolverConfig config(double h, std::size_t paths, std::uint64_t seed = 1) {
    SolverConfig c;
    c.h = h;
    c.n_paths = paths;
    c.seed = seed;
    return c;
}

}  // namespace

TEST_CASE("moments of the frozen path are exact") {
    const Scenario s = frozen();
    const SolverConfig cfg = config(0.1, 16);
    const MomentReport r = estimate_moments(s, Policy::constant(0), constant_init(s, 3.0, cfg.h), cfg);
    CHECK(r.sup_x2.mean == 9.0);
    CHECK(r.sup_x2.se == 0.0);
    CHECK(r.sup_k2.mean == 0.0);
    CHECK(r.min_component == 3.0);
    for (const auto& b : apriori_bound_check(r, constant_init(s, 3.0, cfg.h).xi, s.constraint)) {
        CHECK(b.finite);
        if (b.name == "sup_x2") CHECK(b.value == doctest::Approx(9.0 / 10.0));
    }
}

TEST_CASE("memory of a constant history at the start is c * delta") {
    const Scenario s = frozen();
    const SolverConfig cfg = config(0.1, 1);
    const Trajectory tr =
        simulate_path(s, Policy::constant(0), PathSegment::constant(vec1(2.0), s.delta, cfg.h), cfg, NoiseStream(1, 0));
    CHECK(tr.y[0](0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("gamma functionals") {
    const PathSegment a = PathSegment::constant(vec1(1.0), 0.5, 0.1);
    const PathSegment b = PathSegment::constant(vec1(1.3), 0.5, 0.1);
    CHECK(gamma1(0.0, a, 0.0, a, 0.5) == 0.0);
    CHECK(gamma1(0.0, a, 0.0, b, 0.5) == doctest::Approx(0.09));
    // 1 + phi(xi(0))^2 + |xi|^4 with phi = 0
    CHECK(gamma2(b, ConvexConstraint::zero(1)) == doctest::Approx(1.0 + std::pow(1.3, 4)));
}

TEST_CASE("cost functional oracles") {
    Scenario s = frozen();
    s.running_cost = Polynomial::constant(1.0);
    finish(s);
    SolverConfig cfg = config(0.1, 8);
    CostEstimate c = estimate_cost(s, Policy::constant(0), constant_init(s, 0.0, cfg.h, 0.3), cfg);
    CHECK(c.j.mean == doctest::Approx(0.7).epsilon(1e-14));
    CHECK(c.j.se == doctest::Approx(0.0));

    s.running_cost = Polynomial{};
    s.terminal_cost = poly({mono(1.0, {1})});
    finish(s);
    c = estimate_cost(s, Policy::constant(0), constant_init(s, 2.5, cfg.h), cfg);
    CHECK(c.j.mean == 2.5);

    // E W_1^2 = 1
    s.terminal_cost = poly({mono(1.0, {2})});
    s.diffusion.s0(0, 0) = 1.0;
    finish(s);
    cfg = config(0.05, 10000, 2);
    c = estimate_cost(s, Policy::constant(0), constant_init(s, 0.0, cfg.h), cfg);
    CHECK(std::abs(c.j.mean - 1.0) <= 3.0 * c.j.se);
}

TEST_CASE("continuous dependence: identical data gives exactly zero") {
    Scenario s = frozen();
    s.diffusion.s0(0, 0) = 1.0;
    s.drift.bx(0, 0) = -0.5;
    finish(s);
    const SolverConfig cfg = config(0.05, 100);
    const auto init = constant_init(s, 0.4, cfg.h);
    const DependenceRecord r = dependence_study(s, init, init, Policy::constant(0), cfg);
    CHECK(r.sup_dx2.mean == 0.0);
    CHECK(r.sup_dk2.mean == 0.0);
    CHECK(r.crn_verified);

    // s' = s + h: positive but shrinking with h
    double prev = 1e300;
    for (double h : {0.05, 0.025, 0.0125}) {
        const SolverConfig c = config(h, 400);
        const DependenceRecord rr = dependence_study(s, constant_init(s, 0.4, h), constant_init(s, 0.4, h, h),
                                                     Policy::constant(0), c);
        CHECK(rr.sup_dx2.mean > 0.0);
        CHECK(rr.sup_dx2.mean < prev);
        prev = rr.sup_dx2.mean;
    }
}

TEST_CASE("a-priori scaling study on a linear scenario") {
    Scenario s = frozen();
    s.drift.bx(0, 0) = -0.3;
    s.drift.bz(0, 0) = 0.2;
    s.diffusion.s0(0, 0) = 0.4;
    finish(s);
    const SolverConfig cfg = config(0.05, 400);
    const ScalingStudy st = apriori_scaling_study(s, Policy::constant(0), constant_init(s, 0.5, cfg.h), cfg, {1.0, 4.0});
    CHECK(st.pass);
    CHECK(st.rows.size() == 2);
}

TEST_CASE("Cauchy study: inactive penalty and argument checks") {
    Scenario s = frozen();
    s.diffusion.s0(0, 0) = 1.0;
    finish(s);
    SolverConfig cfg = config(0.01, 50);
    cfg.scheme = Scheme::penalized_explicit;
    cfg.eps = 0.4;
    const auto init = constant_init(s, 0.5, cfg.h);
    const CauchyReport r = cauchy_rate_study(s, Policy::constant(0), init, {0.4, 0.2, 0.1}, cfg);
    for (const auto& row : r.rows) CHECK(row.sup_dx2.mean == 0.0);
    CHECK_FALSE(r.slope_defined);

    CHECK_THROWS_AS((void)cauchy_rate_study(s, Policy::constant(0), init, {0.4, 0.015}, cfg), ConfigError);
    CHECK_THROWS_AS((void)cauchy_rate_study(s, Policy::constant(0), init, {0.2, 0.4}, cfg), ConfigError);
}

TEST_CASE("Cauchy study: penalized paths approach the proximal reference") {
    Scenario s = frozen();
    s.delta = 0.1;
    s.diffusion.s0(0, 0) = 1.0;
    s.constraint = ConvexConstraint::halfspace(vec1(-1.0), 0.0);
    finish(s);
    SolverConfig cfg = config(0.01, 500, 4);
    cfg.scheme = Scheme::penalized_explicit;
    cfg.eps = 0.4;
    const CauchyReport r =
        cauchy_rate_study(s, Policy::constant(0), constant_init(s, 0.5, cfg.h), {0.4, 0.2, 0.1, 0.05}, cfg);
    CHECK(r.strictly_decreasing);
    for (std::size_t i = 1; i < r.reference_gap.size(); ++i) {
        CHECK(r.reference_gap[i].mean < r.reference_gap[i - 1].mean);
    }
}
