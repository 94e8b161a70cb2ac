// SPDX-License-Identifier: MIT
#include <cmath>

#include "doctest.h"
#include "sdvi/error.hpp"
#include "sdvi/sdde.hpp"
#include "support.hpp"

using namespace sdvi;
using namespace sdvi::test;

namespace {

DelayBuffer filled(double delta, double h, const Vec& c) {
    DelayBuffer buf(delta, h);
    const long lags = std::lround(delta / h);
    for (long i = -lags; i <= 0; ++i) buf.push(static_cast<double>(i) * h, c);
    return buf;
}

Scenario half_line(double sigma) {
    Scenario s = Scenario::zeros(1, 1, 1);
    s.delta = 0.1;
    s.constraint = ConvexConstraint::halfspace(vec1(-1.0), 0.0);  // {x >= 0}
    s.diffusion.s0(0, 0) = sigma;
    return finish(s);
}

}  // namespace

TEST_CASE("memory variable: trapezoid quadrature") {
    CHECK(memory_y(filled(1.0, 0.25, vec1(0.0)), 0.0, 1.0)(0) == 0.0);
    CHECK(memory_y(filled(1.0, 0.25, vec1(3.0)), 0.0, 1.0)(0) == doctest::Approx(3.0).epsilon(1e-14));
    // int_{-1}^0 e^r dr = 1 - 1/e
    CHECK(std::abs(memory_y(filled(1.0, 1.0 / 64, vec1(1.0)), 1.0, 1.0)(0) - (1.0 - std::exp(-1.0))) < 1e-3);
}

TEST_CASE("delayed state lookup") {
    DelayBuffer buf(0.5, 0.25);
    Vec a(2), b(2), c(2);
    a << 2, 3;
    b << 4, 5;
    c << 6, 7;
    buf.push(0.0, a);
    buf.push(0.25, b);
    buf.push(0.5, c);
    CHECK(memory_z(buf, 0.5) == a);
    DelayBuffer now(0.0, 0.25);
    now.push(0.5, c);
    CHECK(memory_z(now, 0.0) == c);
    CHECK_THROWS_AS((void)buf.lagged(3), StateError);
}

TEST_CASE("step: frozen, projected and penalized updates") {
    SolverConfig cfg;
    cfg.h = 0.05;
    {
        const Scenario s = half_line(0.0);
        const auto buf = filled(s.delta, cfg.h, vec1(0.3));
        for (Scheme sc : {Scheme::prox_implicit, Scheme::projection}) {
            cfg.scheme = sc;
            const StepResult r = step(vec1(0.3), buf, s, s.controls[0], cfg, 0.0, vec1(0.0));
            CHECK(r.x_next(0) == 0.3);
            CHECK(r.dk(0) == 0.0);
        }
    }
    {
        const Scenario s = half_line(1.0);
        cfg.scheme = Scheme::projection;
        const auto buf = filled(s.delta, cfg.h, vec1(0.1));
        const StepResult r = step(vec1(0.1), buf, s, s.controls[0], cfg, 0.0, vec1(-0.5));
        CHECK(r.x_next(0) == 0.0);
        CHECK(r.dk(0) == doctest::Approx(-0.4));  // dK = R - x_next
    }
    {
        const Scenario s = half_line(0.0);
        cfg.scheme = Scheme::penalized_explicit;
        cfg.eps = 0.1;
        const auto buf = filled(s.delta, cfg.h, vec1(-0.2));
        const StepResult r = step(vec1(-0.2), buf, s, s.controls[0], cfg, 0.0, vec1(0.0));
        CHECK(r.x_next(0) == doctest::Approx(-0.1));
        CHECK(r.dk(0) == doctest::Approx(-0.1));
    }
}

TEST_CASE("simulate_path: frozen and linear-decay oracles") {
    SolverConfig cfg;
    cfg.h = 1e-3;
    Scenario s = Scenario::zeros(1, 1, 1);
    s.delta = 0.1;
    finish(s);
    const Trajectory frozen = simulate_path(s, Policy::constant(0), PathSegment::constant(vec1(2.0), 0.1, cfg.h), cfg,
                                            NoiseStream(1, 0));
    for (std::size_t i = 0; i < frozen.size(); ++i) {
        CHECK(frozen.x[i](0) == 2.0);
        CHECK(frozen.k[i](0) == 0.0);
    }
    CHECK(frozen.phi_integral == 0.0);

    s.drift.bx(0, 0) = -1.0;
    finish(s);
    const Trajectory decay =
        simulate_path(s, Policy::constant(0), PathSegment::constant(vec1(1.0), 0.1, cfg.h), cfg, NoiseStream(1, 0));
    CHECK(std::abs(decay.x.back()(0) - std::exp(-1.0)) < 2e-3);

    // Z(t) is the state recorded delta earlier
    const std::size_t lag = 100;
    for (std::size_t i = lag; i < decay.size(); i += 37) CHECK(decay.z[i](0) == decay.x[i - lag](0));
}

TEST_CASE("projection keeps every state in the half-line") {
    const Scenario s = half_line(1.0);
    SolverConfig cfg;
    cfg.scheme = Scheme::projection;
    cfg.h = 0.01;
    for (std::uint64_t p = 0; p < 20; ++p) {
        const Trajectory tr =
            simulate_path(s, Policy::constant(0), PathSegment::constant(vec1(0.0), s.delta, cfg.h), cfg, NoiseStream(3, p));
        for (const auto& x : tr.x) CHECK(x(0) >= 0.0);
    }
}

TEST_CASE("solution audit: sign of the variational inequality") {
    SolverConfig cfg;
    cfg.h = 0.01;
    {
        Scenario s = Scenario::zeros(1, 1, 1);
        s.delta = 0.1;
        s.diffusion.s0(0, 0) = 1.0;
        finish(s);
        const Trajectory tr =
            simulate_path(s, Policy::constant(0), PathSegment::constant(vec1(0.0), s.delta, cfg.h), cfg, NoiseStream(1, 0));
        const auto rep = solution_audit(tr, s.constraint, {vec1(0.0), vec1(1.0)}, 1e-12);
        CHECK(rep.pass());
        for (const auto& e : rep.inequality) CHECK(std::abs(e.worst_slack) <= 1e-12);
    }
    const Scenario s = half_line(1.0);
    cfg.scheme = Scheme::projection;
    const Trajectory tr =
        simulate_path(s, Policy::constant(0), PathSegment::constant(vec1(0.0), s.delta, cfg.h), cfg, NoiseStream(2, 0));
    // every increment points into the constraint: dK <= 0 and active only at X = 0
    double active = 0.0;
    for (std::size_t i = 1; i < tr.size(); ++i) {
        const double dk = tr.k[i](0) - tr.k[i - 1](0);
        CHECK(dk <= 0.0);
        if (dk != 0.0) {
            CHECK(tr.x[i](0) == 0.0);
            active += 1.0;
        }
    }
    CHECK(active > 0.0);
    CHECK(solution_audit(tr, s.constraint, {vec1(1.0)}, 1e-9).pass());

    Trajectory bad = tr;
    for (auto& k : bad.k) k = -k;
    const auto rep = solution_audit(bad, s.constraint, {vec1(1.0)}, 1e-9);
    CHECK_FALSE(rep.pass());
    CHECK(rep.inequality[0].worst_slack < 0.0);
}

TEST_CASE("solver configuration validation") {
    const Scenario s = half_line(1.0);
    SolverConfig cfg;
    cfg.h = 0.03;  // delta = 0.1 is not a multiple
    CHECK_THROWS_AS(cfg.validate(s), ConfigError);
    cfg.h = 0.01;
    cfg.scheme = Scheme::penalized_explicit;
    cfg.eps = 0.015;  // needs h <= eps / 2
    CHECK_THROWS_AS(cfg.validate(s), ConfigError);
    cfg.eps = 0.02;
    CHECK_NOTHROW(cfg.validate(s));

    Scenario q = s;
    q.constraint = ConvexConstraint::quadratic(Mat::Identity(1, 1));
    cfg.scheme = Scheme::projection;
    CHECK_THROWS_AS(cfg.validate(q), ConfigError);
}
