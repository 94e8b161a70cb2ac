// SPDX-License-Identifier: MIT
#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles/envelope_oracle.hpp"
#include "sdvi/convex.hpp"
#include "sdvi/error.hpp"

using namespace sdvi;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }
Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

// {x <= 0} in one dimension
ConvexConstraint nonpositive() { return ConvexConstraint::halfspace(v1(1.0), 0.0); }

oracle::SetSpec nonpositive_spec() {
    oracle::SetSpec s;
    s.kind = oracle::SetSpec::halfspace;
    s.faces = {{v1(1.0), 0.0}};
    return s;
}

}  // namespace

TEST_CASE("envelope: closed forms agree with the brute-force oracle") {
    CHECK(envelope(ConvexConstraint::zero(2), 3.0, v2(3.0, -1.0)) == 0.0);

    const double ref = oracle::envelope(nonpositive_spec(), 0.5, v1(1.0));
    CHECK(ref == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(envelope(nonpositive(), 0.5, v1(1.0)) == doctest::Approx(ref).epsilon(1e-12));

    oracle::SetSpec q;
    q.kind = oracle::SetSpec::quadratic;
    q.q = Mat::Identity(1, 1);
    const double refq = oracle::envelope(q, 1.0, v1(2.0));
    CHECK(refq == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(envelope(ConvexConstraint::quadratic(Mat::Identity(1, 1)), 1.0, v1(2.0)) == doctest::Approx(refq));
}

TEST_CASE("prox and Yosida gradient") {
    const auto box = ConvexConstraint::box(v2(-1, -1), v2(1, 1));
    CHECK((prox(box, 0.2, v2(2.0, 0.5)) - v2(1.0, 0.5)).norm() == 0.0);
    CHECK(prox(ConvexConstraint::zero(1), 7.0, v1(4.0))(0) == 4.0);
    CHECK(prox(ConvexConstraint::quadratic(Mat::Identity(1, 1)), 1.0, v1(2.0))(0) == doctest::Approx(1.0));

    CHECK(yosida_grad(nonpositive(), 0.5, v1(1.0))(0) == doctest::Approx(2.0));
    CHECK(yosida_grad(nonpositive(), 0.5, v1(-3.0))(0) == 0.0);
    CHECK(yosida_grad(ConvexConstraint::zero(3), 0.3, Vec::Constant(3, 5.0)).norm() == 0.0);
}

TEST_CASE("prox rejects non-positive eps and wrong dimensions") {
    CHECK_THROWS_AS((void)prox(nonpositive(), 0.0, v1(1.0)), Error);
    CHECK_THROWS_AS((void)prox(nonpositive(), 0.5, v2(1.0, 0.0)), Error);
}

TEST_CASE("polyhedron projection matches the oracle's minimizer value") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> N(0.0, 1.0);
    oracle::SetSpec s;
    s.kind = oracle::SetSpec::polyhedron;
    std::vector<Halfspace> faces;
    for (int f = 0; f < 5; ++f) {
        Vec n = v2(N(rng), N(rng));
        s.faces.emplace_back(n, 0.5);
        faces.push_back({n, 0.5});
    }
    const auto phi = ConvexConstraint::polyhedron(faces);
    for (int k = 0; k < 50; ++k) {
        const Vec x = 3.0 * v2(N(rng), N(rng));
        const Vec p = phi.project(x);
        CHECK(phi.in_domain(p));
        // envelope = dist^2 / (2 eps)
        CHECK(0.5 * (x - p).squaredNorm() == doctest::Approx(oracle::envelope(s, 1.0, x)).epsilon(1e-7));
    }
}

TEST_CASE("directional subdifferential bracket") {
    const auto box = ConvexConstraint::box(v2(-1, -1), v2(1, 1));
    CHECK(dir_subdiff(box, v2(0, 0), v2(5, -5), SubdiffMode::lower).value() == 0.0);

    // boundary of {x <= 0}, outward normal +1
    CHECK(dir_subdiff(nonpositive(), v1(0.0), v1(-1.0), SubdiffMode::lower).is_neg_inf());
    CHECK(dir_subdiff(nonpositive(), v1(0.0), v1(1.0), SubdiffMode::lower).value() == 0.0);
    CHECK(dir_subdiff(nonpositive(), v1(0.0), v1(1.0), SubdiffMode::upper).is_pos_inf());
    CHECK(dir_subdiff(nonpositive(), v1(0.0), v1(-1.0), SubdiffMode::upper).value() == 0.0);

    // smooth case: <grad phi, z>
    const auto q = ConvexConstraint::quadratic(Mat::Identity(2, 2));
    CHECK(dir_subdiff(q, v2(1, 2), v2(3, 4), SubdiffMode::lower).value() == doctest::Approx(11.0));
    CHECK(dir_subdiff(q, v2(1, 2), v2(3, 4), SubdiffMode::upper).value() == doctest::Approx(11.0));

    CHECK_THROWS_AS((void)dir_subdiff(nonpositive(), v1(1.0), v1(1.0), SubdiffMode::lower), DomainError);
}

TEST_CASE("Yosida audit: closed-form values") {
    const auto zero = yosida_audit(ConvexConstraint::zero(2), {0.3}, {{v2(1, 2), v2(-1, 0)}}, v2(0, 0));
    CHECK(zero.all_pass());

    const auto half = yosida_audit(ConvexConstraint::halfspace(v1(1.0), 1.0), {0.5}, {{v1(2.0), v1(0.0)}}, v1(0.0));
    CHECK(half.all_pass());
    // {x <= 1}, eps = 0.5, x = 2: (eps/2)|g|^2 = 1, envelope = 1, <g, x> = 4
    int lower = 0, upper = 0;
    for (const auto& r : half.records) {
        if (r.item != YosidaItem::ix) continue;
        lower += r.lhs == doctest::Approx(1.0) && r.rhs == doctest::Approx(1.0);
        upper += r.lhs == doctest::Approx(1.0) && r.rhs == doctest::Approx(4.0);
    }
    CHECK(lower == 1);
    CHECK(upper == 1);

    const auto quad =
        yosida_audit(ConvexConstraint::quadratic(Mat::Identity(1, 1)), {1.0}, {{v1(2.0), v1(0.0)}}, v1(0.0));
    CHECK(quad.all_pass());
    CHECK(quad.worst_slack(YosidaItem::v) == doctest::Approx(2.0));
}

TEST_CASE("Yosida audit precondition: phi(0) = 0 with 0 interior") {
    CHECK_THROWS_AS((void)yosida_audit(nonpositive(), {0.5}, {{v1(1.0), v1(0.0)}}, v1(-1.0)), PreconditionError);
}
