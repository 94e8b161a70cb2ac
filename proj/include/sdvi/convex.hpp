// SPDX-License-Identifier: MIT
//
// Convex-analysis kernel: the constraint function phi, its proximal map,
// Moreau envelope, Yosida gradient, directional subdifferentials and an
// audit of the standard Moreau-Yosida inequality catalog.
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sdvi/extended_real.hpp"
#include "sdvi/types.hpp"

namespace sdvi {

/// phi == 0 on R^d.
struct ZeroFunction {};

/// phi(x) = x'Qx / 2 with Q symmetric positive semidefinite.
struct QuadraticFunction {
    Mat q;
};

/// Indicator of [lo, hi] (coordinatewise).
struct BoxSet {
    Vec lo;
    Vec hi;
};

/// Indicator of the closed ball |x - center| <= radius.
struct BallSet {
    Vec center;
    double radius = 1.0;
};

/// Indicator of {x : <normal, x> <= offset}; normal is stored with unit length.
struct Halfspace {
    Vec normal;
    double offset = 0.0;
};

/// Indicator of an intersection of halfspaces.
struct PolyhedronSet {
    std::vector<Halfspace> faces;
};

/// A proper convex lsc function phi : R^d -> (-inf, +inf] drawn from a
/// closed catalog. Values are immutable after construction and safe to share
/// across threads.
class ConvexConstraint {
public:
    using Kind = std::variant<ZeroFunction, QuadraticFunction, BoxSet, BallSet, Halfspace, PolyhedronSet>;

    static ConvexConstraint zero(int dim);
    static ConvexConstraint quadratic(Mat q);
    static ConvexConstraint box(Vec lo, Vec hi);
    static ConvexConstraint ball(Vec center, double radius);
    /// {x : <normal, x> <= offset}; normal need not be unit, it is rescaled.
    static ConvexConstraint halfspace(Vec normal, double offset);
    static ConvexConstraint polyhedron(std::vector<Halfspace> faces);

    [[nodiscard]] int dim() const { return dim_; }
    [[nodiscard]] const Kind& kind() const { return kind_; }
    [[nodiscard]] std::string_view kind_name() const;
    [[nodiscard]] bool is_indicator() const;

    [[nodiscard]] ExtendedReal evaluate(const Vec& x) const;

    /// Euclidean projection onto closure(Dom phi); identity for full-domain kinds.
    [[nodiscard]] Vec project(const Vec& x) const;
    [[nodiscard]] double distance_to_domain(const Vec& x) const;
    [[nodiscard]] bool in_domain(const Vec& x) const;
    /// Distance from x to the boundary of Dom phi (+inf for full-domain kinds,
    /// zero or negative semantics are not used: x outside gives 0).
    [[nodiscard]] double boundary_distance(const Vec& x) const;
    [[nodiscard]] bool in_interior(const Vec& x) const;
    /// Outward unit normals of the faces active at x (generators of the
    /// normal cone). Empty at interior points and for full-domain kinds.
    [[nodiscard]] std::vector<Vec> active_normals(const Vec& x) const;

    /// Absolute membership tolerance used by indicator evaluation.
    [[nodiscard]] static double feasibility_tol(const Vec& x);

private:
    ConvexConstraint(int dim, Kind kind) : dim_(dim), kind_(std::move(kind)) {}

    int dim_ = 0;
    Kind kind_;
};

/// Moreau envelope phi_eps(x) = inf_v |v - x|^2 / (2 eps) + phi(v).
[[nodiscard]] double envelope(const ConvexConstraint& phi, double eps, const Vec& x);

/// Proximal map J_eps(x), the minimizer of the envelope problem.
[[nodiscard]] Vec prox(const ConvexConstraint& phi, double eps, const Vec& x);

/// (x - J_eps(x)) / eps.
[[nodiscard]] Vec yosida_grad(const ConvexConstraint& phi, double eps, const Vec& x);

enum class SubdiffMode { lower, upper };

/// Lower / upper directional subdifferential of phi at x in direction z.
/// The lower mode may return -inf, the upper mode +inf.
[[nodiscard]] ExtendedReal dir_subdiff(const ConvexConstraint& phi, const Vec& x, const Vec& z,
                                       SubdiffMode mode);

enum class YosidaItem { i, ii, iii, iv, v, vi, vii, viii, ix };

[[nodiscard]] std::string_view to_string(YosidaItem item);

struct AuditRecord {
    YosidaItem item = YosidaItem::i;
    std::size_t sample = 0;
    double eps = 0.0;
    double eps2 = 0.0;  // second regularization parameter, item (vi) only
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;
    bool pass = false;
};

struct ItemViiConstants {
    Vec u0;
    double r0 = 0.0;
    double m0 = 0.0;
};

struct YosidaAuditReport {
    std::vector<AuditRecord> records;
    std::optional<ItemViiConstants> constants_vii;

    [[nodiscard]] bool all_pass() const;
    /// Smallest slack among records of the given item (+inf when none).
    [[nodiscard]] double worst_slack(YosidaItem item) const;
};

/// Audit tolerance: 1e-9 absolute plus 1e-9 relative to the magnitudes compared.
[[nodiscard]] double audit_tolerance(double lhs, double rhs);

/// Evaluates the inequality catalog at every (sample, eps) combination, and
/// item (vi) at every pair drawn from eps_list. Requires phi normalized
/// (0 interior, phi(0) = 0) and u0 interior.
[[nodiscard]] YosidaAuditReport yosida_audit(const ConvexConstraint& phi, const std::vector<double>& eps_list,
                                             const std::vector<std::pair<Vec, Vec>>& samples, const Vec& u0);

}  // namespace sdvi
