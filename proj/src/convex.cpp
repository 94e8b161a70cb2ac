// SPDX-License-Identifier: MIT
#include "sdvi/convex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sdvi/error.hpp"

namespace sdvi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kDykstraMaxIter = 10000;
constexpr double kDykstraTol = 1e-10;

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_finite(const Vec& x, const char* what) {
    if (!x.allFinite()) {
        throw InvalidInput(std::string(what) + ": non-finite coordinate");
    }
}

void require_dim(const ConvexConstraint& phi, const Vec& x, const char* what) {
    if (x.size() != phi.dim()) {
        std::ostringstream os;
        os << what << ": dimension " << x.size() << " does not match constraint dimension " << phi.dim();
        throw InvalidInput(os.str());
    }
}

void require_eps(double eps, const char* what) {
    if (!(eps > 0.0) || !std::isfinite(eps)) {
        throw InvalidInput(std::string(what) + ": eps must be a positive finite real");
    }
}

Vec project_halfspace(const Halfspace& h, const Vec& x) {
    const double excess = h.normal.dot(x) - h.offset;
    if (excess <= 0.0) return x;
    return x - excess * h.normal;
}

// Exact projection onto the affine intersection of the faces active at the
// Dykstra iterate; replaces the iterate when it is a valid KKT point.
Vec polish_polyhedron(const PolyhedronSet& poly, const Vec& x, const Vec& approx) {
    const double scale = 1.0 + x.lpNorm<Eigen::Infinity>();
    std::vector<int> active;
    for (int j = 0; j < static_cast<int>(poly.faces.size()); ++j) {
        if (poly.faces[j].normal.dot(approx) >= poly.faces[j].offset - 1e-7 * scale) {
            active.push_back(j);
        }
    }
    if (active.empty()) return approx;
    const auto k = static_cast<Eigen::Index>(active.size());
    Mat a(k, x.size());
    Vec c(k);
    for (Eigen::Index r = 0; r < k; ++r) {
        a.row(r) = poly.faces[active[r]].normal.transpose();
        c(r) = poly.faces[active[r]].offset;
    }
    const Mat gram = a * a.transpose();
    const Vec mu = gram.completeOrthogonalDecomposition().solve(a * x - c);
    if (!mu.allFinite() || mu.minCoeff() < -1e-9 * scale) return approx;
    const Vec v = x - a.transpose() * mu;
    for (const auto& f : poly.faces) {
        if (f.normal.dot(v) - f.offset > 1e-12 * scale) return approx;
    }
    if ((v - approx).norm() > 1e-6 * scale) return approx;
    return v;
}

Vec project_polyhedron(const PolyhedronSet& poly, const Vec& x) {
    bool inside = true;
    for (const auto& f : poly.faces) {
        if (f.normal.dot(x) > f.offset) {
            inside = false;
            break;
        }
    }
    if (inside) return x;

    const double scale = 1.0 + x.lpNorm<Eigen::Infinity>();
    const std::size_t m = poly.faces.size();
    std::vector<Vec> increments(m, Vec::Zero(x.size()));
    Vec y = x;
    for (int iter = 0; iter < kDykstraMaxIter; ++iter) {
        const Vec prev = y;
        for (std::size_t j = 0; j < m; ++j) {
            const Vec z = y + increments[j];
            y = project_halfspace(poly.faces[j], z);
            increments[j] = z - y;
        }
        double violation = 0.0;
        for (const auto& f : poly.faces) violation = std::max(violation, f.normal.dot(y) - f.offset);
        if (violation <= kDykstraTol * scale && (y - prev).lpNorm<Eigen::Infinity>() <= kDykstraTol * scale) {
            return polish_polyhedron(poly, x, y);
        }
    }
    throw NumericError("polyhedron projection: Dykstra iteration cap reached without convergence");
}

Halfspace normalized(Vec normal, double offset) {
    require_finite(normal, "halfspace normal");
    const double n = normal.norm();
    if (!(n > 0.0)) throw InvalidInput("halfspace normal must be nonzero");
    if (!std::isfinite(offset)) throw InvalidInput("halfspace offset must be finite");
    return Halfspace{normal / n, offset / n};
}

}  // namespace

ConvexConstraint ConvexConstraint::zero(int dim) {
    if (dim <= 0) throw InvalidInput("constraint dimension must be positive");
    return {dim, ZeroFunction{}};
}

ConvexConstraint ConvexConstraint::quadratic(Mat q) {
    if (q.rows() <= 0 || q.rows() != q.cols()) throw InvalidInput("quadratic: Q must be square and nonempty");
    if (!q.allFinite()) throw InvalidInput("quadratic: non-finite entry in Q");
    const double scale = 1.0 + q.cwiseAbs().maxCoeff();
    if ((q - q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw InvalidInput("quadratic: Q must be symmetric");
    }
    Mat sym = 0.5 * (q + q.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-12 * scale) {
        throw InvalidInput("quadratic: Q must be positive semidefinite");
    }
    const int d = static_cast<int>(sym.rows());
    return {d, QuadraticFunction{std::move(sym)}};
}

ConvexConstraint ConvexConstraint::box(Vec lo, Vec hi) {
    if (lo.size() <= 0 || lo.size() != hi.size()) throw InvalidInput("box: lo and hi must have equal positive size");
    require_finite(lo, "box lo");
    require_finite(hi, "box hi");
    if ((hi - lo).minCoeff() <= 0.0) throw InvalidInput("box: need lo < hi in every coordinate (nonempty interior)");
    const int d = static_cast<int>(lo.size());
    return {d, BoxSet{std::move(lo), std::move(hi)}};
}

ConvexConstraint ConvexConstraint::ball(Vec center, double radius) {
    if (center.size() <= 0) throw InvalidInput("ball: empty center");
    require_finite(center, "ball center");
    if (!(radius > 0.0) || !std::isfinite(radius)) throw InvalidInput("ball: radius must be positive");
    const int d = static_cast<int>(center.size());
    return {d, BallSet{std::move(center), radius}};
}

ConvexConstraint ConvexConstraint::halfspace(Vec normal, double offset) {
    if (normal.size() <= 0) throw InvalidInput("halfspace: empty normal");
    const int d = static_cast<int>(normal.size());
    return {d, normalized(std::move(normal), offset)};
}

ConvexConstraint ConvexConstraint::polyhedron(std::vector<Halfspace> faces) {
    if (faces.empty()) throw InvalidInput("polyhedron: at least one face required");
    const auto d = faces.front().normal.size();
    if (d <= 0) throw InvalidInput("polyhedron: empty normal");
    PolyhedronSet poly;
    for (auto& f : faces) {
        if (f.normal.size() != d) throw InvalidInput("polyhedron: faces of mixed dimension");
        poly.faces.push_back(normalized(std::move(f.normal), f.offset));
    }
    // Nonempty interior: the set shrunk by a small margin must be nonempty.
    PolyhedronSet shrunk = poly;
    for (auto& f : shrunk.faces) f.offset -= 1e-6;
    Vec probe;
    try {
        probe = project_polyhedron(shrunk, Vec::Zero(d));
    } catch (const NumericError&) {
        throw InvalidInput("polyhedron: empty interior");
    }
    for (const auto& f : shrunk.faces) {
        if (f.normal.dot(probe) - f.offset > 1e-9) throw InvalidInput("polyhedron: empty interior");
    }
    return {static_cast<int>(d), std::move(poly)};
}

std::string_view ConvexConstraint::kind_name() const {
    return std::visit(Overloaded{[](const ZeroFunction&) { return std::string_view("zero"); },
                                 [](const QuadraticFunction&) { return std::string_view("quadratic"); },
                                 [](const BoxSet&) { return std::string_view("box"); },
                                 [](const BallSet&) { return std::string_view("ball"); },
                                 [](const Halfspace&) { return std::string_view("halfspace"); },
                                 [](const PolyhedronSet&) { return std::string_view("polyhedron"); }},
                      kind_);
}

bool ConvexConstraint::is_indicator() const {
    return !std::holds_alternative<ZeroFunction>(kind_) && !std::holds_alternative<QuadraticFunction>(kind_);
}

double ConvexConstraint::feasibility_tol(const Vec& x) { return 1e-10 * (1.0 + x.lpNorm<Eigen::Infinity>()); }

bool ConvexConstraint::in_domain(const Vec& x) const {
    if (!is_indicator()) return true;
    return distance_to_domain(x) <= feasibility_tol(x);
}

ExtendedReal ConvexConstraint::evaluate(const Vec& x) const {
    require_dim(*this, x, "evaluate");
    require_finite(x, "evaluate");
    if (const auto* q = std::get_if<QuadraticFunction>(&kind_)) return 0.5 * x.dot(q->q * x);
    if (std::holds_alternative<ZeroFunction>(kind_)) return 0.0;
    return in_domain(x) ? ExtendedReal(0.0) : ExtendedReal::pos_inf();
}

Vec ConvexConstraint::project(const Vec& x) const {
    require_dim(*this, x, "project");
    require_finite(x, "project");
    return std::visit(Overloaded{[&](const ZeroFunction&) -> Vec { return x; },
                                 [&](const QuadraticFunction&) -> Vec { return x; },
                                 [&](const BoxSet& b) -> Vec { return x.cwiseMax(b.lo).cwiseMin(b.hi); },
                                 [&](const BallSet& b) -> Vec {
                                     const Vec r = x - b.center;
                                     const double n = r.norm();
                                     if (n <= b.radius) return x;
                                     return b.center + (b.radius / n) * r;
                                 },
                                 [&](const Halfspace& h) -> Vec { return project_halfspace(h, x); },
                                 [&](const PolyhedronSet& p) -> Vec { return project_polyhedron(p, x); }},
                      kind_);
}

double ConvexConstraint::distance_to_domain(const Vec& x) const {
    require_dim(*this, x, "distance_to_domain");
    return std::visit(Overloaded{[&](const ZeroFunction&) { return 0.0; },
                                 [&](const QuadraticFunction&) { return 0.0; },
                                 [&](const BoxSet& b) { return (x - x.cwiseMax(b.lo).cwiseMin(b.hi)).norm(); },
                                 [&](const BallSet& b) { return std::max(0.0, (x - b.center).norm() - b.radius); },
                                 [&](const Halfspace& h) { return std::max(0.0, h.normal.dot(x) - h.offset); },
                                 [&](const PolyhedronSet& p) { return (x - project_polyhedron(p, x)).norm(); }},
                      kind_);
}

double ConvexConstraint::boundary_distance(const Vec& x) const {
    require_dim(*this, x, "boundary_distance");
    return std::visit(Overloaded{[&](const ZeroFunction&) { return kInf; },
                                 [&](const QuadraticFunction&) { return kInf; },
                                 [&](const BoxSet& b) {
                                     const double m = std::min((x - b.lo).minCoeff(), (b.hi - x).minCoeff());
                                     return std::max(0.0, m);
                                 },
                                 [&](const BallSet& b) { return std::max(0.0, b.radius - (x - b.center).norm()); },
                                 [&](const Halfspace& h) { return std::max(0.0, h.offset - h.normal.dot(x)); },
                                 [&](const PolyhedronSet& p) {
                                     double m = kInf;
                                     for (const auto& f : p.faces) m = std::min(m, f.offset - f.normal.dot(x));
                                     return std::max(0.0, m);
                                 }},
                      kind_);
}

bool ConvexConstraint::in_interior(const Vec& x) const { return boundary_distance(x) > feasibility_tol(x); }

std::vector<Vec> ConvexConstraint::active_normals(const Vec& x) const {
    require_dim(*this, x, "active_normals");
    const double tol = feasibility_tol(x);
    std::vector<Vec> out;
    std::visit(Overloaded{[](const ZeroFunction&) {}, [](const QuadraticFunction&) {},
                          [&](const BoxSet& b) {
                              for (Eigen::Index i = 0; i < x.size(); ++i) {
                                  if (x(i) <= b.lo(i) + tol) out.push_back(-Vec::Unit(x.size(), i));
                                  if (x(i) >= b.hi(i) - tol) out.push_back(Vec::Unit(x.size(), i));
                              }
                          },
                          [&](const BallSet& b) {
                              const Vec r = x - b.center;
                              const double n = r.norm();
                              if (n >= b.radius - tol) out.push_back(r / n);
                          },
                          [&](const Halfspace& h) {
                              if (h.normal.dot(x) >= h.offset - tol) out.push_back(h.normal);
                          },
                          [&](const PolyhedronSet& p) {
                              for (const auto& f : p.faces) {
                                  if (f.normal.dot(x) >= f.offset - tol) out.push_back(f.normal);
                              }
                          }},
               kind_);
    return out;
}

Vec prox(const ConvexConstraint& phi, double eps, const Vec& x) {
    require_eps(eps, "prox");
    require_dim(phi, x, "prox");
    require_finite(x, "prox");
    if (const auto* q = std::get_if<QuadraticFunction>(&phi.kind())) {
        const Mat system = Mat::Identity(phi.dim(), phi.dim()) + eps * q->q;
        Eigen::LLT<Mat> llt(system);
        if (llt.info() != Eigen::Success) throw NumericError("prox: linear solve failed for quadratic constraint");
        Vec v = llt.solve(x);
        if (!v.allFinite()) throw NumericError("prox: non-finite solution for quadratic constraint");
        return v;
    }
    return phi.project(x);
}

double envelope(const ConvexConstraint& phi, double eps, const Vec& x) {
    const Vec j = prox(phi, eps, x);
    return (x - j).squaredNorm() / (2.0 * eps) + phi.evaluate(j).value();
}

Vec yosida_grad(const ConvexConstraint& phi, double eps, const Vec& x) { return (x - prox(phi, eps, x)) / eps; }

ExtendedReal dir_subdiff(const ConvexConstraint& phi, const Vec& x, const Vec& z, SubdiffMode mode) {
    require_dim(phi, x, "dir_subdiff");
    require_dim(phi, z, "dir_subdiff");
    require_finite(x, "dir_subdiff");
    require_finite(z, "dir_subdiff");
    if (mode == SubdiffMode::upper) return -dir_subdiff(phi, x, -z, SubdiffMode::lower);

    if (const auto* q = std::get_if<QuadraticFunction>(&phi.kind())) return (q->q * x).dot(z);
    if (std::holds_alternative<ZeroFunction>(phi.kind())) return 0.0;

    if (!phi.in_domain(x)) throw DomainError("dir_subdiff: point lies outside closure(Dom phi)");
    const auto normals = phi.active_normals(x);
    // Interior: the subdifferential is {0}. Boundary: 0 iff every generator of
    // the normal cone makes a positive angle with z.
    for (const auto& n : normals) {
        if (!(n.dot(z) > 0.0)) return ExtendedReal::neg_inf();
    }
    return 0.0;
}

std::string_view to_string(YosidaItem item) {
    switch (item) {
        case YosidaItem::i: return "i";
        case YosidaItem::ii: return "ii";
        case YosidaItem::iii: return "iii";
        case YosidaItem::iv: return "iv";
        case YosidaItem::v: return "v";
        case YosidaItem::vi: return "vi";
        case YosidaItem::vii: return "vii";
        case YosidaItem::viii: return "viii";
        case YosidaItem::ix: return "ix";
    }
    return "?";
}

double audit_tolerance(double lhs, double rhs) {
    double scale = 0.0;
    if (std::isfinite(lhs)) scale = std::max(scale, std::abs(lhs));
    if (std::isfinite(rhs)) scale = std::max(scale, std::abs(rhs));
    return 1e-9 + 1e-9 * scale;
}

bool YosidaAuditReport::all_pass() const {
    return std::all_of(records.begin(), records.end(), [](const AuditRecord& r) { return r.pass; });
}

double YosidaAuditReport::worst_slack(YosidaItem item) const {
    double w = kInf;
    for (const auto& r : records) {
        if (r.item == item) w = std::min(w, r.slack);
    }
    return w;
}

namespace {

struct Recorder {
    YosidaAuditReport& report;

    // lhs <= rhs
    void leq(YosidaItem item, std::size_t sample, double eps, double eps2, double lhs, double rhs) {
        const double slack = std::isinf(rhs) && rhs > 0 ? kInf : rhs - lhs;
        push(item, sample, eps, eps2, lhs, rhs, slack);
    }
    // lhs == rhs
    void eq(YosidaItem item, std::size_t sample, double eps, double lhs, double rhs) {
        push(item, sample, eps, 0.0, lhs, rhs, -std::abs(lhs - rhs));
    }
    void push(YosidaItem item, std::size_t sample, double eps, double eps2, double lhs, double rhs, double slack) {
        AuditRecord r{item, sample, eps, eps2, lhs, rhs, slack, false};
        r.pass = slack >= -audit_tolerance(lhs, rhs);
        report.records.push_back(r);
    }
};

}  // namespace

YosidaAuditReport yosida_audit(const ConvexConstraint& phi, const std::vector<double>& eps_list,
                               const std::vector<std::pair<Vec, Vec>>& samples, const Vec& u0) {
    if (samples.empty()) throw PreconditionError("yosida_audit: samples must be nonempty");
    if (eps_list.empty()) throw PreconditionError("yosida_audit: eps_list must be nonempty");
    for (double e : eps_list) require_eps(e, "yosida_audit");
    require_dim(phi, u0, "yosida_audit u0");
    const Vec origin = Vec::Zero(phi.dim());
    if (!phi.in_interior(origin) || phi.evaluate(origin).value() != 0.0) {
        throw PreconditionError("yosida_audit: constraint must satisfy 0 in Int Dom and phi(0) = 0");
    }
    if (!phi.in_interior(u0)) throw PreconditionError("yosida_audit: u0 must lie in the interior of Dom phi");

    YosidaAuditReport report;
    Recorder rec{report};

    struct Point {
        Vec j, g;
        double env;
    };
    auto at = [&](double eps, const Vec& x) {
        Point p;
        p.j = prox(phi, eps, x);
        p.g = (x - p.j) / eps;
        p.env = (x - p.j).squaredNorm() / (2.0 * eps) + phi.evaluate(p.j).value();
        return p;
    };

    const double r0 = std::isfinite(phi.boundary_distance(u0)) ? phi.boundary_distance(u0) : 1.0;
    std::vector<std::pair<double, std::size_t>> vii_terms;  // (<g, x - u0> - r0 |g|, sample) per eps
    std::vector<double> vii_eps;

    for (std::size_t s = 0; s < samples.size(); ++s) {
        const Vec& x = samples[s].first;
        const Vec& y = samples[s].second;
        require_dim(phi, x, "yosida_audit sample");
        require_dim(phi, y, "yosida_audit sample");
        for (double eps : eps_list) {
            const Point px = at(eps, x);
            const Point py = at(eps, y);
            const double phi_x = phi.evaluate(x).value();

            // (i) phi_eps(x) = eps/2 |g|^2 + phi(x - eps g)
            rec.eq(YosidaItem::i, s, eps, px.env,
                   0.5 * eps * px.g.squaredNorm() + phi.evaluate(x - eps * px.g).value());

            // (ii) phi(J) <= phi_eps(x) <= phi(x), recorded as two one-sided checks
            rec.leq(YosidaItem::ii, s, eps, 0.0, phi.evaluate(px.j).value(), px.env);
            rec.leq(YosidaItem::ii, s, eps, 0.0, px.env, phi_x);

            // (iii) g in subdiff phi(J): subgradient inequality at finite test points
            {
                const std::vector<Vec> tests{y, py.j, u0, origin, x};
                const double phi_j = phi.evaluate(px.j).value();
                double worst = kInf, wl = 0.0, wr = 0.0;
                for (const auto& z : tests) {
                    const double phi_z = phi.evaluate(z).value();
                    if (!std::isfinite(phi_z)) continue;
                    const double lhs = px.g.dot(z - px.j) + phi_j;
                    if (phi_z - lhs < worst) {
                        worst = phi_z - lhs;
                        wl = lhs;
                        wr = phi_z;
                    }
                }
                rec.leq(YosidaItem::iii, s, eps, 0.0, wl, wr);
            }

            // (iv) |g(x) - g(y)| <= |x - y| / eps
            rec.leq(YosidaItem::iv, s, eps, 0.0, (px.g - py.g).norm(), (x - y).norm() / eps);
            // (v) <g(x) - g(y), x - y> >= 0
            rec.leq(YosidaItem::v, s, eps, 0.0, 0.0, (px.g - py.g).dot(x - y));

            // (viii) |g| <= |x| / eps
            rec.leq(YosidaItem::viii, s, eps, 0.0, px.g.norm(), x.norm() / eps);
            // (ix) eps/2 |g|^2 <= phi_eps(x) <= <g, x>
            rec.leq(YosidaItem::ix, s, eps, 0.0, 0.5 * eps * px.g.squaredNorm(), px.env);
            rec.leq(YosidaItem::ix, s, eps, 0.0, px.env, px.g.dot(x));

            vii_terms.emplace_back(px.g.dot(x - u0) - r0 * px.g.norm(), s);
            vii_eps.push_back(eps);
        }
        // (vi) <g_e(x) - g_d(y), x - y> >= -(e + d) <g_e(x), g_d(y)>
        for (std::size_t a = 0; a < eps_list.size(); ++a) {
            for (std::size_t b = a; b < eps_list.size(); ++b) {
                const double e = eps_list[a];
                const double dl = eps_list[b];
                const Vec gx = yosida_grad(phi, e, x);
                const Vec gy = yosida_grad(phi, dl, y);
                rec.leq(YosidaItem::vi, s, e, dl, -(e + dl) * gx.dot(gy), (gx - gy).dot(x - y));
            }
        }
    }

    // (vii) r0 |g| <= <g, x - u0> + M0 with M0 fitted to the largest violation.
    double max_violation = 0.0;
    for (const auto& [term, s] : vii_terms) max_violation = std::max(max_violation, -term);
    const double m0 = max_violation + 1e-6 * (1.0 + max_violation);
    for (std::size_t k = 0; k < vii_terms.size(); ++k) {
        const auto& [term, s] = vii_terms[k];
        // lhs = r0|g| - <g, x - u0>, rhs = M0
        rec.leq(YosidaItem::vii, s, vii_eps[k], 0.0, -term, m0);
    }
    report.constants_vii = ItemViiConstants{u0, r0, m0};
    return report;
}

}  // namespace sdvi
