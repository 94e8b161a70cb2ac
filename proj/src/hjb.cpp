// SPDX-License-Identifier: MIT
#include "sdvi/hjb.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

#include "sdvi/error.hpp"
#include "sdvi/parallel.hpp"

namespace sdvi {

namespace {

constexpr int kMaxAxes = 4;
constexpr double kCfl = 0.9;
constexpr std::size_t kMaxFieldEntries = 60'000'000;

using Index = std::array<int, kMaxAxes>;

// Node geometry shared by the solver, greedy extraction and the probe.
struct Geometry {
    int d = 1;
    int axes = 0;
    std::array<int, kMaxAxes> n{};
    std::array<double, kMaxAxes> h{};
    std::array<std::size_t, kMaxAxes> stride{};
    std::size_t count = 0;

    explicit Geometry(const GridSpec& g) {
        axes = g.axes();
        d = static_cast<int>(g.x_nodes.size());
        count = 1;
        for (int a = axes - 1; a >= 0; --a) {
            n[static_cast<std::size_t>(a)] = g.nodes_on(a);
            h[static_cast<std::size_t>(a)] = g.spacing(a);
            stride[static_cast<std::size_t>(a)] = count;
            count *= static_cast<std::size_t>(g.nodes_on(a));
        }
    }

    [[nodiscard]] bool active(int a) const { return n[static_cast<std::size_t>(a)] > 1; }

    [[nodiscard]] Index unravel(std::size_t node) const {
        Index idx{};
        for (int a = 0; a < axes; ++a) {
            idx[static_cast<std::size_t>(a)] =
                static_cast<int>(node / stride[static_cast<std::size_t>(a)] % static_cast<std::size_t>(n[static_cast<std::size_t>(a)]));
        }
        return idx;
    }

    [[nodiscard]] std::size_t ravel(const Index& idx) const {
        std::size_t r = 0;
        for (int a = 0; a < axes; ++a) r += static_cast<std::size_t>(idx[static_cast<std::size_t>(a)]) * stride[static_cast<std::size_t>(a)];
        return r;
    }

    [[nodiscard]] bool interior(const Index& idx) const {
        for (int a = 0; a < axes; ++a) {
            const auto ua = static_cast<std::size_t>(a);
            if (n[ua] > 1 && (idx[ua] == 0 || idx[ua] == n[ua] - 1)) return false;
        }
        return true;
    }

    // Value at an index that may step one node past a face; ghosts are linear
    // extrapolations 2 V_edge - V_inner along each offending axis.
    [[nodiscard]] double ghost(const double* v, Index idx) const {
        for (int a = 0; a < axes; ++a) {
            const auto ua = static_cast<std::size_t>(a);
            if (idx[ua] < 0 || idx[ua] >= n[ua]) {
                const int edge = idx[ua] < 0 ? 0 : n[ua] - 1;
                const int inner = idx[ua] < 0 ? 1 : n[ua] - 2;
                Index e = idx, i = idx;
                e[ua] = edge;
                i[ua] = inner;
                return 2.0 * ghost(v, e) - ghost(v, i);
            }
        }
        return v[ravel(idx)];
    }

    [[nodiscard]] double shifted(const double* v, std::size_t node, const Index& idx, int a, int dir) const {
        const auto ua = static_cast<std::size_t>(a);
        const int j = idx[ua] + dir;
        if (j >= 0 && j < n[ua]) return dir > 0 ? v[node + stride[ua]] : v[node - stride[ua]];
        Index g = idx;
        g[ua] = j;
        return ghost(v, g);
    }
};

struct NodeData {
    std::vector<Vec> x, y, z, grad;
    std::vector<std::vector<double>> ydrift;  // per y axis (zero when transport is off)
};

NodeData node_data(const ReducedScenario& red, const ValueField& field, const Geometry& geo, double eps) {
    NodeData nd;
    const auto& scn = red.scn;
    nd.x.resize(geo.count);
    nd.y.resize(geo.count);
    nd.z.resize(geo.count);
    nd.grad.resize(geo.count);
    nd.ydrift.assign(geo.count, std::vector<double>(static_cast<std::size_t>(geo.d), 0.0));
    const double decay = std::exp(-scn.lambda * scn.delta);
    for (std::size_t node = 0; node < geo.count; ++node) {
        nd.x[node] = field.node_x(node);
        nd.y[node] = field.node_y(node);
        nd.z[node] = red.zeta(nd.x[node]);
        nd.grad[node] = yosida_grad(scn.constraint, eps, nd.x[node]);
        if (red.y_transport) {
            for (int j = 0; j < geo.d; ++j) {
                nd.ydrift[node][static_cast<std::size_t>(j)] =
                    nd.x[node](j) - decay * nd.z[node](j) - scn.lambda * nd.y[node](j);
            }
        }
    }
    return nd;
}

struct Scratch {
    Vec b;
    Mat sig, a;
};

struct NodeResult {
    double best = 0.0;       // inf over u of the discrete operator
    std::size_t u = 0;
    double max_rate = 0.0;   // largest total outflow rate over u
    double self_weight = 1.0;
    double axis_weight = 1.0;
};

// Discrete operator at one node: inf over u of upwinded drift (including the
// penalty), central diffusion and running cost, plus the y transport.
NodeResult node_operator(const ReducedScenario& red, const Geometry& geo, const NodeData& nd, const double* v,
                         std::size_t node, double t, double dt, Scratch& sc) {
    const auto& scn = red.scn;
    const Index idx = geo.unravel(node);
    const double v0 = v[node];
    const Vec& x = nd.x[node];
    const Vec& y = nd.y[node];
    const Vec& z = nd.z[node];
    const Vec& g = nd.grad[node];
    const int d = geo.d;

    double yterm = 0.0, yrate = 0.0;
    for (int j = 0; j < d; ++j) {
        const int a = d + j;
        if (!geo.active(a)) continue;
        const double c = nd.ydrift[node][static_cast<std::size_t>(j)];
        const double hy = geo.h[static_cast<std::size_t>(a)];
        if (c > 0.0) {
            yterm += c * (geo.shifted(v, node, idx, a, +1) - v0) / hy;
        } else if (c < 0.0) {
            yterm += c * (v0 - geo.shifted(v, node, idx, a, -1)) / hy;
        }
        yrate += std::abs(c) / hy;
    }

    std::array<double, kMaxAxes> vp{}, vm{};
    for (int i = 0; i < d; ++i) {
        vp[static_cast<std::size_t>(i)] = geo.shifted(v, node, idx, i, +1);
        vm[static_cast<std::size_t>(i)] = geo.shifted(v, node, idx, i, -1);
    }

    NodeResult res;
    res.best = std::numeric_limits<double>::infinity();
    for (std::size_t ui = 0; ui < scn.controls.size(); ++ui) {
        const Vec& u = scn.controls[ui];
        scn.drift.eval(t, x, y, z, u, sc.b);
        scn.diffusion.eval(t, x, y, z, u, sc.sig);
        sc.a.noalias() = sc.sig * sc.sig.transpose();
        double acc = scn.running_cost.eval(t, x, y, u);
        double rate = yrate, mixed = 0.0;
        double axis_w = std::numeric_limits<double>::infinity();
        for (int i = 0; i < d; ++i) {
            const auto ui_ = static_cast<std::size_t>(i);
            const double hx = geo.h[ui_];
            const double beta = sc.b(i) - g(i);
            acc += beta > 0.0 ? beta * (vp[ui_] - v0) / hx : beta * (v0 - vm[ui_]) / hx;
            const double aii = sc.a(i, i);
            acc += 0.5 * aii * (vp[ui_] - 2.0 * v0 + vm[ui_]) / (hx * hx);
            rate += std::abs(beta) / hx + aii / (hx * hx);
            double off = 0.0;
            for (int j = 0; j < d; ++j) {
                if (j != i) off += std::abs(sc.a(i, j)) / (2.0 * hx * geo.h[static_cast<std::size_t>(j)]);
            }
            axis_w = std::min(axis_w, aii / (2.0 * hx * hx) - off);
        }
        // Mixed derivatives on the seven-point stencil matching the sign of a_ij.
        for (int i = 0; i < d; ++i) {
            for (int j = i + 1; j < d; ++j) {
                const double aij = sc.a(i, j);
                if (aij == 0.0) continue;
                const double k = std::abs(aij) / (2.0 * geo.h[static_cast<std::size_t>(i)] * geo.h[static_cast<std::size_t>(j)]);
                const int sj = aij > 0.0 ? 1 : -1;
                Index pp = idx, mm = idx;
                pp[static_cast<std::size_t>(i)] += 1;
                pp[static_cast<std::size_t>(j)] += sj;
                mm[static_cast<std::size_t>(i)] -= 1;
                mm[static_cast<std::size_t>(j)] -= sj;
                const double diag = geo.ghost(v, pp) + geo.ghost(v, mm);
                const double axis = vp[static_cast<std::size_t>(i)] + vm[static_cast<std::size_t>(i)] +
                                    vp[static_cast<std::size_t>(j)] + vm[static_cast<std::size_t>(j)];
                acc += k * (diag - axis + 2.0 * v0);
                mixed += 2.0 * k;
            }
        }
        res.max_rate = std::max(res.max_rate, rate);
        if (acc < res.best) {
            res.best = acc;
            res.u = ui;
            res.self_weight = 1.0 - dt * (rate - mixed);
            res.axis_weight = dt * axis_w;
        }
    }
    res.best += yterm;
    return res;
}

void check_margin(const ReducedScenario& red, const ValueField& field, const Geometry& geo) {
    const auto& phi = red.scn.constraint;
    if (!phi.is_indicator()) return;
    for (std::size_t node = 0; node < geo.count; ++node) {
        const Index idx = geo.unravel(node);
        for (int a = 0; a < geo.d; ++a) {
            const auto ua = static_cast<std::size_t>(a);
            for (int side : {-1, +1}) {
                const bool on_face = side < 0 ? idx[ua] == 0 : idx[ua] == geo.n[ua] - 1;
                if (!on_face) continue;
                Vec x = field.node_x(node);
                const double hx = geo.h[ua];
                bool bad = false;
                if (phi.in_domain(x)) {
                    Vec outside = x;
                    outside(a) += side * hx;
                    bad = !phi.in_domain(outside);
                } else {
                    for (int k = 1; k <= 2 && !bad; ++k) {
                        Vec inner = x;
                        inner(a) -= side * k * hx;
                        bad = phi.in_domain(inner);
                    }
                }
                if (bad) {
                    std::ostringstream os;
                    os << "grid: x-box face on axis " << a << " cuts the constraint boundary within 3 dx; "
                       << "extend the box past closure(Dom phi) by at least 3 dx so the penalty is representable";
                    throw ConfigError(os.str());
                }
            }
        }
    }
}

std::size_t nearest(double v, double lo, double h, int n) {
    if (n == 1) return 0;
    const long i = std::lround((v - lo) / h);
    return static_cast<std::size_t>(std::clamp<long>(i, 0, n - 1));
}

}  // namespace

// ---------------------------------------------------------------------------

void ReducedScenario::validate() const {
    scn.validate();
    if (scn.d > 2) throw ConfigError("hjb: state dimension d must be <= 2 for the grid solver");
    if (!scn.drift.bz.isZero(0.0)) throw ConfigError("hjb: drift.bz must be zero (z-independent coefficients)");
    for (const auto& m : scn.diffusion.sz) {
        if (!m.isZero(0.0)) throw ConfigError("hjb: diffusion.sz must be zero (z-independent coefficients)");
    }
}

Vec ReducedScenario::zeta(const Vec& x) const {
    return closure == ZClosure::zero ? Vec::Zero(x.size()).eval() : x;
}

void GridSpec::validate(int d) const {
    if (time_steps < 1) throw ConfigError("grid.time_steps: must be >= 1");
    if (static_cast<int>(x_nodes.size()) != d || static_cast<int>(y_nodes.size()) != d || x_lo.size() != d ||
        x_hi.size() != d || y_lo.size() != d || y_hi.size() != d) {
        throw ConfigError("grid: need one x axis and one y axis per state dimension");
    }
    for (int i = 0; i < d; ++i) {
        if (x_nodes[static_cast<std::size_t>(i)] < 3) throw ConfigError("grid.x_nodes: every x axis needs >= 3 nodes");
        if (!(x_hi(i) > x_lo(i))) throw ConfigError("grid: x box needs lo < hi");
        const int ny = y_nodes[static_cast<std::size_t>(i)];
        if (ny != 1 && ny < 3) throw ConfigError("grid.y_nodes: a y axis has 1 node or >= 3 nodes");
        if (ny > 1 && !(y_hi(i) > y_lo(i))) throw ConfigError("grid: y box needs lo < hi on resolved axes");
    }
}

int GridSpec::nodes_on(int axis) const {
    const auto d = static_cast<int>(x_nodes.size());
    return axis < d ? x_nodes[static_cast<std::size_t>(axis)] : y_nodes[static_cast<std::size_t>(axis - d)];
}

double GridSpec::lo(int axis) const {
    const auto d = static_cast<int>(x_nodes.size());
    return axis < d ? x_lo(axis) : y_lo(axis - d);
}

double GridSpec::hi(int axis) const {
    const auto d = static_cast<int>(x_nodes.size());
    return axis < d ? x_hi(axis) : y_hi(axis - d);
}

double GridSpec::spacing(int axis) const {
    const int n = nodes_on(axis);
    return n > 1 ? (hi(axis) - lo(axis)) / (n - 1) : 0.0;
}

std::size_t GridSpec::node_count() const {
    std::size_t c = 1;
    for (int a = 0; a < axes(); ++a) c *= static_cast<std::size_t>(nodes_on(a));
    return c;
}

double GridSpec::max_dx() const {
    double m = 0.0;
    for (int a = 0; a < static_cast<int>(x_nodes.size()); ++a) m = std::max(m, spacing(a));
    return m;
}

std::vector<int> ValueField::unravel(std::size_t node) const {
    const Geometry geo(grid);
    const Index idx = geo.unravel(node);
    return {idx.begin(), idx.begin() + geo.axes};
}

std::size_t ValueField::ravel(const std::vector<int>& idx) const {
    const Geometry geo(grid);
    Index i{};
    std::copy(idx.begin(), idx.end(), i.begin());
    return geo.ravel(i);
}

Vec ValueField::node_x(std::size_t node) const {
    const Geometry geo(grid);
    const Index idx = geo.unravel(node);
    Vec x(geo.d);
    for (int a = 0; a < geo.d; ++a) x(a) = grid.lo(a) + idx[static_cast<std::size_t>(a)] * grid.spacing(a);
    return x;
}

Vec ValueField::node_y(std::size_t node) const {
    const Geometry geo(grid);
    const Index idx = geo.unravel(node);
    Vec y(geo.d);
    for (int j = 0; j < geo.d; ++j) {
        const int a = geo.d + j;
        y(j) = geo.active(a) ? grid.lo(a) + idx[static_cast<std::size_t>(a)] * grid.spacing(a) : grid.lo(a);
    }
    return y;
}

double ValueField::value(double s, const Vec& x, const Vec& y) const {
    const Geometry geo(grid);
    if (x.size() != geo.d || y.size() != geo.d) throw InvalidInput("field value: point has wrong dimension");
    const double tol = 1e-9 * (1.0 + std::abs(horizon));
    if (s < s0 - tol || s > horizon + tol) throw DomainError("field value: time outside [s0, T]");
    const double kt = std::clamp((s - s0) / dt, 0.0, static_cast<double>(grid.time_steps));
    const int k0 = std::min(static_cast<int>(std::floor(kt)), grid.time_steps - 1);
    const double wt = kt - k0;

    std::array<int, kMaxAxes> base{};
    std::array<double, kMaxAxes> frac{};
    for (int a = 0; a < geo.axes; ++a) {
        const auto ua = static_cast<std::size_t>(a);
        if (!geo.active(a)) continue;
        const double c = a < geo.d ? x(a) : y(a - geo.d);
        const double r = (c - grid.lo(a)) / geo.h[ua];
        if (r < -1e-9 || r > geo.n[ua] - 1 + 1e-9) throw DomainError("field value: point outside the grid box");
        const double rc = std::clamp(r, 0.0, static_cast<double>(geo.n[ua] - 1));
        base[ua] = std::min(static_cast<int>(std::floor(rc)), geo.n[ua] - 2);
        frac[ua] = rc - base[ua];
    }
    auto spatial = [&](int layer) {
        double acc = 0.0;
        const int corners = 1 << geo.axes;
        for (int c = 0; c < corners; ++c) {
            double w = 1.0;
            Index idx{};
            bool skip = false;
            for (int a = 0; a < geo.axes; ++a) {
                const auto ua = static_cast<std::size_t>(a);
                const int bit = (c >> a) & 1;
                if (!geo.active(a)) {
                    if (bit) skip = true;
                    idx[ua] = 0;
                    continue;
                }
                idx[ua] = base[ua] + bit;
                w *= bit ? frac[ua] : 1.0 - frac[ua];
            }
            if (skip || w == 0.0) continue;
            acc += w * at(layer, geo.ravel(idx));
        }
        return acc;
    };
    const double v0 = spatial(k0);
    return wt == 0.0 ? v0 : (1.0 - wt) * v0 + wt * spatial(k0 + 1);
}

double hamiltonian(const Scenario& scn, double s, const Vec& x, const Vec& y, const Vec& z, const Vec& u, const Vec& q,
                   const Mat& xmat) {
    Vec b;
    Mat sig;
    scn.drift.eval(s, x, y, z, u, b);
    scn.diffusion.eval(s, x, y, z, u, sig);
    const Mat a = sig * sig.transpose();
    return b.dot(q) + 0.5 * (a * xmat).trace() - scn.running_cost.eval(s, x, y, u);
}

ValueField solve_hjb(const ReducedScenario& red, const GridSpec& grid, std::optional<double> eps, int workers) {
    red.validate();
    grid.validate(red.scn.d);
    const auto& scn = red.scn;
    ValueField field;
    field.grid = grid;
    field.s0 = scn.s0;
    field.horizon = scn.horizon;
    field.dt = (scn.horizon - scn.s0) / grid.time_steps;
    field.eps = eps.value_or(2.0 * grid.max_dx());
    if (!(field.eps > 0.0) || !std::isfinite(field.eps)) throw ConfigError("hjb.eps: must be a positive real");

    const Geometry geo(grid);
    const std::size_t layers = static_cast<std::size_t>(grid.time_steps) + 1;
    if (geo.count * layers > kMaxFieldEntries) {
        throw ConfigError("grid: value field would exceed the memory cap; reduce nodes or time steps");
    }
    check_margin(red, field, geo);
    const NodeData nd = node_data(red, field, geo, field.eps);

    // CFL at load: coefficients are affine in t, so the outflow rate peaks at an end point.
    field.v.assign(geo.count * layers, 0.0);
    double max_rate = 0.0;
    {
        Scratch sc;
        std::vector<double> zeros(geo.count, 0.0);
        for (double t : {scn.s0, scn.horizon}) {
            for (std::size_t node = 0; node < geo.count; ++node) {
                max_rate = std::max(max_rate, node_operator(red, geo, nd, zeros.data(), node, t, field.dt, sc).max_rate);
            }
        }
    }
    field.cfl_number = max_rate * field.dt;
    if (field.cfl_number > kCfl) {
        std::ostringstream os;
        os << "grid.time_steps: CFL number " << field.cfl_number << " exceeds " << kCfl
           << " (dt * (drift/dx + diffusion/dx^2 + penalty/dx)); need at least "
           << static_cast<long>(std::ceil(max_rate * (scn.horizon - scn.s0) / kCfl)) << " time steps";
        throw ConfigError(os.str());
    }

    const std::size_t m = static_cast<std::size_t>(grid.time_steps);
    double* top = field.v.data() + m * geo.count;
    for (std::size_t node = 0; node < geo.count; ++node) {
        top[node] = scn.terminal_cost.eval(0.0, nd.x[node], nd.y[node], Vec());
    }

    const int w = std::max(workers, 1);
    std::vector<Scratch> scratch(static_cast<std::size_t>(w));
    std::vector<double> min_w(static_cast<std::size_t>(w), 1.0);
    std::vector<double> rate_viol(static_cast<std::size_t>(w), 0.0);
    for (std::size_t k = m; k-- > 0;) {
        const double* src = field.v.data() + (k + 1) * geo.count;
        double* dst = field.v.data() + k * geo.count;
        const double t = scn.s0 + static_cast<double>(k + 1) * field.dt;
        parallel_for(geo.count, w, [&](std::size_t wk, std::size_t node) {
            const NodeResult r = node_operator(red, geo, nd, src, node, t, field.dt, scratch[wk]);
            dst[node] = src[node] + field.dt * r.best;
            rate_viol[wk] = std::max(rate_viol[wk], r.max_rate * field.dt);
            if (geo.interior(geo.unravel(node))) {
                min_w[wk] = std::min({min_w[wk], r.self_weight, r.axis_weight});
            }
        });
        for (std::size_t node = 0; node < geo.count; ++node) {
            if (!std::isfinite(dst[node])) {
                std::ostringstream os;
                os << "hjb: non-finite value in time layer " << k << " (t = " << field.layer_time(static_cast<int>(k))
                   << ")";
                throw NumericError(os.str());
            }
        }
        const double viol = *std::max_element(rate_viol.begin(), rate_viol.end());
        if (viol > 1.0 + 1e-12) {
            std::ostringstream os;
            os << "hjb: CFL violated at runtime in layer " << k << " (rate * dt = " << viol << ")";
            throw NumericError(os.str());
        }
    }
    field.min_stencil_weight = *std::min_element(min_w.begin(), min_w.end());
    return field;
}

std::vector<std::size_t> greedy_controls(const ReducedScenario& red, const ValueField& field, int layer) {
    const Geometry geo(field.grid);
    const int src_layer = std::min(layer + 1, field.grid.time_steps);
    const NodeData nd = node_data(red, field, geo, field.eps);
    std::vector<std::size_t> out(geo.count);
    Scratch sc;
    const double* v = field.v.data() + static_cast<std::size_t>(src_layer) * geo.count;
    for (std::size_t node = 0; node < geo.count; ++node) {
        out[node] = node_operator(red, geo, nd, v, node, field.layer_time(src_layer), field.dt, sc).u;
    }
    return out;
}

Policy greedy_policy(const ReducedScenario& red, const ValueField& field, int layer) {
    const auto& g = field.grid;
    const int d = red.scn.d;
    FeedbackTablePolicy tab;
    tab.lo.resize(2 * d);
    tab.hi.resize(2 * d);
    for (int a = 0; a < 2 * d; ++a) {
        tab.lo(a) = g.lo(a);
        tab.hi(a) = g.nodes_on(a) > 1 ? g.hi(a) : g.lo(a);
        tab.nodes.push_back(g.nodes_on(a));
    }
    tab.controls = greedy_controls(red, field, layer);
    return Policy(std::move(tab), "greedy-grid");
}

// ---------------------------------------------------------------------------

ViscosityReport viscosity_probe(const ReducedScenario& red, const ValueField& field,
                                const std::vector<ProbePoint>& points, int radius, double tol) {
    const auto& scn = red.scn;
    const auto& phi = scn.constraint;
    const Geometry geo(field.grid);
    const int d = geo.d;
    std::vector<int> act;
    for (int a = 0; a < geo.axes; ++a) {
        if (geo.active(a)) act.push_back(a);
    }
    const int na = static_cast<int>(act.size());
    const int cols = 2 + na + na * (na + 1) / 2;
    ViscosityReport rep;
    rep.tolerance = tol;
    const double decay = std::exp(-scn.lambda * scn.delta);

    for (const auto& p : points) {
        auto skip = [&](const std::string& why) {
            for (const char* side : {"sub", "super"}) {
                ViscosityRecord r;
                r.point = p;
                r.side = side;
                r.skipped = true;
                r.reason = why;
                rep.records.push_back(r);
            }
        };
        if (p.x.size() != d || p.y.size() != d) {
            skip("point has wrong dimension");
            continue;
        }
        if (!phi.in_domain(p.x)) {
            skip("x outside closure(Dom phi)");
            continue;
        }
        Index c{};
        bool inside = true;
        for (int a : act) {
            const auto ua = static_cast<std::size_t>(a);
            const double v = a < d ? p.x(a) : p.y(a - d);
            c[ua] = static_cast<int>(nearest(v, field.grid.lo(a), geo.h[ua], geo.n[ua]));
            if (c[ua] < radius || c[ua] > geo.n[ua] - 1 - radius) inside = false;
        }
        if (!inside) {
            skip("stencil leaves the grid (point not interior)");
            continue;
        }
        const int m = field.grid.time_steps;
        if (m < 2) {
            skip("need at least 3 time layers");
            continue;
        }
        const int kc = static_cast<int>(std::lround((p.s - field.s0) / field.dt));
        const int k0 = std::clamp(kc - 1, 0, m - 2);

        // Least-squares fit of Psi = c0 + ct (t - s) + g.xi + 1/2 xi^T H xi.
        int per_layer = 1;
        for (int i = 0; i < na; ++i) per_layer *= 2 * radius + 1;
        Mat A(3 * per_layer, cols);
        Vec rhs(3 * per_layer);
        int row = 0;
        Vec center(na);
        for (int i = 0; i < na; ++i) {
            const int a = act[static_cast<std::size_t>(i)];
            center(i) = field.grid.lo(a) + c[static_cast<std::size_t>(a)] * geo.h[static_cast<std::size_t>(a)];
        }
        for (int layer = k0; layer < k0 + 3; ++layer) {
            for (int q = 0; q < per_layer; ++q) {
                Index idx = c;
                int rem = q;
                Vec xi(na);
                for (int i = 0; i < na; ++i) {
                    const int a = act[static_cast<std::size_t>(i)];
                    const int off = rem % (2 * radius + 1) - radius;
                    rem /= 2 * radius + 1;
                    idx[static_cast<std::size_t>(a)] += off;
                    xi(i) = off * geo.h[static_cast<std::size_t>(a)];
                }
                int col = 0;
                A(row, col++) = 1.0;
                A(row, col++) = field.layer_time(layer) - p.s;
                for (int i = 0; i < na; ++i) A(row, col++) = xi(i);
                for (int i = 0; i < na; ++i) {
                    for (int j = i; j < na; ++j) A(row, col++) = i == j ? 0.5 * xi(i) * xi(i) : xi(i) * xi(j);
                }
                rhs(row) = field.at(layer, geo.ravel(idx));
                ++row;
            }
        }
        const Eigen::ColPivHouseholderQR<Mat> qr(A);
        if (qr.rank() < cols) {
            skip("rank-deficient stencil fit");
            continue;
        }
        const Vec coef = qr.solve(rhs);
        const double psi_t = coef(1);
        Vec grad = coef.segment(2, na);
        Mat hess = Mat::Zero(na, na);
        {
            int col = 2 + na;
            for (int i = 0; i < na; ++i) {
                for (int j = i; j < na; ++j) {
                    hess(i, j) = coef(col);
                    hess(j, i) = coef(col);
                    ++col;
                }
            }
        }
        Vec offset(na);
        for (int i = 0; i < na; ++i) {
            const int a = act[static_cast<std::size_t>(i)];
            offset(i) = (a < d ? p.x(a) : p.y(a - d)) - center(i);
        }
        grad += hess * offset;

        Vec dx = Vec::Zero(d), dy = Vec::Zero(d);
        Mat dxx = Mat::Zero(d, d);
        for (int i = 0; i < na; ++i) {
            const int a = act[static_cast<std::size_t>(i)];
            if (a < d) {
                dx(a) = grad(i);
                for (int j = 0; j < na; ++j) {
                    const int b = act[static_cast<std::size_t>(j)];
                    if (b < d) dxx(a, b) = hess(i, j);
                }
            } else {
                dy(a - d) = grad(i);
            }
        }
        const Vec z = red.zeta(p.x);
        double sup_h = -std::numeric_limits<double>::infinity();
        for (const auto& u : scn.controls) {
            sup_h = std::max(sup_h, hamiltonian(scn, p.s, p.x, p.y, z, u, -dx, -dxx));
        }
        double transport = 0.0;
        if (red.y_transport) {
            for (int j = 0; j < d; ++j) transport += (p.x(j) - decay * z(j) - scn.lambda * p.y(j)) * dy(j);
        }
        const double lhs = -psi_t + sup_h - transport;
        const Vec dirv = -dx;
        const ExtendedReal upper = dir_subdiff(phi, p.x, dirv, SubdiffMode::upper);
        const ExtendedReal lower = dir_subdiff(phi, p.x, dirv, SubdiffMode::lower);

        ViscosityRecord sub;
        sub.point = p;
        sub.side = "sub";
        sub.lhs = lhs;
        sub.rhs = upper.value();
        if (!upper.is_finite()) {
            sub.vacuous = true;
            sub.pass = upper.is_pos_inf();
            sub.slack = upper.is_pos_inf() ? std::numeric_limits<double>::infinity()
                                           : -std::numeric_limits<double>::infinity();
        } else {
            sub.slack = upper.value() - lhs;
            sub.pass = sub.slack >= -tol;
        }
        ViscosityRecord sup;
        sup.point = p;
        sup.side = "super";
        sup.lhs = lhs;
        sup.rhs = lower.value();
        if (!lower.is_finite()) {
            sup.vacuous = true;
            sup.pass = lower.is_neg_inf();
            sup.slack = lower.is_neg_inf() ? std::numeric_limits<double>::infinity()
                                           : -std::numeric_limits<double>::infinity();
        } else {
            sup.slack = lhs - lower.value();
            sup.pass = sup.slack >= -tol;
        }
        rep.records.push_back(sub);
        rep.records.push_back(sup);
    }
    return rep;
}

// ---------------------------------------------------------------------------

std::vector<CompareRow> compare_mc(const ValueField& field, const ReducedScenario& red, const PolicyFamily& family,
                                   const std::vector<ProbePoint>& points, const SolverConfig& cfg,
                                   const ValueField* coarse) {
    const auto& scn = red.scn;
    std::vector<CompareRow> rows;
    for (const auto& p : points) {
        CompareRow row;
        row.point = p;
        rows.push_back(row);
        CompareRow& r = rows.back();
        if (p.x.size() != scn.d || p.y.size() != scn.d) {
            r.reason = "point has wrong dimension";
            continue;
        }
        const Vec y_curve = scn.lambda != 0.0
                                ? Vec(p.x * ((1.0 - std::exp(-scn.lambda * scn.delta)) / scn.lambda))
                                : Vec(p.x * scn.delta);
        if ((p.y - y_curve).lpNorm<Eigen::Infinity>() > 1e-6 * (1.0 + y_curve.lpNorm<Eigen::Infinity>())) {
            r.reason = "not on the constant-history curve y = y(x)";
            continue;
        }
        if (!scn.constraint.in_domain(p.x)) {
            r.reason = "x outside closure(Dom phi)";
            continue;
        }
        try {
            (void)aligned_steps(scn.horizon - p.s, cfg.h, "T - s");
            r.v_grid = field.value(p.s, p.x, p.y);
        } catch (const Error& e) {
            r.reason = e.what();
            continue;
        }
        InitialData init{p.s, PathSegment::constant(p.x, scn.delta, cfg.h)};
        const ValueEstimate ve = estimate_value(scn, family, init, cfg);
        r.v_mc = ve.v_hat;
        r.se = ve.se;
        r.grid_error = field.grid.max_dx() + field.dt;
        if (coarse) r.grid_error += std::abs(r.v_grid - coarse->value(p.s, p.x, p.y));
        r.mc_error = 3.0 * ve.se;
        const int layer = std::clamp(static_cast<int>(std::lround((p.s - field.s0) / field.dt)), 0,
                                     field.grid.time_steps);
        const Policy greedy = greedy_policy(red, field, layer);
        const CostEstimate jg = estimate_cost(scn, greedy, init, cfg);
        r.family_bias = std::max(0.0, ve.v_hat - jg.j.mean);
        r.budget = r.grid_error + r.mc_error + r.family_bias;
        r.discrepancy = std::abs(r.v_grid - r.v_mc);
        r.comparable = true;
        r.pass = r.discrepancy <= r.budget;
    }
    return rows;
}

void write_field_csv(const ValueField& field, std::ostream& os) {
    const Geometry geo(field.grid);
    const int d = geo.d;
    os << 's';
    if (d == 1) {
        os << ",x,y";
    } else {
        for (int i = 0; i < d; ++i) os << ",x_" << i;
        for (int i = 0; i < d; ++i) os << ",y_" << i;
    }
    os << ",v\n";
    char buf[40];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << buf;
    };
    std::vector<Vec> xs(geo.count), ys(geo.count);
    for (std::size_t node = 0; node < geo.count; ++node) {
        xs[node] = field.node_x(node);
        ys[node] = field.node_y(node);
    }
    for (int k = 0; k < field.layers(); ++k) {
        for (std::size_t node = 0; node < geo.count; ++node) {
            put(field.layer_time(k));
            for (int i = 0; i < d; ++i) {
                os << ',';
                put(xs[node](i));
            }
            for (int i = 0; i < d; ++i) {
                os << ',';
                put(ys[node](i));
            }
            os << ',';
            put(field.at(k, node));
            os << '\n';
        }
    }
}

}  // namespace sdvi
