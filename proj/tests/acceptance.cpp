// SPDX-License-Identifier: MIT
//
// Acceptance driver: one PASS/FAIL line per criterion. Pass criterion numbers
// on the command line to run a subset.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles/envelope_oracle.hpp"
#include "sdvi/config.hpp"
#include "sdvi/control.hpp"
#include "sdvi/convex.hpp"
#include "sdvi/hjb.hpp"
#include "sdvi/mc_lab.hpp"
#include "sdvi/runner.hpp"
#include "support.hpp"

using namespace sdvi;
using namespace sdvi::test;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream note;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            note << " [failed: " << what << "]";
        }
    }
};

// ---------------------------------------------------------------- 1

struct Case {
    ConvexConstraint phi;
    oracle::SetSpec spec;
};

Case random_case(int kind, int d, std::mt19937_64& rng) {
    std::normal_distribution<double> N(0.0, 1.0);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    auto normal = [&] {
        Vec v(d);
        for (int i = 0; i < d; ++i) v(i) = N(rng);
        return v;
    };
    oracle::SetSpec s;
    switch (kind) {
        case 0:
            s.kind = oracle::SetSpec::zero;
            return {ConvexConstraint::zero(d), s};
        case 1: {
            Mat a(d, d);
            for (int i = 0; i < d; ++i) a.col(i) = normal();
            s.kind = oracle::SetSpec::quadratic;
            s.q = a.transpose() * a / d;
            return {ConvexConstraint::quadratic(s.q), s};
        }
        case 2: {
            s.kind = oracle::SetSpec::box;
            s.lo = Vec(d);
            s.hi = Vec(d);
            for (int i = 0; i < d; ++i) {
                s.lo(i) = -(0.3 + U(rng));
                s.hi(i) = 0.3 + U(rng);
            }
            return {ConvexConstraint::box(s.lo, s.hi), s};
        }
        case 3: {
            s.kind = oracle::SetSpec::ball;
            s.radius = 0.5 + U(rng);
            const Vec c = normal();
            s.center = c * (0.6 * s.radius * U(rng) / c.norm());
            return {ConvexConstraint::ball(s.center, s.radius), s};
        }
        case 4: {
            s.kind = oracle::SetSpec::halfspace;
            s.faces = {{normal(), 0.2 + U(rng)}};
            return {ConvexConstraint::halfspace(s.faces[0].first, s.faces[0].second), s};
        }
        default: {
            s.kind = oracle::SetSpec::polyhedron;
            std::vector<Halfspace> faces;
            const int count = d == 1 ? 3 : 2 * d + 2;
            for (int f = 0; f < count; ++f) {
                Vec n = normal();
                if (d == 1) n(0) = (f % 2 ? -1.0 : 1.0) * (0.5 + U(rng));
                const double c = 0.3 + U(rng);
                s.faces.emplace_back(n, c);
                faces.push_back(Halfspace{n, c});
            }
            return {ConvexConstraint::polyhedron(faces), s};
        }
    }
}

Outcome criterion1() {
    Outcome o;
    std::mt19937_64 rng(20240611);
    std::normal_distribution<double> N(0.0, 1.0);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const std::vector<YosidaItem> items{YosidaItem::i,  YosidaItem::ii,   YosidaItem::iii, YosidaItem::iv,
                                        YosidaItem::v,  YosidaItem::vi,   YosidaItem::viii, YosidaItem::ix};
    double worst_slack = 1e300, worst_env = 0.0, worst_nonexp = -1e300;
    std::size_t checks = 0;
    for (int d : {1, 2, 4}) {
        for (int kind = 0; kind < 6; ++kind) {
            const Case c = random_case(kind, d, rng);
            for (int s = 0; s < 1000; ++s) {
                Vec x(d), y(d);
                for (int i = 0; i < d; ++i) {
                    x(i) = 1.5 * N(rng);
                    y(i) = 1.5 * N(rng);
                }
                const double eps = std::exp(std::log(0.02) + U(rng) * std::log(100.0));
                const double eps2 = std::exp(std::log(0.02) + U(rng) * std::log(100.0));
                const YosidaAuditReport rep = yosida_audit(c.phi, {eps, eps2}, {{x, y}}, Vec::Zero(d));
                for (auto item : items) worst_slack = std::min(worst_slack, rep.worst_slack(item));
                for (const auto& r : rep.records) {
                    if (r.item != YosidaItem::vii && !r.pass) o.require(false, std::string("item ") + std::string(to_string(r.item)));
                }
                // nonexpansiveness of the proximal map
                const double gap = (prox(c.phi, eps, x) - prox(c.phi, eps, y)).norm() - (x - y).norm();
                worst_nonexp = std::max(worst_nonexp, gap);
                if (d <= 2) {
                    const double ref = oracle::envelope(c.spec, eps, x);
                    worst_env = std::max(worst_env, std::abs(envelope(c.phi, eps, x) - ref));
                }
                ++checks;
            }
        }
    }
    o.require(worst_slack >= -1e-9, "inequality slack");
    o.require(worst_nonexp <= 1e-9, "prox nonexpansive");
    o.require(worst_env <= 1e-6, "envelope vs grid oracle");
    o.note << checks << " samples, worst slack " << worst_slack << ", prox expansion " << worst_nonexp
           << ", envelope error " << worst_env;
    return std::move(o);
}

// ---------------------------------------------------------------- 2

struct Terminal {
    static constexpr bool kNeedsPhi = false;
    double x = 0.0;
    void point(std::size_t, double, const Vec& xv, const Vec&, const Vec&, const Vec&) { x = xv(0); }
    void step(const StepInfo&) {}
};

Outcome criterion2() {
    Outcome o;
    const double a = 1.0, sigma = 0.5, x0 = 1.0, h = 1e-3, T = 1.0;
    Scenario s = Scenario::zeros(1, 1, 1);
    s.delta = 2 * h;
    s.horizon = T;
    s.drift.bx(0, 0) = -a;
    s.diffusion.s0(0, 0) = sigma;
    finish(s);
    SolverConfig cfg;
    cfg.h = h;
    cfg.seed = 7;
    const std::size_t n = 10000;
    PathRunner runner(s, cfg);
    const PathSegment xi = PathSegment::constant(vec1(x0), s.delta, h);
    const Policy pol = Policy::constant(0);
    std::vector<double> xt(n);
    for (std::size_t i = 0; i < n; ++i) {
        Terminal obs;
        runner.run(pol, xi, NoiseStream(cfg.seed, i), obs);
        xt[i] = obs.x;
    }
    const Estimate m = estimate(xt);
    double m2 = 0.0, m4 = 0.0;
    for (double v : xt) {
        const double c = v - m.mean;
        m2 += c * c;
        m4 += c * c * c * c;
    }
    m2 /= static_cast<double>(n - 1);
    m4 /= static_cast<double>(n);
    const double se_var = std::sqrt((m4 - m2 * m2) / static_cast<double>(n));
    const double mean_exact = x0 * std::exp(-a * T);
    const double var_exact = sigma * sigma * (1.0 - std::exp(-2.0 * a * T)) / (2.0 * a);
    const double mean_scheme = x0 * std::pow(1.0 - a * h, T / h);
    o.require(std::abs(m.mean - mean_exact) <= 3.0 * m.se, "mean");
    o.require(std::abs(m.mean - mean_scheme) <= 3.0 * m.se, "scheme mean");
    o.require(std::abs(m2 - var_exact) <= 3.0 * se_var, "variance");
    o.note << "mean " << m.mean << " vs " << mean_exact << " (se " << m.se << "), var " << m2 << " vs " << var_exact
           << " (se " << se_var << ")";
    return std::move(o);
}

// ---------------------------------------------------------------- 3

Outcome criterion3() {
    Outcome o;
    const double h = 1e-4;
    Scenario s = Scenario::zeros(1, 1, 1);
    s.delta = 2 * h;
    s.horizon = 1.0;
    s.diffusion.s0(0, 0) = 1.0;
    s.constraint = ConvexConstraint::halfspace(vec1(-1.0), 0.0);
    finish(s);
    SolverConfig cfg;
    cfg.scheme = Scheme::projection;
    cfg.h = h;
    cfg.seed = 11;
    cfg.n_paths = 10000;
    const InitialData init = constant_init(s, 0.0, h);
    const MomentReport r = estimate_moments(s, Policy::constant(0), init, cfg);
    o.require(r.min_component >= 0.0, "nonnegative samples");
    o.require(std::abs(r.terminal_x2.mean - 1.0) <= 3.0 * r.terminal_x2.se, "E X(T)^2");

    std::size_t checked = 0;
    for (std::uint64_t p = 0; p < 20; ++p) {
        const Trajectory tr = simulate_path(s, Policy::constant(0), init.xi, cfg, NoiseStream(cfg.seed, p));
        const auto audit = solution_audit(tr, s.constraint, {vec1(0.0), vec1(0.5), vec1(1.0), vec1(2.0)}, 1e-9);
        for (const auto& e : audit.inequality) {
            o.require(!e.skipped && e.pass, "audit (vi)");
            ++checked;
        }
        o.require(audit.domain_pass, "audit domain");
    }
    o.note << "min X " << r.min_component << ", E X(T)^2 = " << r.terminal_x2.mean << " +- " << r.terminal_x2.se
           << ", " << checked << " audit entries";
    return std::move(o);
}

// ---------------------------------------------------------------- 4

Outcome criterion4() {
    Outcome o;
    const double h = 0.01;
    Scenario s = Scenario::zeros(1, 1, 1);
    s.delta = 0.1;
    s.horizon = 1.0;
    s.diffusion.s0(0, 0) = 1.0;
    s.constraint = ConvexConstraint::halfspace(vec1(-1.0), 0.0);
    finish(s);
    SolverConfig cfg;
    cfg.scheme = Scheme::penalized_explicit;
    cfg.eps = 0.4;
    cfg.h = h;
    cfg.seed = 3;
    cfg.n_paths = 4000;
    const CauchyReport r =
        cauchy_rate_study(s, Policy::constant(0), constant_init(s, 0.5, h), {0.4, 0.2, 0.1, 0.05}, cfg);
    o.require(r.strictly_decreasing, "strict decrease");
    o.require(r.ratio_spread <= 10.0, "ratio spread");
    o.require(r.crn_verified, "common random numbers");
    o.note << "lhs";
    for (const auto& row : r.rows) o.note << ' ' << row.sup_dx2.mean;
    o.note << ", ratios";
    for (const auto& row : r.rows) o.note << ' ' << row.ratio;
    o.note << ", spread " << r.ratio_spread;
    return std::move(o);
}

// ---------------------------------------------------------------- 5

Outcome criterion5() {
    Outcome o;
    const double h = 0.01;
    Scenario s = Scenario::zeros(1, 1, 1);
    s.delta = 0.2;
    s.horizon = 1.0;
    s.drift.bx(0, 0) = -0.5;
    s.drift.bz(0, 0) = 0.3;
    s.drift.by(0, 0) = 0.2;
    s.diffusion.s0(0, 0) = 0.5;
    finish(s);
    SolverConfig cfg;
    cfg.h = h;
    cfg.seed = 5;
    cfg.n_paths = 2000;
    std::vector<double> ratio;
    std::vector<double> lhs;
    for (double shift : {0.4, 0.2, 0.1}) {
        const DependenceRecord r =
            dependence_study(s, constant_init(s, 0.5, h), constant_init(s, 0.5 + shift, h), Policy::constant(0), cfg);
        o.require(r.crn_verified, "common random numbers");
        lhs.push_back(r.sup_dx2.mean);
        ratio.push_back(r.sup_dx2.mean / r.gamma1);
    }
    const auto [lo, hi] = std::minmax_element(ratio.begin(), ratio.end());
    o.require(lhs[0] > lhs[1] && lhs[1] > lhs[2], "decreasing");
    o.require(*hi <= 2.0 * *lo, "proportional to Gamma1 within 2x");
    o.note << "E sup|dX|^2 / Gamma1 = " << ratio[0] << ", " << ratio[1] << ", " << ratio[2];
    return std::move(o);
}

// ---------------------------------------------------------------- 6

Outcome criterion6() {
    Outcome o;
    const Scenario s = steering(1.0);
    SolverConfig cfg;
    cfg.h = 0.01;
    cfg.n_paths = 2;
    const double x0 = 0.3;
    const InitialData init = constant_init(s, x0, cfg.h);
    const ValueEstimate v = estimate_value(s, constants(s), init, cfg);
    const double exact = x0 - (s.horizon - init.s);
    o.require(std::abs(v.v_hat - exact) <= 1e-12, "value");
    o.require(v.argmin == 0, "argmin u = -1");
    const DppResult r = dpp_residual(s, constants(s), init, 0.5, cfg, NestedBudget{4, 4, 1000});
    o.require(std::abs(r.residual) <= 1e-12, "dpp residual");
    o.note << "V = " << v.v_hat << " (exact " << exact << "), residual " << r.residual;
    return std::move(o);
}

// ---------------------------------------------------------------- 7

Outcome criterion7() {
    Outcome o;
    Scenario s = Scenario::zeros(1, 1, 1);
    s.delta = 0.1;
    s.horizon = 1.0;
    s.drift.bu(0, 0) = 0.5;
    s.diffusion.s0(0, 0) = 1.0;
    s.controls = {vec1(-1.0), vec1(1.0)};
    s.running_cost = Polynomial::constant(1.0);
    finish(s);
    SolverConfig cfg;
    cfg.h = 0.02;
    cfg.seed = 9;
    const DppResult r = dpp_residual(s, constants(s), constant_init(s, 0.2, cfg.h), 0.5, cfg, NestedBudget{2000, 500});
    o.require(r.within_noise, "|residual| <= 3 se");
    o.note << "lhs " << r.lhs << ", rhs " << r.rhs << ", residual " << r.residual << ", 3 se " << 3.0 * r.se;
    return std::move(o);
}

// ---------------------------------------------------------------- 8

GridSpec grid1(double lo, double hi, int nodes, int steps) {
    GridSpec g;
    g.time_steps = steps;
    g.x_lo = vec1(lo);
    g.x_hi = vec1(hi);
    g.y_lo = vec1(0.0);
    g.y_hi = vec1(0.0);
    g.x_nodes = {nodes};
    g.y_nodes = {1};
    return g;
}

Outcome criterion8() {
    Outcome o;
    const Scenario s = steering(1.0);
    const GridSpec g = grid1(-2.0, 2.0, 200, 100);
    const ValueField f = solve_hjb({s, ZClosure::zero, false}, g);
    double err = 0.0;
    bool terminal_exact = true;
    for (int k = 0; k < f.layers(); ++k) {
        for (std::size_t node = 0; node < f.nodes(); ++node) {
            const double x = f.node_x(node)(0);
            if (x >= -0.9 && x <= 1.9) {
                err = std::max(err, std::abs(f.at(k, node) - (x - (s.horizon - f.layer_time(k)))));
            }
        }
    }
    const int last = f.layers() - 1;
    for (std::size_t node = 0; node < f.nodes(); ++node) {
        const double hv = s.terminal_cost.eval(s.horizon, f.node_x(node), f.node_y(node), s.controls[0]);
        terminal_exact = terminal_exact && f.at(last, node) == hv;
    }
    const double thr = 2.0 * (g.max_dx() + f.dt);
    o.require(err <= thr, "sup error");
    o.require(terminal_exact, "terminal layer bitwise");

    Scenario s2 = s;
    s2.terminal_cost = poly({mono(1.0, {1}), mono(0.1, {2})});
    finish(s2);
    const ValueField f2 = solve_hjb({s2, ZClosure::zero, false}, g);
    std::size_t violations = 0;
    for (std::size_t i = 0; i < f.v.size(); ++i) violations += f.v[i] > f2.v[i];
    o.require(violations == 0, "comparison h1 <= h2 => V1 <= V2");
    o.note << "sup error " << err << " (threshold " << thr << "), comparison violations " << violations;
    return std::move(o);
}

// ---------------------------------------------------------------- 9

Outcome criterion9() {
    Outcome o;
    Scenario s = Scenario::zeros(1, 1, 1);
    s.delta = 0.1;
    s.horizon = 1.0;
    s.constraint = ConvexConstraint::halfspace(vec1(-1.0), 0.0);  // {x >= 0}
    s.drift.bu(0, 0) = 1.0;
    s.diffusion.s0(0, 0) = 0.5;
    s.controls = {vec1(-1.0), vec1(1.0)};
    s.terminal_cost = poly({mono(1.0, {2}), mono(-2.0, {1}), mono(1.0)});  // (x - 1)^2
    finish(s);
    const ReducedScenario red{s, ZClosure::zero, false};
    const double eps = 0.04;
    const ValueField fine = solve_hjb(red, grid1(-0.5, 3.5, 201, 2000), eps);
    const ValueField coarse = solve_hjb(red, grid1(-0.5, 3.5, 101, 1000), eps);

    SolverConfig cfg;
    cfg.scheme = Scheme::penalized_explicit;
    cfg.eps = eps;
    cfg.h = 0.005;
    cfg.seed = 17;
    cfg.n_paths = 10000;
    std::size_t comparable = 0;
    double worst = -1e300;
    for (double sp : {0.0, 0.5}) {
        const int layer = static_cast<int>(std::lround((sp - fine.s0) / fine.dt));
        PolicyFamily fam = constants(s);
        fam.push_back(greedy_policy(red, fine, layer));
        std::vector<ProbePoint> pts;
        for (double x : {0.2, 0.8, 1.5}) pts.push_back({sp, vec1(x), vec1(x * s.delta)});
        for (const auto& r : compare_mc(fine, red, fam, pts, cfg, &coarse)) {
            o.require(r.comparable, "point comparable: " + r.reason);
            if (!r.comparable) continue;
            ++comparable;
            o.require(r.pass, "discrepancy within budget");
            worst = std::max(worst, r.discrepancy - r.budget);
            o.note << " (s=" << r.point.s << ",x=" << r.point.x(0) << ": |" << r.v_grid << "-" << r.v_mc
                   << "|=" << r.discrepancy << " <= " << r.budget << ")";
        }
    }
    o.note << " " << comparable << " points, worst margin " << worst;
    return std::move(o);
}

// ---------------------------------------------------------------- 10

Outcome criterion10() {
    Outcome o;
    Scenario s = Scenario::zeros(1, 1, 1);
    s.delta = 0.1;
    s.horizon = 1.0;
    s.constraint = ConvexConstraint::halfspace(vec1(-1.0), 0.0);
    s.diffusion.s0(0, 0) = 0.3;
    s.running_cost = Polynomial::constant(1.0);
    finish(s);
    const GridSpec g = grid1(-0.5, 2.5, 61, 200);
    const ReducedScenario red{s, ZClosure::zero, false};
    const ValueField f = solve_hjb(red, g);
    const double thr = 5.0 * (g.max_dx() + f.dt);
    std::vector<ProbePoint> pts;
    for (int k = 0; k < 50; ++k) pts.push_back({0.1 + 0.015 * k, vec1(0.3 + 0.034 * k), vec1(0.0)});
    const ViscosityReport rep = viscosity_probe(red, f, pts, 2, thr);
    double worst = 0.0;
    std::size_t used = 0;
    for (const auto& r : rep.records) {
        o.require(!r.skipped && !r.vacuous && r.pass, "interior record");
        if (!r.skipped) {
            worst = std::max(worst, std::abs(r.slack));
            ++used;
        }
    }
    o.require(used == 100, "both sides at 50 points");
    o.require(worst <= thr, "slack magnitude");

    // h = x: at x = 0 the fitted -D_x Psi = -1 points out of {x >= 0}.
    Scenario b = s;
    b.running_cost = Polynomial{};
    b.diffusion.s0(0, 0) = 0.0;
    b.terminal_cost = poly({mono(1.0, {1})});
    finish(b);
    const ReducedScenario redb{b, ZClosure::zero, false};
    const ValueField fb = solve_hjb(redb, g);
    std::vector<ProbePoint> edge;
    for (double sp : {0.2, 0.5, 0.8}) edge.push_back({sp, vec1(0.0), vec1(0.0)});
    const ViscosityReport rb = viscosity_probe(redb, fb, edge, 2, thr);
    std::size_t vacuous = 0;
    for (const auto& r : rb.records) {
        o.require(!r.skipped && r.pass, "boundary record");
        vacuous += r.vacuous;
    }
    o.require(vacuous == edge.size(), "one vacuous side per boundary point");
    o.note << "interior worst |slack| " << worst << " (threshold " << thr << "), boundary vacuous " << vacuous << "/"
           << edge.size();
    return std::move(o);
}

// ---------------------------------------------------------------- 11

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

Outcome criterion11() {
    Outcome o;
    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / "sdvi_acceptance_determinism";
    fs::remove_all(root);
    const std::string scenario =
        R"("scenario": {"d": 1, "delta": 0.1, "T": 0.5, "constraint": {"kind": "halfspace", "normal": [-1], "offset": 0},
            "drift": {"bu": [[1]], "bx": [[-0.2]]}, "diffusion": {"s0": [[0.5]]}, "controls": [[-1], [1]],
            "running_cost": [{"coef": 1, "x": [2]}], "terminal_cost": [{"coef": 1, "x": [1]}]})";
    const std::vector<std::pair<std::string, std::string>> studies = {
        {"simulate", R"({"kind": "simulate", "init": {"constant": [0.5]}, "audit_points": [[0], [1]]})"},
        {"moments", R"({"kind": "moments", "init": {"constant": [0.5]}, "policy": {"constant": 1}, "scaling": [1, 2]})"},
        {"dependence", R"({"kind": "dependence", "init": {"constant": [0.5]}, "init2": {"constant": [0.7]}})"},
        {"cauchy-rate", R"({"kind": "cauchy-rate", "init": {"constant": [0.5]}, "eps_list": [0.2, 0.1, 0.05]})"},
        {"cost", R"({"kind": "cost", "init": {"constant": [0.5]}})"},
        {"value", R"({"kind": "value", "init": {"constant": [0.5]}})"},
        {"dpp", R"({"kind": "dpp", "init": {"constant": [0.5]}, "theta": 0.25, "outer": 40, "inner": 8})"},
        {"regularity", R"({"kind": "regularity", "pairs": [{"a": {"constant": [0.5]}, "b": {"constant": [0.6]}}]})"},
        {"gap", R"({"kind": "gap", "init": {"constant": [0.5]}, "eps_list": [0.2, 0.1]})"},
        {"hjb", R"({"kind": "hjb", "grid": {"time_steps": 400, "x_lo": [-0.5], "x_hi": [2.5], "x_nodes": [31]}, "y_transport": false})"},
        {"viscosity-probe", R"({"kind": "viscosity-probe", "grid": {"time_steps": 400, "x_lo": [-0.5], "x_hi": [2.5], "x_nodes": [31]},
            "y_transport": false, "points": [{"s": 0.1, "x": [1.0]}, {"s": 0.2, "x": [0.0]}]})"},
        {"compare", R"({"kind": "compare", "grid": {"time_steps": 400, "x_lo": [-0.5], "x_hi": [2.5], "x_nodes": [31]},
            "y_transport": false, "points": [{"s": 0.0, "x": [1.0], "y": [0.1]}]})"},
    };
    std::size_t identical = 0;
    for (const auto& [kind, study] : studies) {
        const fs::path cfg_path = root / (kind + ".json");
        fs::create_directories(root);
        std::ofstream(cfg_path) << R"({"id": "det", )" << scenario
                                << R"(, "solver": {"scheme": "penalized_explicit", "eps": 0.05, "h": 0.01, "seed": 42, "n_paths": 200}, "study": )"
                                << study << "}";
        std::vector<std::string> csvs, jsons, manifests;
        for (int run_no = 0; run_no < 3; ++run_no) {
            RunOptions opts;
            opts.out_dir = (root / ("run" + std::to_string(run_no))).string();
            opts.workers = run_no == 2 ? 3 : 1;
            std::ostringstream out, err;
            const int rc = run(cfg_path.string(), opts, out, err);
            o.require(rc == 0, kind + " exit " + std::to_string(rc) + " " + err.str());
            const fs::path dir = fs::path(opts.out_dir) / "det";
            csvs.push_back(slurp(dir / (kind + ".csv")));
            jsons.push_back(slurp(dir / (kind + ".json")));
            manifests.push_back(slurp(dir / "manifest.json"));
        }
        const bool same = !csvs[0].empty() && csvs[0] == csvs[1] && csvs[0] == csvs[2] && jsons[0] == jsons[1] &&
                          jsons[0] == jsons[2] && manifests[0] == manifests[2];
        o.require(same, kind + " artifacts differ");
        identical += same;
    }
    fs::remove_all(root);
    o.note << identical << "/" << studies.size() << " studies byte-identical across reruns and worker counts";
    return std::move(o);
}

}  // namespace

int main(int argc, char** argv) {
    struct Criterion {
        int id;
        double limit_s;  // 0 = no runtime bound
        std::function<Outcome()> fn;
    };
    const std::vector<Criterion> all = {
        {1, 10, criterion1},  {2, 30, criterion2},   {3, 60, criterion3},  {4, 300, criterion4},
        {5, 120, criterion5}, {6, 10, criterion6},   {7, 300, criterion7}, {8, 60, criterion8},
        {9, 600, criterion9}, {10, 30, criterion10}, {11, 0, criterion11},
    };
    std::set<int> pick;
    for (int i = 1; i < argc; ++i) pick.insert(std::atoi(argv[i]));
    int failures = 0;
    for (const auto& c : all) {
        if (!pick.empty() && !pick.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.fn();
        } catch (const std::exception& e) {
            out.pass = false;
            out.note << " exception: " << e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.limit_s > 0 && secs > c.limit_s) {
            out.pass = false;
            out.note << " [runtime over " << c.limit_s << " s]";
        }
        std::printf("criterion %2d: %s (%.1f s) %s\n", c.id, out.pass ? "PASS" : "FAIL", secs, out.note.str().c_str());
        std::fflush(stdout);
        failures += !out.pass;
    }
    return failures == 0 ? 0 : 1;
}
