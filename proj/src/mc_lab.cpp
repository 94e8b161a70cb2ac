// SPDX-License-Identifier: MIT
#include "sdvi/mc_lab.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

#include "sdvi/error.hpp"
#include "sdvi/parallel.hpp"

namespace sdvi {

namespace {

void check_init(const Scenario& scn, const InitialData& init, const SolverConfig& cfg) {
    if (!(init.s >= 0.0) || !(init.s < scn.horizon)) {
        std::ostringstream os;
        os << "initial time s = " << init.s << " must lie in [0, T)";
        throw ConfigError(os.str());
    }
    (void)aligned_steps(scn.horizon - init.s, cfg.h, "T - s");
    if (std::abs(init.xi.h - cfg.h) > 1e-12 * cfg.h) throw ConfigError("initial path: sampling step differs from solver.h");
    init.xi.validate(scn.delta, scn.constraint);
}

// Records X and K from grid index `from` on, and checksums the increments of
// the steps taken from there.
struct TrackObserver {
    static constexpr bool kNeedsPhi = false;
    std::size_t from = 0;
    int d = 1;
    std::vector<double> x, k;
    Checksum cs;

    void point(std::size_t i, double, const Vec& xv, const Vec& kv, const Vec&, const Vec&) {
        if (i < from) return;
        x.insert(x.end(), xv.data(), xv.data() + d);
        k.insert(k.end(), kv.data(), kv.data() + d);
    }
    void step(const StepInfo& s) {
        if (s.i >= from) cs.add(std::span<const double>(s.dw.data(), static_cast<std::size_t>(s.dw.size())));
    }
};

double sup_sq_diff(const std::vector<double>& a, const std::vector<double>& b, int d) {
    double m = 0.0;
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; i += static_cast<std::size_t>(d)) {
        double s = 0.0;
        for (int j = 0; j < d; ++j) {
            const double e = a[i + static_cast<std::size_t>(j)] - b[i + static_cast<std::size_t>(j)];
            s += e * e;
        }
        m = std::max(m, s);
    }
    return m;
}

struct MomentObserver {
    static constexpr bool kNeedsPhi = true;
    double h = 0.0;
    double sup_x2 = 0.0, sup_y2 = 0.0, int_z2 = 0.0, sup_k2 = 0.0, k_bv = 0.0, int_phi = 0.0;
    double min_comp = std::numeric_limits<double>::infinity();
    Vec x_last;
    Checksum cs;

    void point(std::size_t, double, const Vec& x, const Vec& k, const Vec& y, const Vec&) {
        sup_x2 = std::max(sup_x2, x.squaredNorm());
        sup_y2 = std::max(sup_y2, y.squaredNorm());
        sup_k2 = std::max(sup_k2, k.squaredNorm());
        min_comp = std::min(min_comp, x.minCoeff());
        x_last = x;
    }
    void step(const StepInfo& s) {
        int_z2 += h * s.z.squaredNorm();
        k_bv += s.dk.norm();
        int_phi += h * s.phi_hat;
        cs.add(std::span<const double>(s.dw.data(), static_cast<std::size_t>(s.dw.size())));
    }
};

struct CostObserver {
    static constexpr bool kNeedsPhi = false;
    const Scenario& scn;
    double h;
    std::vector<Vec>* xs;  // grid states after the start, when a window is requested
    double running = 0.0;
    Vec x_end, y_end;

    void point(std::size_t i, double, const Vec& x, const Vec&, const Vec& y, const Vec&) {
        x_end = x;
        y_end = y;
        if (xs && i > 0) xs->push_back(x);
    }
    void step(const StepInfo& s) { running += h * scn.running_cost.eval(s.t, s.x, s.y, scn.controls[s.u]); }
};

}  // namespace

double gamma1(double s, const PathSegment& xi, double s2, const PathSegment& xi2, double delta) {
    if (xi.values.size() != xi2.values.size() || xi.values.empty()) {
        throw InvalidInput("gamma1: initial paths must share the sampling grid");
    }
    const double h = xi.h;
    double sup = 0.0;
    for (std::size_t j = 0; j < xi.values.size(); ++j) sup = std::max(sup, (xi.values[j] - xi2.values[j]).squaredNorm());
    const std::size_t lag = xi.values.size() - 1;
    if (lag == 0 || delta == 0.0) return sup;
    const long shift = aligned_steps(std::abs(s2 - s), h, "|s - s'|") * (s2 >= s ? 1 : -1);
    double integral = 0.0;
    for (std::size_t j = 0; j <= lag; ++j) {
        // r - s2 = -delta + j h and r - s = r - s2 + (s2 - s).
        const long idx = std::clamp<long>(static_cast<long>(j) + shift, 0, static_cast<long>(lag));
        const double w = (j == 0 || j == lag) ? 0.5 * h : h;
        integral += w * (xi2.values[static_cast<std::size_t>(idx)] - xi2.values[j]).squaredNorm();
    }
    return sup + integral;
}

double gamma2(const PathSegment& xi, const ConvexConstraint& phi) {
    const ExtendedReal p0 = phi.evaluate(xi.at_zero());
    if (!p0.is_finite()) throw DomainError("gamma2: xi(0) lies outside Dom phi");
    const double n = xi.sup_norm();
    return 1.0 + p0.value() * p0.value() + n * n * n * n;
}

MomentReport estimate_moments(const Scenario& scn, const Policy& policy, const InitialData& init,
                              const SolverConfig& cfg) {
    check_init(scn, init, cfg);
    policy.validate(scn);
    const std::size_t n = cfg.n_paths;
    std::vector<double> sx2(n), sx4(n), sy2(n), iz2(n), sk2(n), kbv(n), kbv2(n), iphi(n), iphi2(n), tx2(n), mins(n);
    std::vector<std::uint64_t> sums(n);
    std::vector<std::vector<double>> tmean(static_cast<std::size_t>(scn.d), std::vector<double>(n));
    RunnerPool pool(scn, cfg, cfg.workers);
    parallel_for(n, cfg.workers, [&](std::size_t w, std::size_t i) {
        MomentObserver obs;
        obs.h = cfg.h;
        pool.get(w).run(policy, init.xi, NoiseStream(cfg.seed, i), init.s, scn.horizon, obs);
        sx2[i] = obs.sup_x2;
        sx4[i] = obs.sup_x2 * obs.sup_x2;
        sy2[i] = obs.sup_y2;
        iz2[i] = obs.int_z2;
        sk2[i] = obs.sup_k2;
        kbv[i] = obs.k_bv;
        kbv2[i] = obs.k_bv * obs.k_bv;
        iphi[i] = obs.int_phi;
        iphi2[i] = obs.int_phi * obs.int_phi;
        tx2[i] = obs.x_last.squaredNorm();
        mins[i] = obs.min_comp;
        for (int c = 0; c < scn.d; ++c) tmean[static_cast<std::size_t>(c)][i] = obs.x_last(c);
        sums[i] = obs.cs.value();
    });
    MomentReport r;
    r.n_paths = n;
    r.sup_x2 = estimate(sx2);
    r.sup_x4 = estimate(sx4);
    r.sup_y2 = estimate(sy2);
    r.int_z2 = estimate(iz2);
    r.sup_k2 = estimate(sk2);
    r.k_bv = estimate(kbv);
    r.k_bv2 = estimate(kbv2);
    r.int_phi = estimate(iphi);
    r.int_phi2 = estimate(iphi2);
    r.terminal_x2 = estimate(tx2);
    for (const auto& c : tmean) r.terminal_mean.push_back(estimate(c));
    r.min_component = *std::min_element(mins.begin(), mins.end());
    Checksum all;
    for (auto v : sums) all.add(std::bit_cast<double>(v));
    r.noise_checksum = all.value();

    for (const Estimate* e : {&r.sup_x2, &r.sup_x4, &r.sup_y2, &r.int_z2, &r.sup_k2, &r.k_bv, &r.k_bv2, &r.int_phi,
                              &r.int_phi2, &r.terminal_x2}) {
        if (!std::isfinite(e->mean) || !std::isfinite(e->se)) throw NumericError("estimate_moments: non-finite estimate");
    }
    return r;
}

std::vector<BoundRatio> apriori_bound_check(const MomentReport& report, const PathSegment& xi,
                                            const ConvexConstraint&) {
    const double n2 = xi.sup_norm() * xi.sup_norm();
    std::vector<BoundRatio> out;
    auto add = [&](std::string name, double v) { out.push_back({std::move(name), v, std::isfinite(v)}); };
    add("sup_x2", report.sup_x2.mean / (1.0 + n2));
    add("second_moment_bound",
        (report.sup_x2.mean + report.sup_k2.mean + report.k_bv.mean + report.int_phi.mean) / (1.0 + n2));
    add("fourth_moment_bound", (report.sup_x4.mean + report.k_bv2.mean + report.int_phi2.mean) / (1.0 + n2 * n2));
    return out;
}

ScalingStudy apriori_scaling_study(const Scenario& scn, const Policy& policy, const InitialData& init,
                                   const SolverConfig& cfg, const std::vector<double>& factors, double growth_cap) {
    if (factors.empty()) throw InvalidInput("apriori_scaling_study: need at least one factor");
    ScalingStudy st;
    for (double f : factors) {
        InitialData scaled = init;
        for (auto& v : scaled.xi.values) v *= f;
        const MomentReport rep = estimate_moments(scn, policy, scaled, cfg);
        st.rows.push_back({f, apriori_bound_check(rep, scaled.xi, scn.constraint)});
    }
    const auto& base = st.rows.front().ratios;
    for (const auto& row : st.rows) {
        for (std::size_t j = 0; j < row.ratios.size(); ++j) {
            if (!row.ratios[j].finite || row.ratios[j].value > growth_cap * base[j].value + 1e-9) st.pass = false;
        }
    }
    return st;
}

DependenceRecord dependence_study(const Scenario& scn, const InitialData& a, const InitialData& b,
                                  const Policy& policy, const SolverConfig& cfg) {
    check_init(scn, a, cfg);
    check_init(scn, b, cfg);
    policy.validate(scn);
    const double sc = std::max(a.s, b.s);
    const auto from_a = static_cast<std::size_t>(aligned_steps(sc - a.s, cfg.h, "s' - s"));
    const auto from_b = static_cast<std::size_t>(aligned_steps(sc - b.s, cfg.h, "s' - s"));
    const std::size_t n = cfg.n_paths;
    std::vector<double> dx(n), dk(n);
    std::vector<char> same(n, 1);
    RunnerPool pool(scn, cfg, cfg.workers);
    parallel_for(n, cfg.workers, [&](std::size_t w, std::size_t i) {
        PathRunner& runner = pool.get(w);
        const NoiseStream stream(cfg.seed, i);
        TrackObserver oa{from_a, scn.d, {}, {}, {}};
        TrackObserver ob{from_b, scn.d, {}, {}, {}};
        runner.run(policy, a.xi, stream, a.s, scn.horizon, oa);
        runner.run(policy, b.xi, stream, b.s, scn.horizon, ob);
        dx[i] = sup_sq_diff(oa.x, ob.x, scn.d);
        dk[i] = sup_sq_diff(oa.k, ob.k, scn.d);
        same[i] = oa.cs.value() == ob.cs.value();
    });
    DependenceRecord r;
    r.sup_dx2 = estimate(dx);
    r.sup_dk2 = estimate(dk);
    r.gamma1 = gamma1(a.s, a.xi, b.s, b.xi, scn.delta);
    const double na = a.xi.sup_norm(), nb = b.xi.sup_norm();
    r.rhs_shape = r.gamma1 + std::abs(a.s - b.s) * (1.0 + na * na + nb * nb);
    const double lhs = r.sup_dx2.mean + r.sup_dk2.mean;
    r.empirical_c = (lhs == 0.0 && r.rhs_shape == 0.0) ? 0.0 : lhs / r.rhs_shape;
    r.crn_verified = std::all_of(same.begin(), same.end(), [](char c) { return c != 0; });
    return r;
}

CauchyReport cauchy_rate_study(const Scenario& scn, const Policy& policy, const InitialData& init,
                               const std::vector<double>& eps_list, const SolverConfig& cfg) {
    check_init(scn, init, cfg);
    policy.validate(scn);
    if (eps_list.size() < 2) throw ConfigError("eps_list: need at least two values");
    for (std::size_t j = 0; j < eps_list.size(); ++j) {
        if (!(eps_list[j] >= 2.0 * cfg.h * (1.0 - 1e-12))) {
            std::ostringstream os;
            os << "eps_list[" << j << "] = " << eps_list[j] << " is below 2h = " << 2.0 * cfg.h
               << " (stability guard of the explicit penalized scheme)";
            throw ConfigError(os.str());
        }
        if (j > 0 && !(eps_list[j] < eps_list[j - 1])) throw ConfigError("eps_list: must be strictly decreasing");
    }
    const std::size_t ne = eps_list.size();
    std::vector<std::unique_ptr<RunnerPool>> pools;
    for (double e : eps_list) {
        SolverConfig c = cfg;
        c.scheme = Scheme::penalized_explicit;
        c.eps = e;
        pools.push_back(std::make_unique<RunnerPool>(scn, c, cfg.workers));
    }
    SolverConfig ref_cfg = cfg;
    ref_cfg.scheme = Scheme::prox_implicit;
    RunnerPool ref_pool(scn, ref_cfg, cfg.workers);

    const std::size_t n = cfg.n_paths;
    std::vector<std::vector<double>> pair(ne - 1, std::vector<double>(n)), ref(ne, std::vector<double>(n));
    std::vector<char> same(n, 1);
    parallel_for(n, cfg.workers, [&](std::size_t w, std::size_t i) {
        const NoiseStream stream(cfg.seed, i);
        TrackObserver ro{0, scn.d, {}, {}, {}};
        ref_pool.get(w).run(policy, init.xi, stream, init.s, scn.horizon, ro);
        std::vector<TrackObserver> obs(ne, TrackObserver{0, scn.d, {}, {}, {}});
        for (std::size_t j = 0; j < ne; ++j) {
            pools[j]->get(w).run(policy, init.xi, stream, init.s, scn.horizon, obs[j]);
            ref[j][i] = sup_sq_diff(obs[j].x, ro.x, scn.d);
            if (obs[j].cs.value() != ro.cs.value()) same[i] = 0;
        }
        for (std::size_t j = 0; j + 1 < ne; ++j) pair[j][i] = sup_sq_diff(obs[j].x, obs[j + 1].x, scn.d);
    });

    CauchyReport rep;
    rep.eps = eps_list;
    rep.gamma2 = gamma2(init.xi, scn.constraint);
    const double g = std::pow(rep.gamma2, 0.25);
    for (std::size_t j = 0; j < ne; ++j) rep.reference_gap.push_back(estimate(ref[j]));
    for (std::size_t j = 0; j + 1 < ne; ++j) {
        CauchyRow row;
        row.eps = eps_list[j];
        row.eps2 = eps_list[j + 1];
        row.sup_dx2 = estimate(pair[j]);
        row.shape = (std::pow(row.eps, 0.125) + std::pow(row.eps2, 0.125)) * g;
        row.ratio = row.sup_dx2.mean / row.shape;
        rep.rows.push_back(row);
    }
    rep.strictly_decreasing = true;
    for (std::size_t j = 1; j < rep.rows.size(); ++j) {
        if (!(rep.rows[j].sup_dx2.mean < rep.rows[j - 1].sup_dx2.mean)) rep.strictly_decreasing = false;
    }
    double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
    bool any_zero = false;
    for (const auto& row : rep.rows) {
        rmin = std::min(rmin, row.ratio);
        rmax = std::max(rmax, row.ratio);
        any_zero = any_zero || row.sup_dx2.mean <= 0.0;
    }
    rep.ratio_spread = rmax == 0.0 ? 1.0 : (rmin == 0.0 ? std::numeric_limits<double>::infinity() : rmax / rmin);
    if (!any_zero && rep.rows.size() >= 2) {
        double mx = 0.0, my = 0.0;
        const double m = static_cast<double>(rep.rows.size());
        for (const auto& row : rep.rows) {
            mx += std::log(std::pow(row.eps, 0.125) + std::pow(row.eps2, 0.125)) / m;
            my += std::log(row.sup_dx2.mean) / m;
        }
        double sxy = 0.0, sxx = 0.0;
        for (const auto& row : rep.rows) {
            const double dx = std::log(std::pow(row.eps, 0.125) + std::pow(row.eps2, 0.125)) - mx;
            sxy += dx * (std::log(row.sup_dx2.mean) - my);
            sxx += dx * dx;
        }
        rep.slope = sxy / sxx;
        rep.slope_defined = true;
    }
    rep.crn_verified = std::all_of(same.begin(), same.end(), [](char c) { return c != 0; });
    return rep;
}

double path_cost(PathRunner& runner, const Policy& policy, const InitialData& init, const NoiseStream& stream,
                 double t_end, PathSegment* window_out) {
    const Scenario& scn = runner.scenario();
    const double h = runner.config().h;
    std::vector<Vec> xs;
    CostObserver obs{scn, h, window_out ? &xs : nullptr, 0.0, {}, {}};
    runner.run(policy, init.xi, stream, init.s, t_end, obs);
    double j = obs.running;
    if (std::abs(t_end - scn.horizon) <= 1e-9 * h) j += scn.terminal_cost.eval(0.0, obs.x_end, obs.y_end, Vec());
    if (window_out) {
        const std::size_t lag = init.xi.values.size() - 1;
        window_out->h = h;
        window_out->values.clear();
        // Tail of history ++ xs with length lag + 1.
        const std::size_t total = init.xi.values.size() + xs.size();
        for (std::size_t c = total - (lag + 1); c < total; ++c) {
            window_out->values.push_back(c < init.xi.values.size() ? init.xi.values[c] : xs[c - init.xi.values.size()]);
        }
    }
    return j;
}

CostEstimate estimate_cost(const Scenario& scn, const Policy& policy, const InitialData& init,
                           const SolverConfig& cfg) {
    check_init(scn, init, cfg);
    policy.validate(scn);
    CostEstimate out;
    out.samples.resize(cfg.n_paths);
    RunnerPool pool(scn, cfg, cfg.workers);
    parallel_for(cfg.n_paths, cfg.workers, [&](std::size_t w, std::size_t i) {
        out.samples[i] = path_cost(pool.get(w), policy, init, NoiseStream(cfg.seed, i), scn.horizon);
    });
    out.j = estimate(out.samples);
    if (!std::isfinite(out.j.mean)) throw NumericError("estimate_cost: non-finite cost estimate");
    return out;
}

}  // namespace sdvi
