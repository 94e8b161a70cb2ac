// SPDX-License-Identifier: MIT
#include "sdvi/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sdvi/error.hpp"
#include "sdvi/parallel.hpp"

namespace sdvi {

namespace {

void check_family(const Scenario& scn, const PolicyFamily& family) {
    if (family.empty()) throw ConfigError("family: policy family must be nonempty");
    for (const auto& p : family) p.validate(scn);
}

// Argmin with ties broken by the lowest index.
std::size_t argmin(const std::vector<double>& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] < v[best]) best = i;
    }
    return best;
}

}  // namespace

ValueEstimate estimate_value(const Scenario& scn, const PolicyFamily& family, const InitialData& init,
                             const SolverConfig& cfg) {
    check_family(scn, family);
    ValueEstimate out;
    std::vector<double> means;
    for (const auto& p : family) {
        const CostEstimate c = estimate_cost(scn, p, init, cfg);
        out.per_policy.push_back({p.name(), c.j});
        means.push_back(c.j.mean);
    }
    out.argmin = argmin(means);
    out.v_hat = out.per_policy[out.argmin].j.mean;
    out.se = out.per_policy[out.argmin].j.se;
    return out;
}

DppResult dpp_residual(const Scenario& scn, const PolicyFamily& family, const InitialData& init, double theta,
                       const SolverConfig& cfg, const NestedBudget& budget) {
    check_family(scn, family);
    if (budget.outer < 1 || budget.inner < 1) throw ConfigError("dpp: outer and inner path counts must be >= 1");
    if (budget.outer > budget.cap / budget.inner) {
        std::ostringstream os;
        os << "dpp: nested budget " << budget.outer << " x " << budget.inner << " exceeds the cap " << budget.cap;
        throw ConfigError(os.str());
    }
    if (!(theta > init.s) || theta > scn.horizon * (1.0 + 1e-12)) throw ConfigError("dpp.theta: must lie in (s, T]");
    (void)aligned_steps(theta - init.s, cfg.h, "dpp.theta - s");
    const double theta_g = init.s + static_cast<double>(aligned_steps(theta - init.s, cfg.h, "dpp.theta - s")) * cfg.h;

    SolverConfig lhs_cfg = cfg;
    lhs_cfg.n_paths = budget.outer;
    const ValueEstimate lhs = estimate_value(scn, family, init, lhs_cfg);

    const std::size_t nf = family.size();
    const bool at_horizon = std::abs(theta_g - scn.horizon) <= 1e-9 * cfg.h;
    const std::size_t inner = at_horizon ? 1 : budget.inner;
    std::vector<std::vector<double>> samples(nf, std::vector<double>(budget.outer));
    RunnerPool pool(scn, cfg, cfg.workers);
    parallel_for(budget.outer, cfg.workers, [&](std::size_t w, std::size_t i) {
        PathRunner& runner = pool.get(w);
        const NoiseStream stream(cfg.seed, i);
        std::vector<double> cont(nf);
        for (std::size_t p = 0; p < nf; ++p) {
            InitialData next;
            next.s = theta_g;
            const double running = path_cost(runner, family[p], init, stream, theta_g, &next.xi);
            std::fill(cont.begin(), cont.end(), 0.0);
            // Inner batch, sequential on this outer path's substreams.
            for (std::size_t q = 0; q < nf; ++q) {
                double s = 0.0;
                for (std::size_t j = 0; j < inner; ++j) {
                    s += path_cost(runner, family[q], next, stream.substream(static_cast<std::uint32_t>(j + 1)),
                                   scn.horizon);
                }
                cont[q] = s / static_cast<double>(inner);
            }
            samples[p][i] = running + *std::min_element(cont.begin(), cont.end());
        }
    });

    DppResult r;
    std::vector<double> means;
    for (const auto& s : samples) {
        r.rhs_per_policy.push_back(estimate(s));
        means.push_back(r.rhs_per_policy.back().mean);
    }
    r.rhs_argmin = argmin(means);
    r.lhs = lhs.v_hat;
    r.se_lhs = lhs.se;
    r.rhs = r.rhs_per_policy[r.rhs_argmin].mean;
    r.se_rhs = r.rhs_per_policy[r.rhs_argmin].se;
    r.residual = r.lhs - r.rhs;
    r.se = std::sqrt(r.se_lhs * r.se_lhs + r.se_rhs * r.se_rhs);
    r.suboptimality_allowance = std::max(0.0, r.residual - 3.0 * r.se);
    r.within_noise = std::abs(r.residual) <= 3.0 * r.se + 1e-12;
    if (!std::isfinite(r.residual)) throw NumericError("dpp: non-finite residual");
    return r;
}

RegularityReport value_regularity_probe(const Scenario& scn, const PolicyFamily& family,
                                        const std::vector<std::pair<InitialData, InitialData>>& pairs,
                                        const SolverConfig& cfg) {
    RegularityReport rep;
    const double p = static_cast<double>(scn.p);
    for (const auto& [a, b] : pairs) {
        RegularityRow row;
        row.v_a = estimate_value(scn, family, a, cfg).v_hat;
        row.v_b = estimate_value(scn, family, b, cfg).v_hat;
        row.dv = std::abs(row.v_a - row.v_b);
        row.gamma1_sqrt = std::sqrt(gamma1(a.s, a.xi, b.s, b.xi, scn.delta));
        row.ds_sqrt = std::sqrt(std::abs(a.s - b.s));
        const double na = a.xi.sup_norm(), nb = b.xi.sup_norm();
        row.shape = (1.0 + std::pow(na, p) + std::pow(nb, p)) * (row.gamma1_sqrt + row.ds_sqrt * (1.0 + na + nb));
        row.growth_a = std::abs(row.v_a) / (1.0 + std::pow(na, p));
        if (!rep.rows.empty() && row.dv > rep.rows.back().dv) rep.refinement_monotone = false;
        rep.rows.push_back(row);
    }
    return rep;
}

GapReport penalization_gap(const Scenario& scn, const PolicyFamily& family, const InitialData& init,
                           const std::vector<double>& eps_list, const SolverConfig& cfg) {
    if (eps_list.empty()) throw ConfigError("eps_list: need at least one value");
    for (std::size_t j = 0; j < eps_list.size(); ++j) {
        if (!(eps_list[j] >= 2.0 * cfg.h * (1.0 - 1e-12))) {
            std::ostringstream os;
            os << "eps_list[" << j << "] = " << eps_list[j] << " is below 2h = " << 2.0 * cfg.h
               << " (stability guard of the explicit penalized scheme)";
            throw ConfigError(os.str());
        }
    }
    SolverConfig ref_cfg = cfg;
    ref_cfg.scheme = Scheme::prox_implicit;
    const ValueEstimate ref = estimate_value(scn, family, init, ref_cfg);
    GapReport rep;
    rep.v_ref = ref.v_hat;
    rep.se_ref = ref.se;
    for (double e : eps_list) {
        SolverConfig c = cfg;
        c.scheme = Scheme::penalized_explicit;
        c.eps = e;
        const ValueEstimate v = estimate_value(scn, family, init, c);
        GapRow row;
        row.eps = e;
        row.v_eps = v.v_hat;
        row.se_eps = v.se;
        row.gap = std::abs(v.v_hat - ref.v_hat);
        row.se = std::sqrt(v.se * v.se + ref.se * ref.se);
        if (!rep.rows.empty()) {
            const auto& prev = rep.rows.back();
            if (row.gap > prev.gap + 3.0 * std::sqrt(row.se * row.se + prev.se * prev.se)) rep.monotone = false;
        }
        rep.rows.push_back(row);
    }
    return rep;
}

}  // namespace sdvi
