// SPDX-License-Identifier: MIT
//
// Value function over a finite policy family: V_hat = min of the per-policy
// cost estimates, all on common random numbers. The infimum over admissible
// controls is approximated from above by the family.
#pragma once

#include <string>
#include <vector>

#include "sdvi/mc_lab.hpp"
#include "sdvi/policy.hpp"

namespace sdvi {

struct PolicyCost {
    std::string name;
    Estimate j;
};

struct ValueEstimate {
    double v_hat = 0.0;
    double se = 0.0;  // standard error of the argmin policy's estimate
    std::size_t argmin = 0;
    std::vector<PolicyCost> per_policy;
};

[[nodiscard]] ValueEstimate estimate_value(const Scenario& scn, const PolicyFamily& family, const InitialData& init,
                                           const SolverConfig& cfg);

struct NestedBudget {
    std::size_t outer = 2000;
    std::size_t inner = 500;
    std::size_t cap = 10'000'000;  // outer * inner
};

struct DppResult {
    double lhs = 0.0, se_lhs = 0.0;
    double rhs = 0.0, se_rhs = 0.0;
    double residual = 0.0;
    double se = 0.0;                      // combined: sqrt(se_lhs^2 + se_rhs^2)
    double suboptimality_allowance = 0.0; // max(0, residual - 3 se), reported not assumed
    bool within_noise = false;            // |residual| <= 3 se + 1e-12
    std::size_t rhs_argmin = 0;
    std::vector<Estimate> rhs_per_policy;
};

/// lhs = V_hat(s, xi) over budget.outer paths; rhs = min over the family of
/// E[ running cost on [s, theta] + V_hat(theta, window) ], the continuation
/// estimated by budget.inner paths restarted from each outer path's delay
/// window at theta (substream j + 1 of the outer path's stream).
[[nodiscard]] DppResult dpp_residual(const Scenario& scn, const PolicyFamily& family, const InitialData& init,
                                     double theta, const SolverConfig& cfg, const NestedBudget& budget = {});

struct RegularityRow {
    double v_a = 0.0, v_b = 0.0;
    double dv = 0.0;           // |V_hat(a) - V_hat(b)|
    double gamma1_sqrt = 0.0;
    double ds_sqrt = 0.0;      // |s - s'|^{1/2}
    double shape = 0.0;        // (1 + |xi|^p + |xi'|^p)(Gamma1^{1/2} + |s-s'|^{1/2}(1 + |xi| + |xi'|))
    double growth_a = 0.0;     // |V_hat(a)| / (1 + |xi|^p)
};

struct RegularityReport {
    std::vector<RegularityRow> rows;
    bool refinement_monotone = true;  // dv nonincreasing in the given order
};

[[nodiscard]] RegularityReport value_regularity_probe(const Scenario& scn, const PolicyFamily& family,
                                                      const std::vector<std::pair<InitialData, InitialData>>& pairs,
                                                      const SolverConfig& cfg);

struct GapRow {
    double eps = 0.0;
    double v_eps = 0.0, se_eps = 0.0;
    double gap = 0.0, se = 0.0;
};

struct GapReport {
    double v_ref = 0.0, se_ref = 0.0;  // proximal-implicit reference
    std::vector<GapRow> rows;
    bool monotone = true;  // gap nonincreasing down eps_list within 3 combined stderr
};

[[nodiscard]] GapReport penalization_gap(const Scenario& scn, const PolicyFamily& family, const InitialData& init,
                                         const std::vector<double>& eps_list, const SolverConfig& cfg);

}  // namespace sdvi
