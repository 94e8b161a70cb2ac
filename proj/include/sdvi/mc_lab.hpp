// SPDX-License-Identifier: MIT
//
// Monte Carlo studies over simulated paths: moments, a-priori bound ratios,
// continuous dependence on the initial data, the penalization Cauchy rate,
// and cost functionals. Path i always consumes NoiseStream(seed, i), so every
// comparison in this file runs on common random numbers.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdvi/path_runner.hpp"
#include "sdvi/sdde.hpp"
#include "sdvi/stats.hpp"

namespace sdvi {

/// Starting time and initial path segment.
struct InitialData {
    double s = 0.0;
    PathSegment xi;
};

struct MomentReport {
    std::size_t n_paths = 0;
    Estimate sup_x2, sup_x4, sup_y2, int_z2, sup_k2, k_bv, k_bv2, int_phi, int_phi2;
    std::vector<Estimate> terminal_mean;  // per component of X(T)
    Estimate terminal_x2;                 // E |X(T)|^2
    double min_component = 0.0;           // smallest coordinate of X over all paths and grid times
    std::uint64_t noise_checksum = 0;     // combined over paths in index order
};

/// ||xi - xi2||_C^2 + int_{s2-delta}^{s2} |xi2(r - s) - xi2(r - s2)|^2 dr.
/// xi2 is held constant outside [-delta, 0] where the shift leaves the window.
[[nodiscard]] double gamma1(double s, const PathSegment& xi, double s2, const PathSegment& xi2, double delta);
/// 1 + phi(xi(0))^2 + ||xi||_C^4.
[[nodiscard]] double gamma2(const PathSegment& xi, const ConvexConstraint& phi);

[[nodiscard]] MomentReport estimate_moments(const Scenario& scn, const Policy& policy, const InitialData& init,
                                            const SolverConfig& cfg);

struct BoundRatio {
    std::string name;
    double value = 0.0;
    bool finite = true;
};

/// Empirical constants of the two displayed a-priori bounds, plus the plain
/// E sup|X|^2 / (1 + ||xi||^2) ratio.
[[nodiscard]] std::vector<BoundRatio> apriori_bound_check(const MomentReport& report, const PathSegment& xi,
                                                          const ConvexConstraint& phi);

struct ScalingRow {
    double factor = 1.0;
    std::vector<BoundRatio> ratios;
};

struct ScalingStudy {
    std::vector<ScalingRow> rows;
    bool pass = true;  // every ratio finite and within `growth_cap` times its base value
};

/// Companion runs with xi scaled by each factor (first factor is the base).
[[nodiscard]] ScalingStudy apriori_scaling_study(const Scenario& scn, const Policy& policy, const InitialData& init,
                                                 const SolverConfig& cfg, const std::vector<double>& factors,
                                                 double growth_cap = 4.0);

struct DependenceRecord {
    Estimate sup_dx2;  // E sup |X - X'|^2 over [max(s, s'), T]
    Estimate sup_dk2;  // E sup |K - K'|^2
    double gamma1 = 0.0;
    double rhs_shape = 0.0;  // Gamma1 + |s - s'| (1 + ||xi||^2 + ||xi'||^2)
    double empirical_c = 0.0;
    bool crn_verified = true;  // identical increments on the common window
};

[[nodiscard]] DependenceRecord dependence_study(const Scenario& scn, const InitialData& a, const InitialData& b,
                                                const Policy& policy, const SolverConfig& cfg);

struct CauchyRow {
    double eps = 0.0, eps2 = 0.0;
    Estimate sup_dx2;  // E sup |X_eps - X_eps2|^2
    double shape = 0.0;  // (eps^{1/8} + eps2^{1/8}) Gamma2^{1/4}
    double ratio = 0.0;
};

struct CauchyReport {
    std::vector<CauchyRow> rows;          // consecutive pairs down eps_list
    std::vector<double> eps;
    std::vector<Estimate> reference_gap;  // E sup |X_eps - X_prox|^2 per eps
    double gamma2 = 0.0;
    double slope = 0.0;          // LS slope of log lhs vs log(eps^{1/8} + eps2^{1/8})
    bool slope_defined = false;  // false when some lhs is 0
    bool strictly_decreasing = false;
    double ratio_spread = 0.0;   // max ratio / min ratio
    bool crn_verified = true;
};

[[nodiscard]] CauchyReport cauchy_rate_study(const Scenario& scn, const Policy& policy, const InitialData& init,
                                             const std::vector<double>& eps_list, const SolverConfig& cfg);

/// Running + terminal cost of one path from init.s to t_end (terminal cost
/// only when t_end is the horizon). Optionally returns the delay window at t_end.
[[nodiscard]] double path_cost(PathRunner& runner, const Policy& policy, const InitialData& init,
                               const NoiseStream& stream, double t_end, PathSegment* window_out = nullptr);

struct CostEstimate {
    Estimate j;
    std::vector<double> samples;  // per path, index order
};

[[nodiscard]] CostEstimate estimate_cost(const Scenario& scn, const Policy& policy, const InitialData& init,
                                         const SolverConfig& cfg);

}  // namespace sdvi
