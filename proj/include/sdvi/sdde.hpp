// SPDX-License-Identifier: MIT
//
// Time-discretized simulation of the constrained delay SDE
//
//   dX + d(phi)(X) dt  contains  b(t,X,Y,Z,u) dt + sigma(t,X,Y,Z,u) dW,
//   Y(t) = int_{-delta}^0 e^{lambda r} X(t+r) dr,   Z(t) = X(t - delta),
//
// on a fixed step grid, with three ways of handling the multivalued term.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "sdvi/convex.hpp"
#include "sdvi/noise.hpp"
#include "sdvi/policy.hpp"
#include "sdvi/scenario.hpp"
#include "sdvi/types.hpp"

namespace sdvi {

/// Number of steps of size h covering `span`; throws ConfigError unless span
/// is an integer multiple of h.
[[nodiscard]] long aligned_steps(double span, double h, const char* what);

/// Initial path xi on [-delta, 0], sampled at -delta, -delta + h, ..., 0.
struct PathSegment {
    double h = 0.0;
    std::vector<Vec> values;

    static PathSegment constant(const Vec& c, double delta, double h);
    [[nodiscard]] const Vec& at_zero() const { return values.back(); }
    /// max over the grid of |xi|
    [[nodiscard]] double sup_norm() const;
    /// Throws ConfigError unless the length is delta / h + 1 and every value
    /// lies in closure(Dom phi).
    void validate(double delta, const ConvexConstraint& phi) const;
};

/// Ring buffer over the most recent delta / h + 1 grid states.
class DelayBuffer {
public:
    DelayBuffer(double delta, double h);

    void push(double t, const Vec& x);
    [[nodiscard]] bool full() const { return count_ == slots_.size(); }
    /// State at time t - lag * h, lag in [0, lag_steps()].
    [[nodiscard]] const Vec& lagged(std::size_t lag) const;
    [[nodiscard]] double time() const;
    [[nodiscard]] double h() const { return h_; }
    [[nodiscard]] std::size_t lag_steps() const { return slots_.size() - 1; }

private:
    double h_;
    std::vector<Vec> slots_;
    std::vector<double> stamps_;
    std::size_t head_ = 0;  // slot of the most recent state
    std::size_t count_ = 0;
};

/// Trapezoidal quadrature of int_{-delta}^0 e^{lambda r} X(t + r) dr.
[[nodiscard]] Vec memory_y(const DelayBuffer& buf, double lambda, double delta);
/// X(t - delta), read from the grid.
[[nodiscard]] Vec memory_z(const DelayBuffer& buf, double delta);

enum class Scheme { penalized_explicit, prox_implicit, projection };

struct SolverConfig {
    Scheme scheme = Scheme::prox_implicit;
    double eps = 0.0;  // PenalizedExplicit only
    double h = 0.01;
    std::uint64_t seed = 1;
    std::size_t n_paths = 1;
    int workers = 1;  // does not affect results

    /// Step alignment, stability guard and scheme/constraint compatibility.
    void validate(const Scenario& scn) const;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Vec> x, k, y, z;
    PathSegment history;  // X on [s0 - delta, s0]
    double phi_integral = 0.0;
    double k_variation = 0.0;
    Scheme scheme = Scheme::prox_implicit;
    double eps = 0.0;
    std::uint64_t noise_checksum = 0;

    [[nodiscard]] std::size_t size() const { return times.size(); }
    /// Delay window X(t_i + r), r in [-delta, 0], as a path segment.
    [[nodiscard]] PathSegment window(std::size_t i) const;
};

struct StepResult {
    Vec x_next;
    Vec dk;
};

/// One grid step from time t with Brownian increment dW over [t, t + h].
[[nodiscard]] StepResult step(const Vec& x, const DelayBuffer& buf, const Scenario& scn, const Vec& u,
                              const SolverConfig& cfg, double t, const Vec& dw);

/// Simulates one path from (scn.s0, xi) to scn.horizon under `policy`.
[[nodiscard]] Trajectory simulate_path(const Scenario& scn, const Policy& policy, const PathSegment& xi,
                                       const SolverConfig& cfg, const NoiseStream& stream);

struct SolutionAuditEntry {
    Vec u;
    bool skipped = false;  // u outside Dom phi or phi(u) infinite
    double worst_slack = 0.0;
    bool pass = true;
};

struct SolutionAuditReport {
    std::vector<SolutionAuditEntry> inequality;
    double max_domain_distance = 0.0;
    double allowed_domain_distance = 0.0;
    bool domain_pass = true;

    [[nodiscard]] bool pass() const;
};

/// Discrete check of the variational inequality over every grid interval,
/// plus domain membership. Pure report: never throws for failed checks.
[[nodiscard]] SolutionAuditReport solution_audit(const Trajectory& traj, const ConvexConstraint& phi,
                                                 const std::vector<Vec>& test_points, double tol);

/// CSV header t,x_0..,k_0..,y_0..,z_0.. with 17 significant digits.
void write_trajectory_csv(const Trajectory& traj, std::ostream& os);

}  // namespace sdvi
