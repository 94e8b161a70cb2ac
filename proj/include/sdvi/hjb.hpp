// SPDX-License-Identifier: MIT
//
// Explicit monotone finite differences for the reduced HJB equation in
// (s, x, y), with the constraint term replaced by its Yosida penalization:
//
//   V_s + inf_u [ <b_u - grad phi_eps(x), D_x V> + 1/2 Tr(sigma sigma^T D_xx V) + f_u ]
//       + <x - e^{-lambda delta} zeta - lambda y, D_y V> = 0,     V(T) = h.
//
// Drift terms are upwinded per node and control; box faces use linear
// extrapolation ghosts.
#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sdvi/control.hpp"
#include "sdvi/scenario.hpp"

namespace sdvi {

/// Stand-in for the delayed state in the y-transport term.
enum class ZClosure { zero, identity_in_x };

struct ReducedScenario {
    Scenario scn;
    ZClosure closure = ZClosure::zero;
    bool y_transport = true;

    /// Parent validation plus z-independence of b and sigma and d <= 2.
    void validate() const;
    [[nodiscard]] Vec zeta(const Vec& x) const;
};

/// Regular grid over x (d axes) then y (d axes). x axes need >= 3 nodes; a y
/// axis may have a single node, in which case V is taken constant along it.
struct GridSpec {
    int time_steps = 100;
    Vec x_lo, x_hi, y_lo, y_hi;
    std::vector<int> x_nodes, y_nodes;

    void validate(int d) const;
    [[nodiscard]] int axes() const { return static_cast<int>(x_nodes.size() + y_nodes.size()); }
    [[nodiscard]] int nodes_on(int axis) const;
    [[nodiscard]] double lo(int axis) const;
    [[nodiscard]] double hi(int axis) const;
    [[nodiscard]] double spacing(int axis) const;  // 0 for single-node axes
    [[nodiscard]] std::size_t node_count() const;
    [[nodiscard]] double max_dx() const;  // largest x spacing
};

struct ValueField {
    GridSpec grid;
    double s0 = 0.0, horizon = 1.0, dt = 0.0, eps = 0.0;
    double cfl_number = 0.0;          // max rate * dt at load
    double min_stencil_weight = 1.0;  // over interior nodes and layers
    std::vector<double> v;            // layer-major, nodes row-major with the last axis fastest

    [[nodiscard]] std::size_t nodes() const { return grid.node_count(); }
    [[nodiscard]] int layers() const { return grid.time_steps + 1; }
    [[nodiscard]] double layer_time(int k) const { return s0 + static_cast<double>(k) * dt; }
    [[nodiscard]] double at(int layer, std::size_t node) const { return v[static_cast<std::size_t>(layer) * nodes() + node]; }
    [[nodiscard]] std::vector<int> unravel(std::size_t node) const;
    [[nodiscard]] std::size_t ravel(const std::vector<int>& idx) const;
    [[nodiscard]] Vec node_x(std::size_t node) const;
    [[nodiscard]] Vec node_y(std::size_t node) const;
    /// Multilinear in space, linear in time; throws DomainError outside the grid.
    [[nodiscard]] double value(double s, const Vec& x, const Vec& y) const;
};

/// <b, q> + 1/2 Tr(sigma sigma^T X) - f at (s, x, y, z, u).
[[nodiscard]] double hamiltonian(const Scenario& scn, double s, const Vec& x, const Vec& y, const Vec& z, const Vec& u,
                                 const Vec& q, const Mat& xmat);

/// eps defaults to 2 * max x spacing.
[[nodiscard]] ValueField solve_hjb(const ReducedScenario& red, const GridSpec& grid, std::optional<double> eps = {},
                                   int workers = 1);

/// Per-node minimizing control index of the discrete update at `layer`.
[[nodiscard]] std::vector<std::size_t> greedy_controls(const ReducedScenario& red, const ValueField& field, int layer);
/// Time-independent feedback table from greedy_controls.
[[nodiscard]] Policy greedy_policy(const ReducedScenario& red, const ValueField& field, int layer);

struct ProbePoint {
    double s = 0.0;
    Vec x, y;
};

struct ViscosityRecord {
    ProbePoint point;
    std::string side;  // "sub" or "super"
    double lhs = 0.0;
    double rhs = 0.0;  // may be +-inf
    double slack = 0.0;
    bool vacuous = false;
    bool pass = false;
    bool skipped = false;
    std::string reason;
};

struct ViscosityReport {
    std::vector<ViscosityRecord> records;
    double tolerance = 0.0;
};

/// Fits a local quadratic in space, linear in time, to the field around each
/// point and evaluates both viscosity inequalities with the directional
/// subdifferentials of the parent constraint. A finite side passes when
/// slack >= -tol.
[[nodiscard]] ViscosityReport viscosity_probe(const ReducedScenario& red, const ValueField& field,
                                              const std::vector<ProbePoint>& points, int radius, double tol);

struct CompareRow {
    ProbePoint point;
    bool comparable = false;
    std::string reason;
    double v_grid = 0.0, v_mc = 0.0, se = 0.0;
    double grid_error = 0.0, mc_error = 0.0, family_bias = 0.0;
    double budget = 0.0, discrepancy = 0.0;
    bool pass = false;
};

/// Grid value against the Monte Carlo family value at constant-history points.
/// Grid error is dx + dt, plus |V - V_coarse| when a coarser field is given.
[[nodiscard]] std::vector<CompareRow> compare_mc(const ValueField& field, const ReducedScenario& red,
                                                 const PolicyFamily& family, const std::vector<ProbePoint>& points,
                                                 const SolverConfig& cfg, const ValueField* coarse = nullptr);

/// Header s,x,y,v (x_0.., y_0.. when d > 1), one row per layer and node.
void write_field_csv(const ValueField& field, std::ostream& os);

}  // namespace sdvi
