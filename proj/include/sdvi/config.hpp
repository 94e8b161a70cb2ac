// SPDX-License-Identifier: MIT
//
// Experiment files are JSON. Every object is read strictly: unknown keys are
// rejected with their dotted path, and all cross-field constraints are
// checked before any computation starts.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sdvi/control.hpp"
#include "sdvi/hjb.hpp"
#include "sdvi/mc_lab.hpp"
#include "sdvi/policy.hpp"
#include "sdvi/scenario.hpp"
#include "sdvi/sdde.hpp"

namespace sdvi {

using Json = nlohmann::json;

inline const std::vector<std::string>& study_kinds() {
    static const std::vector<std::string> kinds = {"simulate", "moments", "dependence", "cauchy-rate",
                                                   "cost",     "value",   "dpp",        "regularity",
                                                   "gap",      "hjb",     "viscosity-probe", "compare"};
    return kinds;
}

/// Parsed study block; only the fields of the selected kind are meaningful.
struct StudySpec {
    std::string kind;
    InitialData init, init2;
    Policy policy;
    PolicyFamily family;
    std::vector<double> eps_list;
    std::vector<double> scaling;  // moments: companion factors for the bound check
    double theta = 0.0;
    NestedBudget budget;
    std::vector<std::pair<InitialData, InitialData>> pairs;
    GridSpec grid;
    std::optional<double> hjb_eps;
    ZClosure closure = ZClosure::zero;
    bool y_transport = true;
    std::vector<ProbePoint> points;
    int radius = 2;
    double tol = 0.0;
    std::vector<Vec> audit_points;
    std::size_t path_index = 0;
};

struct ExperimentConfig {
    std::string id;
    Scenario scenario;
    SolverConfig solver;
    StudySpec study;
    std::string output_dir;  // empty when the file does not set one
    Json resolved;           // the full config after overrides, for the manifest
};

/// Applies "a.b.c=value" overrides; values parse as JSON when possible,
/// otherwise as strings.
[[nodiscard]] Json apply_overrides(Json doc, const std::vector<std::string>& overrides);

/// Parses and validates the whole experiment (scenario, solver, study block).
[[nodiscard]] ExperimentConfig load_config(const Json& doc);

// Building blocks shared with the runner; `path` prefixes error messages.
[[nodiscard]] Scenario parse_scenario(const Json& j, const std::string& path);
[[nodiscard]] SolverConfig parse_solver(const Json& j, const std::string& path);
[[nodiscard]] ConvexConstraint parse_constraint(const Json& j, int d, const std::string& path);
[[nodiscard]] Policy parse_policy(const Json& j, const std::string& path);
[[nodiscard]] PolicyFamily parse_family(const Json& j, const Scenario& scn, const std::string& path);
[[nodiscard]] InitialData parse_init(const Json& j, const Scenario& scn, double h, const std::string& path);
[[nodiscard]] GridSpec parse_grid(const Json& j, int d, const std::string& path);
[[nodiscard]] ProbePoint parse_point(const Json& j, int d, const std::string& path);

}  // namespace sdvi
