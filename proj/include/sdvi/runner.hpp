// SPDX-License-Identifier: MIT
//
// Batch front end: one config file, one study, three artifacts under
// <out>/<id>/ (the study CSV, its JSON summary and manifest.json).
#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sdvi/config.hpp"

namespace sdvi {

inline constexpr const char* kOutDirEnv = "SDVI_OUT_DIR";

struct RunOptions {
    std::vector<std::string> overrides;
    std::optional<int> workers;  // replaces solver.workers; never changes results
    std::string out_dir;         // --out; wins over the environment and the config
};

struct StudyOutput {
    std::string csv;
    Json summary;
    std::string line;  // one-line stdout summary
};

/// Runs the parsed study in memory.
[[nodiscard]] StudyOutput run_study(const ExperimentConfig& cfg);

/// Full pipeline; returns the exit status (0 ok, 2 validation, 3 numeric).
/// Diagnostics go to `err`, the summary line to `out`.
int run(const std::string& config_path, const RunOptions& opts, std::ostream& out, std::ostream& err);

/// Hex SHA-256 of a byte string.
[[nodiscard]] std::string sha256_hex(const std::string& bytes);

}  // namespace sdvi
