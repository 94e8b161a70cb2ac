// SPDX-License-Identifier: MIT
//
//   sdvi run <config.json> [--override key=value]... [--workers N] [--out DIR]
//
// Exit status: 0 ok, 2 invalid input/config, 3 numeric failure.
#include <iostream>

#include "CLI11.hpp"
#include "sdvi/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Stochastic delay variational inequalities: simulation, Monte Carlo studies and HJB solves"};
    app.require_subcommand(1);

    std::string config;
    sdvi::RunOptions opts;
    int workers = 0;
    auto* run = app.add_subcommand("run", "run the study described by a JSON experiment file");
    run->add_option("config", config, "experiment file")->required();
    run->add_option("--override,-o", opts.overrides, "dotted key=value, e.g. solver.h=0.01");
    run->add_option("--workers,-j", workers, "worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
    run->add_option("--out", opts.out_dir, std::string("output root (default: $") + sdvi::kOutDirEnv + ", then the config, then ./out)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    if (workers > 0) opts.workers = workers;
    return sdvi::run(config, opts, std::cout, std::cerr);
}
