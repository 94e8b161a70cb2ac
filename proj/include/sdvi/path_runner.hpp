// SPDX-License-Identifier: MIT
//
// Reusable single-path driver. Owns the delay buffer and all per-step
// workspace so Monte Carlo loops do not allocate per step; observers receive
// grid points and steps and keep only what their study needs.
#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>
#include <vector>

#include "sdvi/error.hpp"
#include "sdvi/sdde.hpp"

namespace sdvi {

/// Data handed to an observer after the step i -> i + 1; x, y, z are the
/// left-point state the step started from.
struct StepInfo {
    std::size_t i;
    double t;
    std::size_t u;
    const Vec& x;
    const Vec& y;
    const Vec& z;
    const Vec& dk;
    const Vec& dw;
    double phi_hat;
};

/// Trapezoid weights h * w_j for lag j = 0..lag_steps of int e^{lambda r} X(t+r) dr.
[[nodiscard]] std::vector<double> memory_weights(double lambda, std::size_t lag_steps, double h);

class PathRunner {
public:
    PathRunner(const Scenario& scn, const SolverConfig& cfg);

    /// Runs from t_start with initial window xi to t_end. The observer gets
    ///   point(i, t, x, k, y, z)           at every grid time i = 0..N
    ///   step(StepInfo)                    after every step i -> i + 1
    /// where phi_hat is phi at the domain-projected left state (only computed
    /// when Observer::kNeedsPhi is true, zero otherwise).
    template <class Observer>
    void run(const Policy& policy, const PathSegment& xi, const NoiseStream& stream, double t_start, double t_end,
             Observer& obs);

    template <class Observer>
    void run(const Policy& policy, const PathSegment& xi, const NoiseStream& stream, Observer& obs) {
        run(policy, xi, stream, scn_.s0, scn_.horizon, obs);
    }

    /// Checksum of the Brownian increments consumed by the last run.
    [[nodiscard]] std::uint64_t noise_checksum() const { return checksum_; }
    [[nodiscard]] const Scenario& scenario() const { return scn_; }
    [[nodiscard]] const SolverConfig& config() const { return cfg_; }

    /// Scheme update from (t, x, y, z, u) with Brownian increment dw.
    void advance(double t, const Vec& x, const Vec& y, const Vec& z, const Vec& u, const Vec& dw, Vec& x_next,
                 Vec& dk);

    /// phi evaluated at the domain-projected state used for integral terms.
    [[nodiscard]] double phi_hat(const Vec& x) const;

private:
    void load_window(const PathSegment& xi, double t_start);
    void update_memory();

    const Scenario& scn_;
    SolverConfig cfg_;
    std::size_t lag_;
    std::vector<double> weights_;
    double sqrt_h_;
    DelayBuffer buf_;
    Vec b_, r_, dw_, x_, xn_, y_, z_, k_, dk_;
    Mat sig_;
    std::vector<double> normals_;
    std::uint64_t checksum_ = 0;
};

/// One lazily built runner per worker, for use inside parallel_for bodies.
class RunnerPool {
public:
    RunnerPool(const Scenario& scn, const SolverConfig& cfg, int workers)
        : scn_(scn), cfg_(cfg), runners_(static_cast<std::size_t>(std::max(workers, 1))) {
        cfg_.validate(scn);
    }
    PathRunner& get(std::size_t worker) {
        auto& r = runners_.at(worker);
        if (!r) r = std::make_unique<PathRunner>(scn_, cfg_);
        return *r;
    }

private:
    const Scenario& scn_;
    SolverConfig cfg_;
    std::vector<std::unique_ptr<PathRunner>> runners_;
};

template <class Observer>
void PathRunner::run(const Policy& policy, const PathSegment& xi, const NoiseStream& stream, double t_start,
                     double t_end, Observer& obs) {
    const double h = cfg_.h;
    const long steps = aligned_steps(t_end - t_start, h, "run horizon");
    load_window(xi, t_start);
    x_ = xi.at_zero();
    k_.setZero(scn_.d);
    update_memory();

    const long g0 = std::lround(t_start / h);
    Checksum cs;
    for (long i = 0; i < steps; ++i) {
        const double t = t_start + static_cast<double>(i) * h;
        obs.point(static_cast<std::size_t>(i), t, x_, k_, y_, z_);
        const std::size_t ui = policy.control_index(t, x_, y_);
        stream.standard_normals(static_cast<std::uint64_t>(g0 + i), normals_);
        for (int j = 0; j < scn_.n; ++j) dw_(j) = sqrt_h_ * normals_[static_cast<std::size_t>(j)];
        cs.add(std::span<const double>(dw_.data(), static_cast<std::size_t>(dw_.size())));
        double ph = 0.0;
        if constexpr (Observer::kNeedsPhi) ph = phi_hat(x_);
        advance(t, x_, y_, z_, scn_.controls[ui], dw_, xn_, dk_);
        if (!xn_.allFinite()) {
            std::ostringstream os;
            os << "simulation produced a non-finite state at t = " << t + h;
            throw NumericError(os.str());
        }
        k_ += dk_;
        obs.step(StepInfo{static_cast<std::size_t>(i), t, ui, x_, y_, z_, dk_, dw_, ph});
        x_.swap(xn_);
        buf_.push(t + h, x_);
        update_memory();
    }
    obs.point(static_cast<std::size_t>(steps), t_start + static_cast<double>(steps) * h, x_, k_, y_, z_);
    checksum_ = cs.value();
}

}  // namespace sdvi
