// SPDX-License-Identifier: MIT
#include "sdvi/sdde.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "sdvi/error.hpp"
#include "sdvi/path_runner.hpp"

namespace sdvi {

long aligned_steps(double span, double h, const char* what) {
    if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("solver.h: step must be a positive finite real");
    if (!(span >= 0.0)) {
        std::ostringstream os;
        os << what << ": negative span " << span;
        throw ConfigError(os.str());
    }
    const double ratio = span / h;
    const double n = std::round(ratio);
    if (std::abs(ratio - n) > 1e-9 * std::max(1.0, ratio)) {
        std::ostringstream os;
        os << what << " = " << span << " is not an integer multiple of the step h = " << h
           << " (step-alignment invariant)";
        throw ConfigError(os.str());
    }
    return static_cast<long>(n);
}

// ---------------------------------------------------------------------------
// PathSegment

PathSegment PathSegment::constant(const Vec& c, double delta, double h) {
    const long lag = aligned_steps(delta, h, "scenario.delta");
    PathSegment seg;
    seg.h = h;
    seg.values.assign(static_cast<std::size_t>(lag + 1), c);
    return seg;
}

double PathSegment::sup_norm() const {
    double m = 0.0;
    for (const auto& v : values) m = std::max(m, v.norm());
    return m;
}

void PathSegment::validate(double delta, const ConvexConstraint& phi) const {
    const long lag = aligned_steps(delta, h, "scenario.delta");
    if (values.size() != static_cast<std::size_t>(lag + 1)) {
        std::ostringstream os;
        os << "initial path: expected " << lag + 1 << " samples (delta / h + 1), got " << values.size();
        throw ConfigError(os.str());
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i].size() != phi.dim() || !values[i].allFinite()) {
            throw ConfigError("initial path: sample has wrong dimension or non-finite entries");
        }
        if (!phi.in_domain(values[i])) {
            std::ostringstream os;
            os << "initial path: sample " << i << " lies outside closure(Dom phi)";
            throw ConfigError(os.str());
        }
    }
}

// ---------------------------------------------------------------------------
// DelayBuffer

DelayBuffer::DelayBuffer(double delta, double h)
    : h_(h),
      slots_(static_cast<std::size_t>(aligned_steps(delta, h, "scenario.delta") + 1)),
      stamps_(slots_.size(), 0.0) {}

void DelayBuffer::push(double t, const Vec& x) {
    head_ = count_ == 0 ? 0 : (head_ + 1) % slots_.size();
    slots_[head_] = x;
    stamps_[head_] = t;
    count_ = std::min(count_ + 1, slots_.size());
}

const Vec& DelayBuffer::lagged(std::size_t lag) const {
    if (lag >= count_) throw StateError("delay buffer: requested lag is not covered (buffer under-filled)");
    return slots_[(head_ + slots_.size() - lag) % slots_.size()];
}

double DelayBuffer::time() const {
    if (count_ == 0) throw StateError("delay buffer: empty");
    return stamps_[head_];
}

std::vector<double> memory_weights(double lambda, std::size_t lag_steps, double h) {
    std::vector<double> w(lag_steps + 1);
    for (std::size_t j = 0; j <= lag_steps; ++j) {
        const double end = (j == 0 || j == lag_steps) ? 0.5 : 1.0;
        w[j] = h * end * std::exp(-lambda * static_cast<double>(j) * h);
    }
    return w;
}

namespace {

void weighted_memory(const DelayBuffer& buf, const std::vector<double>& w, Vec& out) {
    out.setZero(buf.lagged(0).size());
    if (buf.lag_steps() == 0) return;
    for (std::size_t j = 0; j < w.size(); ++j) out.noalias() += w[j] * buf.lagged(j);
}

}  // namespace

Vec memory_y(const DelayBuffer& buf, double lambda, double delta) {
    if (!buf.full()) throw StateError("memory_y: delay buffer does not cover [t - delta, t]");
    const std::size_t lag = static_cast<std::size_t>(aligned_steps(delta, buf.h(), "delta"));
    if (lag != buf.lag_steps()) throw StateError("memory_y: delay does not match the buffer window");
    Vec y;
    weighted_memory(buf, memory_weights(lambda, lag, buf.h()), y);
    return y;
}

Vec memory_z(const DelayBuffer& buf, double delta) {
    if (!buf.full()) throw StateError("memory_z: delay buffer does not cover [t - delta, t]");
    const std::size_t lag = static_cast<std::size_t>(aligned_steps(delta, buf.h(), "delta"));
    if (lag != buf.lag_steps()) throw StateError("memory_z: delay does not match the buffer window");
    return buf.lagged(lag);
}

// ---------------------------------------------------------------------------
// SolverConfig

void SolverConfig::validate(const Scenario& scn) const {
    if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("solver.h: step must be a positive finite real");
    (void)aligned_steps(scn.delta, h, "scenario.delta");
    (void)aligned_steps(scn.horizon - scn.s0, h, "scenario.T - scenario.s0");
    if (n_paths < 1) throw ConfigError("solver.n_paths: must be >= 1");
    if (workers < 1) throw ConfigError("workers: must be >= 1");
    if (scheme == Scheme::penalized_explicit) {
        if (!(eps > 0.0) || !std::isfinite(eps)) throw ConfigError("solver.eps: penalized scheme needs eps > 0");
        if (h > 0.5 * eps * (1.0 + 1e-12)) {
            std::ostringstream os;
            os << "solver.h = " << h << " exceeds eps / 2 = " << 0.5 * eps
               << " (stability guard of the explicit penalized scheme)";
            throw ConfigError(os.str());
        }
    }
    if (scheme == Scheme::projection && !scn.constraint.is_indicator()) {
        throw ConfigError("solver.scheme: projection requires an indicator-kind constraint");
    }
}

// ---------------------------------------------------------------------------
// PathRunner

PathRunner::PathRunner(const Scenario& scn, const SolverConfig& cfg)
    : scn_(scn),
      cfg_(cfg),
      lag_(static_cast<std::size_t>(aligned_steps(scn.delta, cfg.h, "scenario.delta"))),
      weights_(memory_weights(scn.lambda, lag_, cfg.h)),
      sqrt_h_(std::sqrt(cfg.h)),
      buf_(scn.delta, cfg.h),
      dw_(Vec::Zero(scn.n)),
      normals_(static_cast<std::size_t>(scn.n)) {
    cfg_.validate(scn);
}

void PathRunner::load_window(const PathSegment& xi, double t_start) {
    if (std::abs(xi.h - cfg_.h) > 1e-12 * cfg_.h) throw ConfigError("initial path: sampling step differs from solver.h");
    if (xi.values.size() != lag_ + 1) {
        std::ostringstream os;
        os << "initial path: expected " << lag_ + 1 << " samples (delta / h + 1), got " << xi.values.size();
        throw ConfigError(os.str());
    }
    buf_ = DelayBuffer(scn_.delta, cfg_.h);
    for (std::size_t j = 0; j <= lag_; ++j) {
        buf_.push(t_start - static_cast<double>(lag_ - j) * cfg_.h, xi.values[j]);
    }
}

void PathRunner::update_memory() {
    weighted_memory(buf_, weights_, y_);
    z_ = buf_.lagged(lag_);
}

void PathRunner::advance(double t, const Vec& x, const Vec& y, const Vec& z, const Vec& u, const Vec& dw,
                         Vec& x_next, Vec& dk) {
    const double h = cfg_.h;
    scn_.drift.eval(t, x, y, z, u, b_);
    scn_.diffusion.eval(t, x, y, z, u, sig_);
    r_ = x;
    r_.noalias() += h * b_;
    r_.noalias() += sig_ * dw;
    if (!r_.allFinite()) {
        std::ostringstream os;
        os << "simulation produced a non-finite state at t = " << t + h;
        throw NumericError(os.str());
    }
    switch (cfg_.scheme) {
        case Scheme::penalized_explicit: {
            const Vec g = yosida_grad(scn_.constraint, cfg_.eps, x);
            x_next = r_ - h * g;
            dk = h * g;
            break;
        }
        case Scheme::prox_implicit:
            x_next = prox(scn_.constraint, h, r_);
            dk = r_ - x_next;
            break;
        case Scheme::projection:
            if (!scn_.constraint.is_indicator()) {
                throw ConfigError("solver.scheme: projection requires an indicator-kind constraint");
            }
            x_next = scn_.constraint.project(r_);
            dk = r_ - x_next;
            break;
    }
}

double PathRunner::phi_hat(const Vec& x) const {
    if (cfg_.scheme == Scheme::penalized_explicit) {
        return scn_.constraint.evaluate(prox(scn_.constraint, cfg_.eps, x)).value();
    }
    return scn_.constraint.evaluate(x).value();
}

// ---------------------------------------------------------------------------
// step / simulate_path

StepResult step(const Vec& x, const DelayBuffer& buf, const Scenario& scn, const Vec& u, const SolverConfig& cfg,
                double t, const Vec& dw) {
    if (cfg.scheme == Scheme::projection && !scn.constraint.is_indicator()) {
        throw ConfigError("solver.scheme: projection requires an indicator-kind constraint");
    }
    PathRunner runner(scn, cfg);
    const Vec y = memory_y(buf, scn.lambda, scn.delta);
    const Vec z = memory_z(buf, scn.delta);
    StepResult out;
    runner.advance(t, x, y, z, u, dw, out.x_next, out.dk);
    return out;
}

namespace {

struct RecordingObserver {
    static constexpr bool kNeedsPhi = true;
    Trajectory& traj;

    void point(std::size_t, double t, const Vec& x, const Vec& k, const Vec& y, const Vec& z) {
        traj.times.push_back(t);
        traj.x.push_back(x);
        traj.k.push_back(k);
        traj.y.push_back(y);
        traj.z.push_back(z);
    }
    void step(const StepInfo& s) {
        traj.phi_integral += s.phi_hat;
        traj.k_variation += s.dk.norm();
    }
};

}  // namespace

Trajectory simulate_path(const Scenario& scn, const Policy& policy, const PathSegment& xi, const SolverConfig& cfg,
                         const NoiseStream& stream) {
    xi.validate(scn.delta, scn.constraint);
    PathRunner runner(scn, cfg);
    Trajectory traj;
    const auto n = static_cast<std::size_t>(aligned_steps(scn.horizon - scn.s0, cfg.h, "scenario.T - scenario.s0"));
    traj.times.reserve(n + 1);
    traj.x.reserve(n + 1);
    traj.k.reserve(n + 1);
    traj.y.reserve(n + 1);
    traj.z.reserve(n + 1);
    traj.history = xi;
    traj.scheme = cfg.scheme;
    traj.eps = cfg.eps;
    RecordingObserver obs{traj};
    runner.run(policy, xi, stream, obs);
    traj.phi_integral *= cfg.h;
    traj.noise_checksum = runner.noise_checksum();
    return traj;
}

PathSegment Trajectory::window(std::size_t i) const {
    const std::size_t lag = history.values.size() - 1;
    PathSegment seg;
    seg.h = history.h;
    seg.values.reserve(lag + 1);
    // Concatenation history.values ++ x[1..] places grid time i at index lag + i.
    for (std::size_t c = i; c <= lag + i; ++c) {
        seg.values.push_back(c <= lag ? history.values[c] : x[c - lag]);
    }
    return seg;
}

// ---------------------------------------------------------------------------
// solution_audit

bool SolutionAuditReport::pass() const {
    return domain_pass && std::all_of(inequality.begin(), inequality.end(),
                                      [](const SolutionAuditEntry& e) { return e.skipped || e.pass; });
}

SolutionAuditReport solution_audit(const Trajectory& traj, const ConvexConstraint& phi,
                                   const std::vector<Vec>& test_points, double tol) {
    SolutionAuditReport rep;
    const std::size_t n = traj.size();
    if (n < 2) return rep;
    const double h = traj.times[1] - traj.times[0];
    const bool penalized = traj.scheme == Scheme::penalized_explicit;

    // Per-step pairing: the penalized increment is a subgradient at J_eps(X_k),
    // the implicit/projection increments at X_{k+1}.
    std::vector<Vec> dks(n - 1);
    std::vector<const Vec*> anchor(n - 1);
    std::vector<double> phi_hat(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        dks[k] = traj.k[k + 1] - traj.k[k];
        if (penalized) {
            anchor[k] = &traj.x[k];
            phi_hat[k] = phi.evaluate(prox(phi, traj.eps, traj.x[k])).value();
        } else {
            anchor[k] = &traj.x[k + 1];
            phi_hat[k] = phi.evaluate(phi.project(traj.x[k + 1])).value();
        }
    }

    for (const auto& u : test_points) {
        SolutionAuditEntry e;
        e.u = u;
        const ExtendedReal phi_u = phi.evaluate(u);
        if (!phi_u.is_finite()) {
            e.skipped = true;
            rep.inequality.push_back(e);
            continue;
        }
        // Worst interval = maximum-sum run of (a_k - tol).
        double best = -std::numeric_limits<double>::infinity();
        double run = 0.0;
        for (std::size_t k = 0; k + 1 < n; ++k) {
            const double a = (u - *anchor[k]).dot(dks[k]) + h * phi_hat[k] - h * phi_u.value() - tol;
            run = std::max(a, run + a);
            best = std::max(best, run);
        }
        e.worst_slack = -best;
        e.pass = e.worst_slack >= 0.0;
        rep.inequality.push_back(e);
    }

    double max_grad = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        rep.max_domain_distance = std::max(rep.max_domain_distance, phi.distance_to_domain(traj.x[k]));
        if (penalized) max_grad = std::max(max_grad, yosida_grad(phi, traj.eps, traj.x[k]).norm());
    }
    double feas = 0.0;
    for (const auto& x : traj.x) feas = std::max(feas, ConvexConstraint::feasibility_tol(x));
    rep.allowed_domain_distance = (penalized ? traj.eps * max_grad : 0.0) + feas;
    rep.domain_pass = rep.max_domain_distance <= rep.allowed_domain_distance;
    return rep;
}

// ---------------------------------------------------------------------------

void write_trajectory_csv(const Trajectory& traj, std::ostream& os) {
    const Eigen::Index d = traj.x.empty() ? 0 : traj.x.front().size();
    os << "t";
    for (const char* p : {"x", "k", "y", "z"}) {
        for (Eigen::Index i = 0; i < d; ++i) os << ',' << p << '_' << i;
    }
    os << '\n';
    char buf[40];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << buf;
    };
    for (std::size_t r = 0; r < traj.size(); ++r) {
        put(traj.times[r]);
        for (const auto* arr : {&traj.x, &traj.k, &traj.y, &traj.z}) {
            for (Eigen::Index i = 0; i < d; ++i) {
                os << ',';
                put((*arr)[r](i));
            }
        }
        os << '\n';
    }
}

}  // namespace sdvi
