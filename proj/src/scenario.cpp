// SPDX-License-Identifier: MIT
#include "sdvi/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sdvi/error.hpp"
#include "sdvi/noise.hpp"

namespace sdvi {

namespace {

double ipow(double base, int e) {
    double r = 1.0;
    for (int i = 0; i < e; ++i) r *= base;
    return r;
}

double mono_product(const std::vector<int>& pows, const Vec& v) {
    double r = 1.0;
    for (std::size_t i = 0; i < pows.size(); ++i) {
        if (pows[i] != 0) r *= ipow(v(static_cast<Eigen::Index>(i)), pows[i]);
    }
    return r;
}

void require_shape(const Mat& a, Eigen::Index rows, Eigen::Index cols, const std::string& name) {
    if (a.rows() != rows || a.cols() != cols) {
        std::ostringstream os;
        os << "scenario." << name << ": expected shape " << rows << "x" << cols << ", got " << a.rows() << "x"
           << a.cols();
        throw ConfigError(os.str());
    }
}

void require_size(const Vec& a, Eigen::Index n, const std::string& name) {
    if (a.size() != n) {
        std::ostringstream os;
        os << "scenario." << name << ": expected length " << n << ", got " << a.size();
        throw ConfigError(os.str());
    }
}

double spectral_norm(const Mat& a) {
    if (a.size() == 0) return 0.0;
    Eigen::JacobiSVD<Mat> svd(a);
    return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

double columns_norm(const std::vector<Mat>& cols) {
    double s = 0.0;
    for (const auto& c : cols) s += std::pow(spectral_norm(c), 2);
    return std::sqrt(s);
}

void check_monomial(const Monomial& mono, int d, int m, const char* which) {
    auto bad = [&](const std::vector<int>& v, int len) {
        return static_cast<int>(v.size()) > len || std::any_of(v.begin(), v.end(), [](int e) { return e < 0; });
    };
    if (bad(mono.x_pow, d) || bad(mono.y_pow, d) || bad(mono.u_pow, m) || mono.t_pow < 0) {
        throw ConfigError(std::string("scenario.") + which + ": monomial exponent list has wrong length or a negative entry");
    }
    if (!std::isfinite(mono.coef)) throw ConfigError(std::string("scenario.") + which + ": non-finite coefficient");
}

}  // namespace

void AffineDrift::eval(double t, const Vec& x, const Vec& y, const Vec& z, const Vec& u, Vec& out) const {
    out = b0;
    out.noalias() += t * bt;
    out.noalias() += bx * x;
    out.noalias() += by * y;
    out.noalias() += bz * z;
    out.noalias() += bu * u;
}

void AffineDiffusion::eval(double t, const Vec& x, const Vec& y, const Vec& z, const Vec& u, Mat& out) const {
    out = s0;
    out.noalias() += t * st;
    for (std::size_t j = 0; j < sx.size(); ++j) {
        auto col = out.col(static_cast<Eigen::Index>(j));
        col.noalias() += sx[j] * x;
        col.noalias() += sy[j] * y;
        col.noalias() += sz[j] * z;
        col.noalias() += su[j] * u;
    }
}

bool AffineDiffusion::state_independent() const {
    auto all_zero = [](const std::vector<Mat>& v) {
        return std::all_of(v.begin(), v.end(), [](const Mat& a) { return a.isZero(0.0); });
    };
    return all_zero(sx) && all_zero(sy) && all_zero(sz);
}

double Polynomial::eval(double t, const Vec& x, const Vec& y, const Vec& u) const {
    double s = 0.0;
    for (const auto& mono : terms) {
        s += mono.coef * ipow(t, mono.t_pow) * mono_product(mono.x_pow, x) * mono_product(mono.y_pow, y) *
             mono_product(mono.u_pow, u);
    }
    return s;
}

int Polynomial::degree_xy() const {
    int deg = 0;
    for (const auto& mono : terms) {
        int e = 0;
        for (int v : mono.x_pow) e += v;
        for (int v : mono.y_pow) e += v;
        if (mono.coef != 0.0) deg = std::max(deg, e);
    }
    return deg;
}

bool Polynomial::depends_on_y() const {
    return std::any_of(terms.begin(), terms.end(), [](const Monomial& mono) {
        return mono.coef != 0.0 && std::any_of(mono.y_pow.begin(), mono.y_pow.end(), [](int e) { return e > 0; });
    });
}

Polynomial Polynomial::constant(double c) {
    Polynomial poly;
    if (c != 0.0) poly.terms.push_back(Monomial{c, 0, {}, {}, {}});
    return poly;
}

Scenario Scenario::zeros(int d, int n, int m) {
    Scenario s;
    s.d = d;
    s.n = n;
    s.m = m;
    s.constraint = ConvexConstraint::zero(d);
    s.drift = AffineDrift{Vec::Zero(d), Vec::Zero(d), Mat::Zero(d, d), Mat::Zero(d, d), Mat::Zero(d, d), Mat::Zero(d, m)};
    s.diffusion.s0 = Mat::Zero(d, n);
    s.diffusion.st = Mat::Zero(d, n);
    s.diffusion.sx.assign(n, Mat::Zero(d, d));
    s.diffusion.sy.assign(n, Mat::Zero(d, d));
    s.diffusion.sz.assign(n, Mat::Zero(d, d));
    s.diffusion.su.assign(n, Mat::Zero(d, m));
    s.controls = {Vec::Zero(m)};
    return s;
}

double Scenario::induced_lipschitz() const {
    const double lx = spectral_norm(drift.bx) + columns_norm(diffusion.sx);
    const double ly = spectral_norm(drift.by) + columns_norm(diffusion.sy);
    const double lz = spectral_norm(drift.bz) + columns_norm(diffusion.sz);
    return std::max({lx, ly, lz});
}

double Scenario::induced_kappa() const {
    // |b(t,0,0,0,u)| + |sigma(t,0,0,0,u)|_F is convex in t, so the endpoints suffice.
    const Vec zero = Vec::Zero(d);
    double worst = 0.0;
    Vec b;
    Mat sig;
    for (double t : {0.0, horizon}) {
        for (const auto& u : controls) {
            drift.eval(t, zero, zero, zero, u, b);
            diffusion.eval(t, zero, zero, zero, u, sig);
            worst = std::max(worst, b.norm() + sig.norm());
        }
    }
    return worst;
}

void Scenario::validate() const {
    if (d <= 0 || n <= 0 || m <= 0) throw ConfigError("scenario: d, n, m must be positive");
    if (d > 8) throw ConfigError("scenario.d: state dimension is limited to 8");
    if (!(delta >= 0.0) || !std::isfinite(delta)) throw ConfigError("scenario.delta: delay must be >= 0");
    if (!std::isfinite(lambda)) throw ConfigError("scenario.lambda: must be finite");
    if (!(s0 >= 0.0) || !(horizon > s0) || !std::isfinite(horizon)) {
        throw ConfigError("scenario: need 0 <= s0 < T");
    }
    if (constraint.dim() != d) throw ConfigError("scenario.constraint: dimension does not match d");

    require_size(drift.b0, d, "drift.b0");
    require_size(drift.bt, d, "drift.bt");
    require_shape(drift.bx, d, d, "drift.bx");
    require_shape(drift.by, d, d, "drift.by");
    require_shape(drift.bz, d, d, "drift.bz");
    require_shape(drift.bu, d, m, "drift.bu");
    require_shape(diffusion.s0, d, n, "diffusion.s0");
    require_shape(diffusion.st, d, n, "diffusion.st");
    for (const auto* cols : {&diffusion.sx, &diffusion.sy, &diffusion.sz}) {
        if (static_cast<int>(cols->size()) != n) throw ConfigError("scenario.diffusion: need one state matrix per Brownian column");
        for (const auto& a : *cols) require_shape(a, d, d, "diffusion column");
    }
    if (static_cast<int>(diffusion.su.size()) != n) throw ConfigError("scenario.diffusion.su: need one matrix per column");
    for (const auto& a : diffusion.su) require_shape(a, d, m, "diffusion.su");

    if (controls.empty()) throw ConfigError("scenario.controls: control set must be nonempty");
    for (const auto& u : controls) {
        require_size(u, m, "controls");
        if (!u.allFinite()) throw ConfigError("scenario.controls: non-finite control value");
    }

    for (const auto& mono : running_cost.terms) check_monomial(mono, d, m, "running_cost");
    for (const auto& mono : terminal_cost.terms) {
        check_monomial(mono, d, m, "terminal_cost");
        if (mono.t_pow != 0 || std::any_of(mono.u_pow.begin(), mono.u_pow.end(), [](int e) { return e != 0; })) {
            throw ConfigError("scenario.terminal_cost: h depends on (x, y) only");
        }
    }

    if (!(ell >= 0.0) || !(kappa >= 0.0) || !(kappa_bar >= 0.0) || p < 1) {
        throw ConfigError("scenario: ell, kappa, kappa_bar must be >= 0 and p >= 1");
    }
    const double lip = induced_lipschitz();
    if (lip > ell * (1.0 + 1e-12) + 1e-12) {
        std::ostringstream os;
        os << "scenario.ell: declared " << ell << " is below the coefficients' Lipschitz constant " << lip;
        throw ConfigError(os.str());
    }
    const double kap = induced_kappa();
    if (kap > kappa * (1.0 + 1e-12) + 1e-12) {
        std::ostringstream os;
        os << "scenario.kappa: declared " << kappa << " is below max |b(t,0,0,0,u)| + |sigma(t,0,0,0,u)| = " << kap;
        throw ConfigError(os.str());
    }
    if (running_cost.degree_xy() > p || terminal_cost.degree_xy() > p) {
        throw ConfigError("scenario.p: cost polynomial degree exceeds the declared growth power");
    }
    // Growth |f| + |h| <= kappa_bar (1 + |x|^p + |y|^p), sampled on a box.
    const NoiseStream stream(0x5eed'9a0f'7e11'0001ULL, 0);
    std::vector<double> g(static_cast<std::size_t>(2 * d));
    const double radii[] = {0.0, 0.25, 1.0, 3.0, 10.0};
    std::uint64_t k = 0;
    for (double r : radii) {
        for (int rep = 0; rep < 48; ++rep, ++k) {
            stream.standard_normals(k, g);
            Vec x(d), y(d);
            for (int i = 0; i < d; ++i) {
                x(i) = r * g[static_cast<std::size_t>(i)];
                y(i) = r * g[static_cast<std::size_t>(d + i)];
            }
            const double bound = kappa_bar * (1.0 + std::pow(x.norm(), p) + std::pow(y.norm(), p));
            for (double t : {s0, horizon}) {
                for (const auto& u : controls) {
                    const double lhs =
                        std::abs(running_cost.eval(t, x, y, u)) + std::abs(terminal_cost.eval(0.0, x, y, u));
                    if (lhs > bound * (1.0 + 1e-12) + 1e-12) {
                        std::ostringstream os;
                        os << "scenario.kappa_bar: growth bound violated at |x|=" << x.norm() << ", |y|=" << y.norm()
                           << " (|f|+|h| = " << lhs << " > " << bound << ")";
                        throw ConfigError(os.str());
                    }
                }
            }
        }
    }
}

}  // namespace sdvi
