// SPDX-License-Identifier: MIT
#include "sdvi/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "sdvi/error.hpp"

namespace sdvi {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) { throw ConfigError(path + ": " + what); }

// Strict object reader: every key must be consumed before done().
class Obj {
public:
    Obj(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j.is_object()) fail(path_, "expected an object");
    }

    [[nodiscard]] const Json* get(const std::string& key) {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }
    [[nodiscard]] const Json& req(const std::string& key) {
        const Json* v = get(key);
        if (!v) fail(sub(key), "required field is missing");
        return *v;
    }
    [[nodiscard]] std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    [[nodiscard]] const std::string& path() const { return path_; }

    void done() const {
        for (const auto& [k, v] : j_.items()) {
            if (!seen_.count(k)) fail(sub(k), "unknown field");
        }
    }

private:
    const Json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

double num(const Json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(path, "must be finite");
    return v;
}

long integer(const Json& j, const std::string& path) {
    if (!j.is_number_integer() && !(j.is_number() && std::floor(j.get<double>()) == j.get<double>())) {
        fail(path, "expected an integer");
    }
    return j.get<long>();
}

std::size_t count(const Json& j, const std::string& path) {
    const long v = integer(j, path);
    if (v < 0) fail(path, "must be >= 0");
    return static_cast<std::size_t>(v);
}

double num_or(Obj& o, const std::string& key, double def) {
    const Json* v = o.get(key);
    return v ? num(*v, o.sub(key)) : def;
}

std::string str(const Json& j, const std::string& path) {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
}

Vec vec(const Json& j, long n, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array of numbers");
    if (n >= 0 && static_cast<long>(j.size()) != n) {
        std::ostringstream os;
        os << "expected length " << n << ", got " << j.size();
        fail(path, os.str());
    }
    Vec v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = num(j[i], path + "[" + std::to_string(i) + "]");
    return v;
}

std::vector<double> reals(const Json& j, const std::string& path) {
    const Vec v = vec(j, -1, path);
    return {v.data(), v.data() + v.size()};
}

Mat mat(const Json& j, long rows, long cols, const std::string& path) {
    if (!j.is_array() || static_cast<long>(j.size()) != rows) {
        std::ostringstream os;
        os << "expected " << rows << " rows of " << cols << " numbers";
        fail(path, os.str());
    }
    Mat m(rows, cols);
    for (long r = 0; r < rows; ++r) m.row(r) = vec(j[static_cast<std::size_t>(r)], cols, path + "[" + std::to_string(r) + "]").transpose();
    return m;
}

std::vector<Mat> mats(const Json& j, long count_, long rows, long cols, const std::string& path) {
    if (!j.is_array() || static_cast<long>(j.size()) != count_) {
        std::ostringstream os;
        os << "expected one " << rows << "x" << cols << " matrix per Brownian column (" << count_ << ")";
        fail(path, os.str());
    }
    std::vector<Mat> out;
    for (long c = 0; c < count_; ++c) out.push_back(mat(j[static_cast<std::size_t>(c)], rows, cols, path + "[" + std::to_string(c) + "]"));
    return out;
}

std::vector<int> pows(Obj& o, const std::string& key, int len) {
    const Json* v = o.get(key);
    if (!v) return {};
    if (!v->is_array() || static_cast<int>(v->size()) > len) fail(o.sub(key), "exponent list too long or not an array");
    std::vector<int> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
        const long e = integer((*v)[i], o.sub(key));
        if (e < 0) fail(o.sub(key), "exponents must be >= 0");
        out.push_back(static_cast<int>(e));
    }
    return out;
}

Polynomial polynomial(const Json& j, int d, int m, const std::string& path) {
    if (!j.is_array()) fail(path, "expected a list of monomials");
    Polynomial p;
    for (std::size_t i = 0; i < j.size(); ++i) {
        Obj o(j[i], path + "[" + std::to_string(i) + "]");
        Monomial mono;
        mono.coef = num(o.req("coef"), o.sub("coef"));
        if (const Json* t = o.get("t")) {
            const long e = integer(*t, o.sub("t"));
            if (e < 0) fail(o.sub("t"), "exponent must be >= 0");
            mono.t_pow = static_cast<int>(e);
        }
        mono.x_pow = pows(o, "x", d);
        mono.y_pow = pows(o, "y", d);
        mono.u_pow = pows(o, "u", m);
        o.done();
        p.terms.push_back(mono);
    }
    return p;
}

Scheme scheme(const std::string& s, const std::string& path) {
    std::string k = s;
    std::replace(k.begin(), k.end(), '-', '_');
    if (k == "penalized_explicit") return Scheme::penalized_explicit;
    if (k == "prox_implicit") return Scheme::prox_implicit;
    if (k == "projection") return Scheme::projection;
    fail(path, "unknown scheme '" + s + "' (penalized_explicit, prox_implicit, projection)");
}

// A growth constant that always holds: each monomial of (x, y)-degree k <= p
// is bounded by |coef| T^a |u|^g max(|x|, |y|)^k <= |coef| T^a |u|^g (1 + |x|^p + |y|^p).
double induced_kappa_bar(const Scenario& s) {
    double umax = 1.0;
    for (const auto& u : s.controls) umax = std::max(umax, u.cwiseAbs().maxCoeff());
    const double tmax = std::max({1.0, std::abs(s.s0), std::abs(s.horizon)});
    double total = 0.0;
    for (const Polynomial* poly : {&s.running_cost, &s.terminal_cost}) {
        for (const auto& m : poly->terms) {
            int g = 0;
            for (int e : m.u_pow) g += e;
            total += std::abs(m.coef) * std::pow(tmax, m.t_pow) * std::pow(umax, g);
        }
    }
    return total;
}

void set_path(Json& doc, const std::string& dotted, Json value) {
    Json* cur = &doc;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = dotted.find('.', start);
        const std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) throw ConfigError("override '" + dotted + "': empty key segment");
        if (!cur->is_object()) throw ConfigError("override '" + dotted + "': '" + key + "' is not inside an object");
        if (dot == std::string::npos) {
            (*cur)[key] = std::move(value);
            return;
        }
        cur = &(*cur)[key];
        if (cur->is_null()) *cur = Json::object();
        start = dot + 1;
    }
}

StudySpec parse_study(const Json& j, const Scenario& scn, const SolverConfig& solver) {
    Obj o(j, "study");
    StudySpec st;
    st.kind = str(o.req("kind"), "study.kind");
    const auto& kinds = study_kinds();
    if (std::find(kinds.begin(), kinds.end(), st.kind) == kinds.end()) fail("study.kind", "unknown study '" + st.kind + "'");
    const std::string& k = st.kind;
    const double h = solver.h;

    auto init = [&](const char* key, InitialData& out) {
        const Json* v = o.get(key);
        if (v) {
            out = parse_init(*v, scn, h, o.sub(key));
        } else {
            out = parse_init(Json::object({{"constant", std::vector<double>(static_cast<std::size_t>(scn.d), 0.0)}}), scn, h,
                             o.sub(key));
        }
    };
    auto policy = [&]() {
        const Json* v = o.get("policy");
        st.policy = v ? parse_policy(*v, "study.policy") : Policy::constant(0);
        st.policy.validate(scn);
    };
    auto family = [&]() {
        const Json* v = o.get("family");
        st.family = parse_family(v ? *v : Json(), scn, "study.family");
    };
    auto eps_list = [&]() {
        st.eps_list = reals(o.req("eps_list"), "study.eps_list");
        for (std::size_t i = 0; i < st.eps_list.size(); ++i) {
            if (st.eps_list[i] < 2.0 * h * (1.0 - 1e-12)) {
                std::ostringstream os;
                os << "value " << st.eps_list[i] << " is below 2h = " << 2.0 * h
                   << " (stability guard of the explicit penalized scheme)";
                fail("study.eps_list[" + std::to_string(i) + "]", os.str());
            }
        }
    };
    auto hjb = [&]() {
        st.grid = parse_grid(o.req("grid"), scn.d, "study.grid");
        if (const Json* e = o.get("eps")) st.hjb_eps = num(*e, "study.eps");
        if (const Json* c = o.get("closure")) {
            const std::string s = str(*c, "study.closure");
            if (s == "zero") {
                st.closure = ZClosure::zero;
            } else if (s == "identity_in_x" || s == "identity-in-x") {
                st.closure = ZClosure::identity_in_x;
            } else {
                fail("study.closure", "expected 'zero' or 'identity_in_x'");
            }
        }
        if (const Json* y = o.get("y_transport")) {
            if (!y->is_boolean()) fail("study.y_transport", "expected a boolean");
            st.y_transport = y->get<bool>();
        }
        ReducedScenario red{scn, st.closure, st.y_transport};
        red.validate();
    };
    auto points = [&]() {
        const Json& p = o.req("points");
        if (!p.is_array() || p.empty()) fail("study.points", "expected a nonempty list of {s, x, y}");
        for (std::size_t i = 0; i < p.size(); ++i) st.points.push_back(parse_point(p[i], scn.d, "study.points[" + std::to_string(i) + "]"));
    };

    if (k == "simulate") {
        init("init", st.init);
        policy();
        if (const Json* v = o.get("path")) st.path_index = count(*v, "study.path");
        if (const Json* v = o.get("audit_points")) {
            if (!v->is_array()) fail("study.audit_points", "expected a list of points");
            for (std::size_t i = 0; i < v->size(); ++i) {
                st.audit_points.push_back(vec((*v)[i], scn.d, "study.audit_points[" + std::to_string(i) + "]"));
            }
        }
        st.tol = num_or(o, "audit_tol", 1e-9);
    } else if (k == "moments") {
        init("init", st.init);
        policy();
        if (const Json* v = o.get("scaling")) st.scaling = reals(*v, "study.scaling");
    } else if (k == "dependence") {
        init("init", st.init);
        init("init2", st.init2);
        policy();
    } else if (k == "cauchy-rate") {
        init("init", st.init);
        policy();
        eps_list();
        for (std::size_t i = 1; i < st.eps_list.size(); ++i) {
            if (!(st.eps_list[i] < st.eps_list[i - 1])) fail("study.eps_list", "must be strictly decreasing");
        }
        if (st.eps_list.size() < 2) fail("study.eps_list", "need at least two values");
    } else if (k == "cost") {
        init("init", st.init);
        policy();
    } else if (k == "value") {
        init("init", st.init);
        family();
    } else if (k == "dpp") {
        init("init", st.init);
        family();
        st.theta = num(o.req("theta"), "study.theta");
        if (const Json* v = o.get("outer")) st.budget.outer = count(*v, "study.outer");
        if (const Json* v = o.get("inner")) st.budget.inner = count(*v, "study.inner");
        if (const Json* v = o.get("cap")) st.budget.cap = count(*v, "study.cap");
        if (st.budget.outer < 1 || st.budget.inner < 1) fail("study", "outer and inner must be >= 1");
        if (st.budget.outer > st.budget.cap / st.budget.inner) {
            std::ostringstream os;
            os << "nested budget " << st.budget.outer << " x " << st.budget.inner << " exceeds the cap " << st.budget.cap;
            fail("study.outer", os.str());
        }
        if (!(st.theta > st.init.s) || st.theta > scn.horizon) fail("study.theta", "must lie in (s, T]");
        (void)aligned_steps(st.theta - st.init.s, h, "study.theta - s");
    } else if (k == "regularity") {
        family();
        const Json& p = o.req("pairs");
        if (!p.is_array() || p.empty()) fail("study.pairs", "expected a nonempty list of {a, b}");
        for (std::size_t i = 0; i < p.size(); ++i) {
            const std::string path = "study.pairs[" + std::to_string(i) + "]";
            Obj po(p[i], path);
            InitialData a = parse_init(po.req("a"), scn, h, po.sub("a"));
            InitialData b = parse_init(po.req("b"), scn, h, po.sub("b"));
            po.done();
            st.pairs.emplace_back(std::move(a), std::move(b));
        }
    } else if (k == "gap") {
        init("init", st.init);
        family();
        eps_list();
    } else if (k == "hjb") {
        hjb();
    } else if (k == "viscosity-probe") {
        hjb();
        points();
        if (const Json* v = o.get("radius")) st.radius = static_cast<int>(count(*v, "study.radius"));
        if (st.radius < 1) fail("study.radius", "must be >= 1");
        st.tol = num_or(o, "tol", 0.0);
    } else if (k == "compare") {
        hjb();
        points();
        family();
    }
    o.done();
    return st;
}

}  // namespace

Json apply_overrides(Json doc, const std::vector<std::string>& overrides) {
    for (const auto& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + ov + "': expected key=value");
        const std::string key = ov.substr(0, eq);
        const std::string raw = ov.substr(eq + 1);
        Json value = Json::parse(raw, nullptr, false);
        if (value.is_discarded()) value = raw;
        set_path(doc, key, std::move(value));
    }
    return doc;
}

ConvexConstraint parse_constraint(const Json& j, int d, const std::string& path) {
    Obj o(j, path);
    const std::string kind = str(o.req("kind"), o.sub("kind"));
    ConvexConstraint c = ConvexConstraint::zero(d);
    try {
        if (kind == "zero") {
            c = ConvexConstraint::zero(d);
        } else if (kind == "quadratic") {
            c = ConvexConstraint::quadratic(mat(o.req("q"), d, d, o.sub("q")));
        } else if (kind == "box") {
            c = ConvexConstraint::box(vec(o.req("lo"), d, o.sub("lo")), vec(o.req("hi"), d, o.sub("hi")));
        } else if (kind == "ball") {
            c = ConvexConstraint::ball(vec(o.req("center"), d, o.sub("center")), num(o.req("radius"), o.sub("radius")));
        } else if (kind == "halfspace") {
            c = ConvexConstraint::halfspace(vec(o.req("normal"), d, o.sub("normal")), num(o.req("offset"), o.sub("offset")));
        } else if (kind == "polyhedron") {
            const Json& faces = o.req("faces");
            if (!faces.is_array()) fail(o.sub("faces"), "expected a list of {normal, offset}");
            std::vector<Halfspace> hs;
            for (std::size_t i = 0; i < faces.size(); ++i) {
                Obj f(faces[i], o.sub("faces") + "[" + std::to_string(i) + "]");
                hs.push_back(Halfspace{vec(f.req("normal"), d, f.sub("normal")), num(f.req("offset"), f.sub("offset"))});
                f.done();
            }
            c = ConvexConstraint::polyhedron(std::move(hs));
        } else {
            fail(o.sub("kind"), "unknown constraint kind '" + kind + "' (zero, quadratic, box, ball, halfspace, polyhedron)");
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        fail(path, e.what());
    }
    o.done();
    return c;
}

Scenario parse_scenario(const Json& j, const std::string& path) {
    Obj o(j, path);
    const long d = integer(o.req("d"), o.sub("d"));
    const Json* nj = o.get("n");
    const Json* mj = o.get("m");
    const long n = nj ? integer(*nj, o.sub("n")) : d;
    const long m = mj ? integer(*mj, o.sub("m")) : 1;
    if (d < 1 || d > 8) fail(o.sub("d"), "state dimension must be in 1..8");
    if (n < 1 || m < 1) fail(path, "n and m must be >= 1");
    Scenario s = Scenario::zeros(static_cast<int>(d), static_cast<int>(n), static_cast<int>(m));
    s.delta = num(o.req("delta"), o.sub("delta"));
    s.lambda = num_or(o, "lambda", 0.0);
    s.horizon = num(o.req("T"), o.sub("T"));
    s.s0 = num_or(o, "s0", 0.0);
    if (const Json* c = o.get("constraint")) s.constraint = parse_constraint(*c, static_cast<int>(d), o.sub("constraint"));

    if (const Json* dj = o.get("drift")) {
        Obj dr(*dj, o.sub("drift"));
        if (const Json* v = dr.get("b0")) s.drift.b0 = vec(*v, d, dr.sub("b0"));
        if (const Json* v = dr.get("bt")) s.drift.bt = vec(*v, d, dr.sub("bt"));
        if (const Json* v = dr.get("bx")) s.drift.bx = mat(*v, d, d, dr.sub("bx"));
        if (const Json* v = dr.get("by")) s.drift.by = mat(*v, d, d, dr.sub("by"));
        if (const Json* v = dr.get("bz")) s.drift.bz = mat(*v, d, d, dr.sub("bz"));
        if (const Json* v = dr.get("bu")) s.drift.bu = mat(*v, d, m, dr.sub("bu"));
        dr.done();
    }
    if (const Json* sj = o.get("diffusion")) {
        Obj df(*sj, o.sub("diffusion"));
        if (const Json* v = df.get("s0")) s.diffusion.s0 = mat(*v, d, n, df.sub("s0"));
        if (const Json* v = df.get("st")) s.diffusion.st = mat(*v, d, n, df.sub("st"));
        if (const Json* v = df.get("sx")) s.diffusion.sx = mats(*v, n, d, d, df.sub("sx"));
        if (const Json* v = df.get("sy")) s.diffusion.sy = mats(*v, n, d, d, df.sub("sy"));
        if (const Json* v = df.get("sz")) s.diffusion.sz = mats(*v, n, d, d, df.sub("sz"));
        if (const Json* v = df.get("su")) s.diffusion.su = mats(*v, n, d, m, df.sub("su"));
        df.done();
    }
    if (const Json* v = o.get("running_cost")) s.running_cost = polynomial(*v, static_cast<int>(d), static_cast<int>(m), o.sub("running_cost"));
    if (const Json* v = o.get("terminal_cost")) s.terminal_cost = polynomial(*v, static_cast<int>(d), static_cast<int>(m), o.sub("terminal_cost"));
    if (const Json* v = o.get("controls")) {
        if (!v->is_array() || v->empty()) fail(o.sub("controls"), "expected a nonempty list of control vectors");
        s.controls.clear();
        for (std::size_t i = 0; i < v->size(); ++i) s.controls.push_back(vec((*v)[i], m, o.sub("controls") + "[" + std::to_string(i) + "]"));
    }
    // Declared constants default to the ones induced by the coefficients.
    const Json* ell = o.get("ell");
    const Json* kappa = o.get("kappa");
    s.ell = ell ? num(*ell, o.sub("ell")) : s.induced_lipschitz();
    s.kappa = kappa ? num(*kappa, o.sub("kappa")) : s.induced_kappa();
    // p defaults to the cost degree (at least 1).
    if (const Json* v = o.get("p")) {
        s.p = static_cast<int>(integer(*v, o.sub("p")));
    } else {
        s.p = std::max({1, s.running_cost.degree_xy(), s.terminal_cost.degree_xy()});
    }
    const Json* kb = o.get("kappa_bar");
    s.kappa_bar = kb ? num(*kb, o.sub("kappa_bar")) : induced_kappa_bar(s);
    o.done();
    s.validate();
    return s;
}

SolverConfig parse_solver(const Json& j, const std::string& path) {
    Obj o(j, path);
    SolverConfig c;
    if (const Json* v = o.get("scheme")) c.scheme = scheme(str(*v, o.sub("scheme")), o.sub("scheme"));
    c.eps = num_or(o, "eps", 0.0);
    c.h = num(o.req("h"), o.sub("h"));
    if (const Json* v = o.get("seed")) {
        if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long>() >= 0)) fail(o.sub("seed"), "expected a non-negative integer");
        c.seed = v->get<std::uint64_t>();
    }
    if (const Json* v = o.get("n_paths")) c.n_paths = count(*v, o.sub("n_paths"));
    if (const Json* v = o.get("workers")) c.workers = static_cast<int>(integer(*v, o.sub("workers")));
    o.done();
    return c;
}

Policy parse_policy(const Json& j, const std::string& path) {
    Obj o(j, path);
    std::string name;
    if (const Json* v = o.get("name")) name = str(*v, o.sub("name"));
    const Json* c = o.get("constant");
    const Json* pw = o.get("piecewise");
    const Json* tb = o.get("table");
    if ((c != nullptr) + (pw != nullptr) + (tb != nullptr) != 1) fail(path, "set exactly one of constant, piecewise, table");
    Policy p;
    if (c) {
        p = Policy(ConstantPolicy{count(*c, o.sub("constant"))}, name);
    } else if (pw) {
        Obj q(*pw, o.sub("piecewise"));
        PiecewiseConstantPolicy k;
        k.knots = reals(q.req("knots"), q.sub("knots"));
        const Json& cs = q.req("controls");
        if (!cs.is_array()) fail(q.sub("controls"), "expected a list of control indices");
        for (std::size_t i = 0; i < cs.size(); ++i) k.controls.push_back(count(cs[i], q.sub("controls")));
        q.done();
        p = Policy(std::move(k), name);
    } else {
        Obj q(*tb, o.sub("table"));
        FeedbackTablePolicy k;
        k.lo = vec(q.req("lo"), -1, q.sub("lo"));
        k.hi = vec(q.req("hi"), -1, q.sub("hi"));
        const Json& ns = q.req("nodes");
        if (!ns.is_array()) fail(q.sub("nodes"), "expected a list of node counts");
        for (std::size_t i = 0; i < ns.size(); ++i) k.nodes.push_back(static_cast<int>(count(ns[i], q.sub("nodes"))));
        const Json& cs = q.req("controls");
        if (!cs.is_array()) fail(q.sub("controls"), "expected a list of control indices");
        for (std::size_t i = 0; i < cs.size(); ++i) k.controls.push_back(count(cs[i], q.sub("controls")));
        q.done();
        p = Policy(std::move(k), name);
    }
    o.done();
    return p;
}

PolicyFamily parse_family(const Json& j, const Scenario& scn, const std::string& path) {
    PolicyFamily fam;
    if (j.is_null()) {
        for (std::size_t i = 0; i < scn.controls.size(); ++i) fam.push_back(Policy::constant(i));
        return fam;
    }
    if (!j.is_array() || j.empty()) fail(path, "expected a nonempty list of policies");
    for (std::size_t i = 0; i < j.size(); ++i) {
        fam.push_back(parse_policy(j[i], path + "[" + std::to_string(i) + "]"));
        fam.back().validate(scn);
    }
    return fam;
}

InitialData parse_init(const Json& j, const Scenario& scn, double h, const std::string& path) {
    Obj o(j, path);
    InitialData init;
    init.s = num_or(o, "s", scn.s0);
    const Json* c = o.get("constant");
    const Json* v = o.get("values");
    if ((c != nullptr) == (v != nullptr)) fail(path, "set exactly one of constant, values");
    if (c) {
        init.xi = PathSegment::constant(vec(*c, scn.d, o.sub("constant")), scn.delta, h);
    } else {
        if (!v->is_array()) fail(o.sub("values"), "expected a list of states on [-delta, 0] at step h");
        init.xi.h = h;
        for (std::size_t i = 0; i < v->size(); ++i) init.xi.values.push_back(vec((*v)[i], scn.d, o.sub("values") + "[" + std::to_string(i) + "]"));
    }
    o.done();
    if (!(init.s >= 0.0) || !(init.s < scn.horizon)) fail(o.sub("s"), "must lie in [0, T)");
    (void)aligned_steps(scn.horizon - init.s, h, (path + ": T - s").c_str());
    init.xi.validate(scn.delta, scn.constraint);
    return init;
}

GridSpec parse_grid(const Json& j, int d, const std::string& path) {
    Obj o(j, path);
    GridSpec g;
    g.time_steps = static_cast<int>(count(o.req("time_steps"), o.sub("time_steps")));
    g.x_lo = vec(o.req("x_lo"), d, o.sub("x_lo"));
    g.x_hi = vec(o.req("x_hi"), d, o.sub("x_hi"));
    auto nodes = [&](const char* key, std::vector<int>& out, bool optional) {
        const Json* v = o.get(key);
        if (!v) {
            if (!optional) fail(o.sub(key), "required field is missing");
            out.assign(static_cast<std::size_t>(d), 1);
            return;
        }
        if (!v->is_array() || static_cast<int>(v->size()) != d) fail(o.sub(key), "expected one node count per axis");
        for (std::size_t i = 0; i < v->size(); ++i) out.push_back(static_cast<int>(count((*v)[i], o.sub(key))));
    };
    nodes("x_nodes", g.x_nodes, false);
    nodes("y_nodes", g.y_nodes, true);
    const Json* ylo = o.get("y_lo");
    const Json* yhi = o.get("y_hi");
    g.y_lo = ylo ? vec(*ylo, d, o.sub("y_lo")) : Vec::Zero(d).eval();
    g.y_hi = yhi ? vec(*yhi, d, o.sub("y_hi")) : g.y_lo;
    o.done();
    g.validate(d);
    return g;
}

ProbePoint parse_point(const Json& j, int d, const std::string& path) {
    Obj o(j, path);
    ProbePoint p;
    p.s = num(o.req("s"), o.sub("s"));
    p.x = vec(o.req("x"), d, o.sub("x"));
    const Json* y = o.get("y");
    p.y = y ? vec(*y, d, o.sub("y")) : Vec::Zero(d).eval();
    o.done();
    return p;
}

ExperimentConfig load_config(const Json& doc) {
    Obj o(doc, "");
    ExperimentConfig cfg;
    cfg.id = str(o.req("id"), "id");
    if (cfg.id.empty() || cfg.id.find_first_of("/\\") != std::string::npos || cfg.id == "." || cfg.id == "..") {
        fail("id", "must be a nonempty name without path separators");
    }
    cfg.scenario = parse_scenario(o.req("scenario"), "scenario");
    cfg.solver = parse_solver(o.req("solver"), "solver");
    cfg.solver.validate(cfg.scenario);
    if (const Json* v = o.get("output")) cfg.output_dir = str(*v, "output");
    cfg.study = parse_study(o.req("study"), cfg.scenario, cfg.solver);
    o.done();
    cfg.resolved = doc;
    return cfg;
}

}  // namespace sdvi
