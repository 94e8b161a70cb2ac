// SPDX-License-Identifier: MIT
#include "sdvi/runner.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "sdvi/error.hpp"

namespace sdvi {

namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

// Small row-oriented CSV builder.
class Csv {
public:
    explicit Csv(std::vector<std::string> header) : cols_(header.size()) { line(header); }

    Csv& cell(double v) { return text(fmt(v)); }
    Csv& cell(std::size_t v) { return text(std::to_string(v)); }
    Csv& cell(bool v) { return text(v ? "1" : "0"); }
    Csv& cell(const std::string& s) { return text(quote(s)); }
    Csv& est(const Estimate& e) { return cell(e.mean).cell(e.se); }
    Csv& vec(const Vec& v) {
        for (Eigen::Index i = 0; i < v.size(); ++i) cell(v(i));
        return *this;
    }
    void end() {
        if (row_.size() != cols_) throw StateError("csv: row width does not match the header");
        line(row_);
        row_.clear();
    }
    [[nodiscard]] std::string str() const { return os_.str(); }

private:
    Csv& text(std::string s) {
        row_.push_back(std::move(s));
        return *this;
    }
    void line(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
        os_ << '\n';
    }

    std::size_t cols_;
    std::vector<std::string> row_;
    std::ostringstream os_;
};

std::vector<std::string> indexed(const std::string& prefix, int d) {
    std::vector<std::string> out;
    for (int i = 0; i < d; ++i) out.push_back(d == 1 ? prefix : prefix + "_" + std::to_string(i));
    return out;
}

void append(std::vector<std::string>& a, const std::vector<std::string>& b) { a.insert(a.end(), b.begin(), b.end()); }

Json est_json(const Estimate& e) { return Json{{"mean", e.mean}, {"se", e.se}}; }

Json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

std::string summary_line(const std::string& id, const std::string& kind, const std::string& body) {
    return kind + " [" + id + "]: " + body;
}

StudyOutput simulate(const ExperimentConfig& cfg) {
    const auto& st = cfg.study;
    Scenario scn = cfg.scenario;
    scn.s0 = st.init.s;
    const Trajectory traj = simulate_path(scn, st.policy, st.init.xi, cfg.solver, NoiseStream(cfg.solver.seed, st.path_index));
    const SolutionAuditReport audit = solution_audit(traj, scn.constraint, st.audit_points, st.tol);
    std::ostringstream csv;
    write_trajectory_csv(traj, csv);
    Json entries = Json::array();
    for (const auto& e : audit.inequality) {
        entries.push_back({{"u", vec_json(e.u)}, {"skipped", e.skipped}, {"worst_slack", e.worst_slack}, {"pass", e.pass}});
    }
    Json j{{"steps", traj.size() - 1},
           {"path", st.path_index},
           {"phi_integral", traj.phi_integral},
           {"k_variation", traj.k_variation},
           {"noise_checksum", traj.noise_checksum},
           {"audit",
            {{"inequality", entries},
             {"max_domain_distance", audit.max_domain_distance},
             {"allowed_domain_distance", audit.allowed_domain_distance},
             {"domain_pass", audit.domain_pass},
             {"pass", audit.pass()}}}};
    std::ostringstream line;
    line << traj.size() - 1 << " steps, |K|_TV = " << fmt(traj.k_variation) << ", audit " << (audit.pass() ? "pass" : "FAIL");
    return {csv.str(), j, summary_line(cfg.id, "simulate", line.str())};
}

StudyOutput moments(const ExperimentConfig& cfg) {
    const auto& st = cfg.study;
    const MomentReport r = estimate_moments(cfg.scenario, st.policy, st.init, cfg.solver);
    const int d = cfg.scenario.d;
    std::vector<std::string> head = {"n_paths"};
    for (const char* n : {"sup_x2", "sup_x4", "sup_y2", "int_z2", "sup_k2", "k_bv", "k_bv2", "int_phi", "int_phi2"}) {
        head.push_back(n);
        head.push_back(std::string(n) + "_se");
    }
    append(head, indexed("terminal_mean", d));
    head.push_back("terminal_x2");
    head.push_back("terminal_x2_se");
    head.push_back("min_component");
    Csv csv(head);
    csv.cell(r.n_paths);
    for (const Estimate* e : {&r.sup_x2, &r.sup_x4, &r.sup_y2, &r.int_z2, &r.sup_k2, &r.k_bv, &r.k_bv2, &r.int_phi, &r.int_phi2}) {
        csv.est(*e);
    }
    for (const auto& e : r.terminal_mean) csv.cell(e.mean);
    csv.est(r.terminal_x2).cell(r.min_component);
    csv.end();

    Json ratios = Json::object();
    for (const auto& b : apriori_bound_check(r, st.init.xi, cfg.scenario.constraint)) ratios[b.name] = b.value;
    Json j{{"n_paths", r.n_paths},
           {"estimates",
            {{"sup_x2", est_json(r.sup_x2)},
             {"sup_x4", est_json(r.sup_x4)},
             {"sup_y2", est_json(r.sup_y2)},
             {"int_z2", est_json(r.int_z2)},
             {"sup_k2", est_json(r.sup_k2)},
             {"k_bv", est_json(r.k_bv)},
             {"k_bv2", est_json(r.k_bv2)},
             {"int_phi", est_json(r.int_phi)},
             {"int_phi2", est_json(r.int_phi2)},
             {"terminal_x2", est_json(r.terminal_x2)}}},
           {"min_component", r.min_component},
           {"noise_checksum", r.noise_checksum},
           {"ratios", ratios}};
    if (!st.scaling.empty()) {
        const ScalingStudy sc = apriori_scaling_study(cfg.scenario, st.policy, st.init, cfg.solver, st.scaling);
        Json rows = Json::array();
        for (const auto& row : sc.rows) {
            Json rr = Json::object();
            for (const auto& b : row.ratios) rr[b.name] = b.value;
            rows.push_back({{"factor", row.factor}, {"ratios", rr}});
        }
        j["scaling"] = {{"rows", rows}, {"pass", sc.pass}};
    }
    return {csv.str(), j,
            summary_line(cfg.id, "moments", "E sup|X|^2 = " + fmt(r.sup_x2.mean) + " +- " + fmt(r.sup_x2.se) + " (" +
                                                std::to_string(r.n_paths) + " paths)")};
}

StudyOutput dependence(const ExperimentConfig& cfg) {
    const auto& st = cfg.study;
    const DependenceRecord r = dependence_study(cfg.scenario, st.init, st.init2, st.policy, cfg.solver);
    Csv csv({"sup_dx2", "sup_dx2_se", "sup_dk2", "sup_dk2_se", "gamma1", "rhs_shape", "empirical_c", "crn_verified"});
    csv.est(r.sup_dx2).est(r.sup_dk2).cell(r.gamma1).cell(r.rhs_shape).cell(r.empirical_c).cell(r.crn_verified);
    csv.end();
    Json j{{"estimates", {{"sup_dx2", est_json(r.sup_dx2)}, {"sup_dk2", est_json(r.sup_dk2)}}},
           {"gamma1", r.gamma1},
           {"rhs_shape", r.rhs_shape},
           {"empirical_c", r.empirical_c},
           {"crn_verified", r.crn_verified}};
    return {csv.str(), j,
            summary_line(cfg.id, "dependence", "E sup|dX|^2 = " + fmt(r.sup_dx2.mean) + ", Gamma1 = " + fmt(r.gamma1) +
                                                   ", C = " + fmt(r.empirical_c))};
}

StudyOutput cauchy(const ExperimentConfig& cfg) {
    const auto& st = cfg.study;
    const CauchyReport r = cauchy_rate_study(cfg.scenario, st.policy, st.init, st.eps_list, cfg.solver);
    Csv csv({"eps", "eps2", "sup_dx2", "sup_dx2_se", "shape", "ratio"});
    Json rows = Json::array();
    for (const auto& row : r.rows) {
        csv.cell(row.eps).cell(row.eps2).est(row.sup_dx2).cell(row.shape).cell(row.ratio);
        csv.end();
        rows.push_back({{"eps", row.eps}, {"eps2", row.eps2}, {"sup_dx2", est_json(row.sup_dx2)}, {"ratio", row.ratio}});
    }
    Json gaps = Json::array();
    for (std::size_t i = 0; i < r.reference_gap.size(); ++i) {
        gaps.push_back({{"eps", r.eps[i]}, {"sup_dx2", est_json(r.reference_gap[i])}});
    }
    Json j{{"rows", rows},
           {"reference_gap", gaps},
           {"gamma2", r.gamma2},
           {"slope", r.slope_defined ? Json(r.slope) : Json()},
           {"slope_defined", r.slope_defined},
           {"strictly_decreasing", r.strictly_decreasing},
           {"ratio_spread", r.ratio_spread},
           {"crn_verified", r.crn_verified}};
    return {csv.str(), j,
            summary_line(cfg.id, "cauchy-rate",
                         std::string(r.strictly_decreasing ? "decreasing" : "NOT decreasing") +
                             ", ratio spread = " + fmt(r.ratio_spread) +
                             (r.slope_defined ? ", slope = " + fmt(r.slope) : std::string()))};
}

StudyOutput cost(const ExperimentConfig& cfg) {
    const auto& st = cfg.study;
    const CostEstimate c = estimate_cost(cfg.scenario, st.policy, st.init, cfg.solver);
    Csv csv({"policy", "n_paths", "j", "j_se"});
    csv.cell(st.policy.name()).cell(c.samples.size()).est(c.j);
    csv.end();
    Json j{{"policy", st.policy.name()}, {"n_paths", c.samples.size()}, {"estimates", {{"j", est_json(c.j)}}}};
    return {csv.str(), j, summary_line(cfg.id, "cost", "J = " + fmt(c.j.mean) + " +- " + fmt(c.j.se))};
}

StudyOutput value(const ExperimentConfig& cfg) {
    const auto& st = cfg.study;
    const ValueEstimate v = estimate_value(cfg.scenario, st.family, st.init, cfg.solver);
    Csv csv({"index", "policy", "j", "j_se", "argmin"});
    Json per = Json::array();
    for (std::size_t i = 0; i < v.per_policy.size(); ++i) {
        csv.cell(i).cell(v.per_policy[i].name).est(v.per_policy[i].j).cell(i == v.argmin);
        csv.end();
        per.push_back({{"policy", v.per_policy[i].name}, {"j", est_json(v.per_policy[i].j)}});
    }
    Json j{{"v_hat", v.v_hat}, {"se", v.se}, {"argmin", v.argmin}, {"per_policy", per}};
    return {csv.str(), j,
            summary_line(cfg.id, "value",
                         "V = " + fmt(v.v_hat) + " +- " + fmt(v.se) + " (policy " + v.per_policy[v.argmin].name + ")")};
}

StudyOutput dpp(const ExperimentConfig& cfg) {
    const auto& st = cfg.study;
    const DppResult r = dpp_residual(cfg.scenario, st.family, st.init, st.theta, cfg.solver, st.budget);
    Csv csv({"theta", "outer", "inner", "lhs", "lhs_se", "rhs", "rhs_se", "residual", "se", "suboptimality_allowance",
             "within_noise"});
    csv.cell(st.theta).cell(st.budget.outer).cell(st.budget.inner).cell(r.lhs).cell(r.se_lhs).cell(r.rhs).cell(r.se_rhs);
    csv.cell(r.residual).cell(r.se).cell(r.suboptimality_allowance).cell(r.within_noise);
    csv.end();
    Json per = Json::array();
    for (const auto& e : r.rhs_per_policy) per.push_back(est_json(e));
    Json j{{"lhs", {{"mean", r.lhs}, {"se", r.se_lhs}}},
           {"rhs", {{"mean", r.rhs}, {"se", r.se_rhs}}},
           {"residual", r.residual},
           {"se", r.se},
           {"suboptimality_allowance", r.suboptimality_allowance},
           {"within_noise", r.within_noise},
           {"rhs_argmin", r.rhs_argmin},
           {"rhs_per_policy", per}};
    return {csv.str(), j,
            summary_line(cfg.id, "dpp",
                         "residual = " + fmt(r.residual) + " (3 se = " + fmt(3.0 * r.se) + ", " +
                             (r.within_noise ? "within noise" : "OUTSIDE noise") + ")")};
}

StudyOutput regularity(const ExperimentConfig& cfg) {
    const auto& st = cfg.study;
    const RegularityReport r = value_regularity_probe(cfg.scenario, st.family, st.pairs, cfg.solver);
    Csv csv({"s_a", "s_b", "v_a", "v_b", "dv", "gamma1_sqrt", "ds_sqrt", "shape", "growth_a"});
    Json rows = Json::array();
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        const auto& row = r.rows[i];
        csv.cell(st.pairs[i].first.s).cell(st.pairs[i].second.s).cell(row.v_a).cell(row.v_b).cell(row.dv);
        csv.cell(row.gamma1_sqrt).cell(row.ds_sqrt).cell(row.shape).cell(row.growth_a);
        csv.end();
        rows.push_back({{"v_a", row.v_a},
                        {"v_b", row.v_b},
                        {"dv", row.dv},
                        {"shape", row.shape},
                        {"ratio", row.shape > 0.0 ? Json(row.dv / row.shape) : Json()}});
    }
    Json j{{"rows", rows}, {"refinement_monotone", r.refinement_monotone}};
    return {csv.str(), j,
            summary_line(cfg.id, "regularity",
                         std::to_string(r.rows.size()) + " pairs, refinement " +
                             (r.refinement_monotone ? "monotone" : "NOT monotone"))};
}

StudyOutput gap(const ExperimentConfig& cfg) {
    const auto& st = cfg.study;
    const GapReport r = penalization_gap(cfg.scenario, st.family, st.init, st.eps_list, cfg.solver);
    Csv csv({"eps", "v_eps", "v_eps_se", "v_ref", "v_ref_se", "gap", "gap_se"});
    Json rows = Json::array();
    for (const auto& row : r.rows) {
        csv.cell(row.eps).cell(row.v_eps).cell(row.se_eps).cell(r.v_ref).cell(r.se_ref).cell(row.gap).cell(row.se);
        csv.end();
        rows.push_back({{"eps", row.eps}, {"v_eps", row.v_eps}, {"gap", row.gap}, {"se", row.se}});
    }
    Json j{{"v_ref", {{"mean", r.v_ref}, {"se", r.se_ref}}}, {"rows", rows}, {"monotone", r.monotone}};
    return {csv.str(), j,
            summary_line(cfg.id, "gap",
                         "V_ref = " + fmt(r.v_ref) + ", gap " + (r.monotone ? "monotone" : "NOT monotone") + " over " +
                             std::to_string(r.rows.size()) + " eps")};
}

ReducedScenario reduced(const ExperimentConfig& cfg) {
    return ReducedScenario{cfg.scenario, cfg.study.closure, cfg.study.y_transport};
}

Json field_json(const ValueField& f) {
    return {{"dt", f.dt},
            {"eps", f.eps},
            {"cfl_number", f.cfl_number},
            {"min_stencil_weight", f.min_stencil_weight},
            {"layers", f.layers()},
            {"nodes", f.nodes()},
            {"max_dx", f.grid.max_dx()}};
}

StudyOutput hjb(const ExperimentConfig& cfg) {
    const ReducedScenario red = reduced(cfg);
    const ValueField f = solve_hjb(red, cfg.study.grid, cfg.study.hjb_eps, cfg.solver.workers);
    std::ostringstream csv;
    write_field_csv(f, csv);
    return {csv.str(), field_json(f),
            summary_line(cfg.id, "hjb",
                         std::to_string(f.nodes()) + " nodes x " + std::to_string(f.layers()) + " layers, CFL " +
                             fmt(f.cfl_number) + ", min weight " + fmt(f.min_stencil_weight))};
}

std::vector<std::string> point_head(int d) {
    std::vector<std::string> h = {"s"};
    append(h, indexed("x", d));
    append(h, indexed("y", d));
    return h;
}

StudyOutput viscosity(const ExperimentConfig& cfg) {
    const auto& st = cfg.study;
    const ReducedScenario red = reduced(cfg);
    const ValueField f = solve_hjb(red, st.grid, st.hjb_eps, cfg.solver.workers);
    const ViscosityReport r = viscosity_probe(red, f, st.points, st.radius, st.tol);
    auto head = point_head(cfg.scenario.d);
    append(head, {"side", "lhs", "rhs", "slack", "vacuous", "pass", "skipped", "reason"});
    Csv csv(head);
    std::size_t pass = 0, fail = 0, vac = 0, skip = 0;
    for (const auto& rec : r.records) {
        csv.cell(rec.point.s).vec(rec.point.x).vec(rec.point.y);
        csv.cell(rec.side).cell(rec.lhs).cell(rec.rhs).cell(rec.slack).cell(rec.vacuous).cell(rec.pass).cell(rec.skipped);
        csv.cell(rec.reason);
        csv.end();
        if (rec.skipped) {
            ++skip;
        } else if (rec.pass) {
            ++pass;
        } else {
            ++fail;
        }
        if (rec.vacuous) ++vac;
    }
    Json j = field_json(f);
    j["tolerance"] = r.tolerance;
    j["records"] = r.records.size();
    j["pass"] = pass;
    j["fail"] = fail;
    j["vacuous"] = vac;
    j["skipped"] = skip;
    return {csv.str(), j,
            summary_line(cfg.id, "viscosity-probe",
                         std::to_string(pass) + " pass, " + std::to_string(fail) + " fail, " + std::to_string(vac) +
                             " vacuous, " + std::to_string(skip) + " skipped")};
}

// Every other node on axes that allow it; half the time steps.
GridSpec coarsen(const GridSpec& g) {
    GridSpec c = g;
    auto half = [](int n) { return (n >= 5 && n % 2 == 1) ? (n - 1) / 2 + 1 : n; };
    for (auto& n : c.x_nodes) n = half(n);
    for (auto& n : c.y_nodes) n = half(n);
    c.time_steps = (g.time_steps + 1) / 2;
    return c;
}

StudyOutput compare(const ExperimentConfig& cfg) {
    const auto& st = cfg.study;
    const ReducedScenario red = reduced(cfg);
    const ValueField f = solve_hjb(red, st.grid, st.hjb_eps, cfg.solver.workers);
    const GridSpec cg = coarsen(st.grid);
    const bool use_coarse = cg.x_nodes != st.grid.x_nodes;
    std::optional<ValueField> coarse;
    if (use_coarse) coarse = solve_hjb(red, cg, f.eps, cfg.solver.workers);
    const auto rows = compare_mc(f, red, st.family, st.points, cfg.solver, coarse ? &*coarse : nullptr);
    auto head = point_head(cfg.scenario.d);
    append(head, {"comparable", "v_grid", "v_mc", "v_mc_se", "grid_error", "mc_error", "family_bias", "budget",
                  "discrepancy", "pass", "reason"});
    Csv csv(head);
    std::size_t comparable = 0, pass = 0;
    for (const auto& r : rows) {
        csv.cell(r.point.s).vec(r.point.x).vec(r.point.y).cell(r.comparable).cell(r.v_grid).cell(r.v_mc).cell(r.se);
        csv.cell(r.grid_error).cell(r.mc_error).cell(r.family_bias).cell(r.budget).cell(r.discrepancy).cell(r.pass);
        csv.cell(r.reason);
        csv.end();
        if (r.comparable) {
            ++comparable;
            if (r.pass) ++pass;
        }
    }
    Json j = field_json(f);
    j["coarse_field"] = use_coarse;
    j["comparable"] = comparable;
    j["pass"] = pass;
    j["all_pass"] = comparable > 0 && pass == comparable;
    return {csv.str(), j,
            summary_line(cfg.id, "compare",
                         std::to_string(pass) + "/" + std::to_string(comparable) + " comparable points within budget")};
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    out << bytes;
    if (!out.flush()) throw ConfigError("write failed for '" + path.string() + "'");
}

std::string resolve_out_dir(const RunOptions& opts, const ExperimentConfig& cfg) {
    if (!opts.out_dir.empty()) return opts.out_dir;
    if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
    if (!cfg.output_dir.empty()) return cfg.output_dir;
    return "out";
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw StateError("sha256: digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xf];
    }
    return out;
}

StudyOutput run_study(const ExperimentConfig& cfg) {
    const std::string& k = cfg.study.kind;
    if (k == "simulate") return simulate(cfg);
    if (k == "moments") return moments(cfg);
    if (k == "dependence") return dependence(cfg);
    if (k == "cauchy-rate") return cauchy(cfg);
    if (k == "cost") return cost(cfg);
    if (k == "value") return value(cfg);
    if (k == "dpp") return dpp(cfg);
    if (k == "regularity") return regularity(cfg);
    if (k == "gap") return gap(cfg);
    if (k == "hjb") return hjb(cfg);
    if (k == "viscosity-probe") return viscosity(cfg);
    if (k == "compare") return compare(cfg);
    throw ConfigError("study.kind: unknown study '" + k + "'");
}

int run(const std::string& config_path, const RunOptions& opts, std::ostream& out, std::ostream& err) {
    try {
        const std::string text = read_file(config_path);
        Json doc = Json::parse(text, nullptr, false);
        if (doc.is_discarded()) throw ConfigError("'" + config_path + "' is not valid JSON");
        doc = apply_overrides(std::move(doc), opts.overrides);
        ExperimentConfig cfg = load_config(doc);
        if (opts.workers) {
            if (*opts.workers < 1) throw ConfigError("--workers: must be >= 1");
            cfg.solver.workers = *opts.workers;
        }

        StudyOutput res = run_study(cfg);
        const fs::path dir = fs::path(resolve_out_dir(opts, cfg)) / cfg.id;
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw ConfigError("cannot create output directory '" + dir.string() + "': " + ec.message());

        const std::string csv_name = cfg.study.kind + ".csv";
        const std::string json_name = cfg.study.kind + ".json";
        const std::string json_text = res.summary.dump(2) + "\n";
        write_file(dir / csv_name, res.csv);
        write_file(dir / json_name, json_text);

        Json manifest{{"id", cfg.id},
                      {"study", cfg.study.kind},
                      {"seed", cfg.solver.seed},
                      {"config", cfg.resolved},
                      {"artifacts",
                       Json::array({{{"file", csv_name}, {"bytes", res.csv.size()}, {"sha256", sha256_hex(res.csv)}},
                                    {{"file", json_name}, {"bytes", json_text.size()}, {"sha256", sha256_hex(json_text)}}})}};
        write_file(dir / "manifest.json", manifest.dump(2) + "\n");
        out << res.line << '\n';
        return 0;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << '\n';
        return 3;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace sdvi
