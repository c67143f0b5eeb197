// Command-line front end: curve solve|analyze, build, verify, export.
//
// Exit codes: 0 success / all verdicts pass, 1 a verdict failed, 2 invalid input,
// 3 inconclusive, 4 numerical failure.

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hminlag/geoverify.hpp"
#include "hminlag/io.hpp"
#include "hminlag/legendre_curves.hpp"
#include "hminlag/numerics.hpp"

namespace {

using namespace hminlag;
using io::json;

enum Exit { kOk = 0, kFail = 1, kInvalid = 2, kInconclusive = 3, kNumerical = 4 };

int exit_code_for(const Error& e) {
    if (dynamic_cast<const InconclusiveError*>(&e)) return kInconclusive;
    if (dynamic_cast<const IntegrationError*>(&e) || dynamic_cast<const QuadratureError*>(&e) ||
        dynamic_cast<const NumericalQualityError*>(&e))
        return kNumerical;
    return kInvalid;
}

void emit_error(const std::string& kind, const std::string& message, int code, const std::string& factor = {}) {
    json j{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}};
    if (!factor.empty()) j["error"]["factor"] = factor;
    std::cerr << j.dump() << '\n';
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
    } else {
        auto out = open_out(path);
        out << text;
    }
}

json load_config(const std::string& path) { return path.empty() ? json::object() : io::read_json_file(path); }

template <class T>
void overlay(json& cfg, const std::string& key, const CLI::Option* opt, const T& v) {
    if (opt->count() > 0) cfg[key] = v;
}

// --------------------------------------------------------------------------
// curve solve

struct CurveFlags {
    std::string config, ambient, csv, summary;
    int n1 = 1, n2 = 1;
    double mu = 0, theta = 0, rho = 0, t_begin = 0, t_end = 20, step = 1e-3;
    std::vector<CLI::Option*> opts;
};

void add_curve_flags(CLI::App* app, CurveFlags& f) {
    app->add_option("--config", f.config, "JSON config file");
    f.opts = {app->add_option("--ambient", f.ambient, "sphere | ads"),
              app->add_option("--n1", f.n1, "first block dimension"),
              app->add_option("--n2", f.n2, "second block dimension"),
              app->add_option("--mu", f.mu, "angle rate mu"),
              app->add_option("--theta", f.theta, "sphere initial angle in (0, pi/2)"),
              app->add_option("--rho", f.rho, "anti-De Sitter initial parameter > 0"),
              app->add_option("--t-begin", f.t_begin, "start time (<= 0)"),
              app->add_option("--t-end", f.t_end, "end time"),
              app->add_option("--step", f.step, "RK4 step")};
}

void overlay_curve(json& cfg, const CurveFlags& f) {
    overlay(cfg, "ambient", f.opts[0], f.ambient);
    overlay(cfg, "n1", f.opts[1], f.n1);
    overlay(cfg, "n2", f.opts[2], f.n2);
    overlay(cfg, "mu", f.opts[3], f.mu);
    overlay(cfg, "theta", f.opts[4], f.theta);
    overlay(cfg, "rho", f.opts[5], f.rho);
    overlay(cfg, "t_begin", f.opts[6], f.t_begin);
    overlay(cfg, "t_end", f.opts[7], f.t_end);
    overlay(cfg, "step", f.opts[8], f.step);
}

json spec_json(const CurveSpec& s) {
    json j{{"ambient", s.is_sphere() ? "sphere" : "ads"}, {"n1", s.n1}, {"n2", s.n2}, {"mu", s.mu}};
    if (s.is_sphere()) j["theta"] = std::atan2(std::abs(s.init[1]), std::abs(s.init[0]));
    else j["rho"] = std::asinh(std::abs(s.init[0]));
    return j;
}

json trajectory_summary(const CurveTrajectory& tr) {
    const auto& s = tr.spec();
    json j;
    j["spec"] = spec_json(s);
    j["t_begin"] = tr.t_begin();
    j["t_end"] = tr.t_end();
    j["step"] = tr.step();
    j["n_nodes"] = tr.size();
    json d;
    d["quadric"] = quadric_drift(tr);
    d["legendre"] = legendre_residual(tr);
    d["gauge"] = gauge_residual(tr);
    d["angle_linearity"] = angle_linearity_drift(tr);
    d["polar_consistency"] = polar_consistency(tr);
    if (s.mu == 0.0) d["first_integral"] = first_integral_drift(tr);
    if (s.has_real_init() && tr.origin_index() > 0) d["time_symmetry"] = time_symmetry_residual(tr);
    j["drifts"] = d;
    j["richardson_error"] = tr.richardson_error();
    const CPair& y = tr.values().back();
    j["terminal_state"] = {y[0].real(), y[0].imag(), y[1].real(), y[1].imag()};
    return j;
}

int cmd_curve_solve(const CurveFlags& f) {
    json cfg = load_config(f.config);
    io::require_object(cfg, "config");
    overlay_curve(cfg, f);
    std::string csv = "trajectory.csv", summary;
    if (cfg.contains("csv")) csv = cfg["csv"].get<std::string>();
    if (cfg.contains("summary")) summary = cfg["summary"].get<std::string>();
    if (!f.csv.empty()) csv = f.csv;
    if (!f.summary.empty()) summary = f.summary;
    cfg.erase("csv");
    cfg.erase("summary");
    const io::CurveRun run = io::parse_curve_run(cfg);
    const CurveTrajectory tr = integrate(run.spec, run.t_begin, run.t_end, run.step);
    {
        auto out = open_out(csv);
        write_trajectory_csv(out, tr);
    }
    json sum = trajectory_summary(tr);
    sum["csv"] = csv;
    write_text(summary, sum.dump(2) + "\n");
    return kOk;
}

// --------------------------------------------------------------------------
// curve analyze

struct AnalyzeFlags {
    CurveFlags curve;
    std::string theta_grid, out;
    std::int64_t q_max = 64;
    double tol = 1e-7;
    CLI::Option* q_opt = nullptr;
    CLI::Option* tol_opt = nullptr;
    CLI::Option* grid_opt = nullptr;
};

struct Analysis {
    PeriodReport rep;
    ProjectedPeriodicity proj;
    double t_end = 0.0;
};

/// Integrates from 0 and extends t_end (doubling) until a full modulus period is found.
Analysis analyze_spec(const CurveSpec& spec, double step, std::optional<double> t_end, std::int64_t q_max, double tol) {
    double te = t_end.value_or(40.0);
    constexpr double kMaxAuto = 640.0;
    for (;;) {
        try {
            const CurveTrajectory tr = integrate(spec, 0.0, te, step);
            Analysis a;
            a.rep = analyze_period(tr, q_max, tol);
            a.proj = projected_periodicity(tr, a.rep);
            a.t_end = te;
            return a;
        } catch (const InconclusiveError&) {
            if (t_end || te >= kMaxAuto) throw;
            te *= 2.0;
        }
    }
}

std::vector<double> parse_theta_grid(const std::string& s) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string tok;
    std::vector<double> parts;
    while (std::getline(ss, tok, ':')) {
        try {
            std::size_t used = 0;
            parts.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ConfigError("theta grid must be a:b:c");
        }
    }
    if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0]) throw ConfigError("theta grid must be a:b:c with a <= b, c > 0");
    const auto n = static_cast<std::size_t>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9)) + 1;
    for (std::size_t k = 0; k < n; ++k) v.push_back(parts[0] + static_cast<double>(k) * parts[2]);
    return v;
}

std::string cert_cols(const std::optional<Rational>& c) {
    return c ? std::to_string(c->p) + "," + std::to_string(c->q) : std::string(",");
}

int cmd_curve_analyze(const AnalyzeFlags& f, unsigned jobs) {
    json cfg = load_config(f.curve.config);
    io::require_object(cfg, "config");
    overlay_curve(cfg, f.curve);
    overlay(cfg, "q_max", f.q_opt, f.q_max);
    overlay(cfg, "tol", f.tol_opt, f.tol);
    overlay(cfg, "theta_grid", f.grid_opt, f.theta_grid);
    std::string out = f.out;
    if (out.empty() && cfg.contains("out")) out = cfg["out"].get<std::string>();
    const auto q_max = io::get_or<std::int64_t>(cfg, "q_max", 64);
    const double tol = io::get_or<double>(cfg, "tol", 1e-7);
    const std::string grid = io::get_or<std::string>(cfg, "theta_grid", "");
    const std::optional<double> t_end = cfg.contains("t_end") ? std::optional(cfg["t_end"].get<double>()) : std::nullopt;
    for (const char* k : {"q_max", "tol", "theta_grid", "out"}) cfg.erase(k);
    if (!grid.empty() && !cfg.contains("theta")) cfg["theta"] = 0.5;
    const io::CurveRun run = io::parse_curve_run(cfg);
    if (!run.spec.is_sphere() || run.spec.mu != 0.0) throw ConfigError("curve analyze needs a sphere spec with mu = 0");

    if (grid.empty()) {
        const Analysis a = analyze_spec(run.spec, run.step, t_end, q_max, tol);
        json j = io::to_json(a.rep);
        j["spec"] = spec_json(run.spec);
        j["t_end"] = a.t_end;
        j["projected_periodicity"] = io::to_json(a.proj);
        write_text(out, j.dump(2) + "\n");
        return kOk;
    }

    const std::vector<double> thetas = parse_theta_grid(grid);
    std::vector<std::string> rows(thetas.size());
    parallel_for(thetas.size(), jobs, [&](std::size_t k) {
        std::ostringstream row;
        row << io::fmt17(thetas[k]) << ',';
        try {
            const CurveSpec spec = CurveSpec::sphere(run.spec.n1, run.spec.n2, 0.0, thetas[k]);
            const Analysis a = analyze_spec(spec, run.step, t_end, q_max, tol);
            const auto& r = a.rep;
            auto num = [](double x) { return std::isfinite(x) ? io::fmt17(x) : std::string(); };
            row << "ok," << (r.degenerate ? 1 : 0) << ',' << num(r.period) << ',' << num(r.rot1) << ',' << num(r.rot2) << ','
                << num(r.gamma_rot) << ',' << cert_cols(r.cert1) << ',' << cert_cols(r.cert2) << ',' << cert_cols(r.cert_gamma)
                << ',' << (r.closed_curve ? 1 : 0) << ',' << (r.projected_periodic ? 1 : 0) << ',' << a.proj.m;
        } catch (const Error& e) {
            row << e.kind() << ",,,,,,,,,,,,,,";
        }
        rows[k] = row.str();
    });
    std::ostringstream os;
    os << "theta,status,degenerate,T,rot1,rot2,gamma_rot,rot1_p,rot1_q,rot2_p,rot2_q,gamma_p,gamma_q,closed_curve,"
          "projected_periodic,projected_m\n";
    for (const auto& r : rows) os << r << '\n';
    write_text(out, os.str());
    return kOk;
}

// --------------------------------------------------------------------------
// build / verify / export share the immersion source

json immersion_source(const json& cfg) {
    if (cfg.contains("immersion") && cfg.contains("bundle")) throw ConfigError("give either 'immersion' or 'bundle', not both");
    if (cfg.contains("immersion")) return cfg.at("immersion");
    if (cfg.contains("bundle")) {
        const json d = io::read_json_file(cfg.at("bundle").get<std::string>());
        if (!d.contains("immersion")) throw ConfigError("bundle descriptor has no 'immersion' entry");
        return d.at("immersion");
    }
    throw ConfigError("missing 'immersion' or 'bundle'");
}

struct BuildFlags {
    std::string config, descriptor, samples;
};

int cmd_build(const BuildFlags& f) {
    json cfg = load_config(f.config);
    io::check_keys(cfg, "build config", {"immersion", "grid", "descriptor", "samples"});
    const io::BuiltImmersion b = io::build_immersion(immersion_source(cfg));
    const Grid grid = io::parse_grid(cfg.value("grid", json::object()), b.imm);
    for (const auto& p : grid.points) b.imm.check_regular(p);
    const std::string desc = !f.descriptor.empty() ? f.descriptor : io::get_or<std::string>(cfg, "descriptor", "bundle.json");
    const std::string samples = !f.samples.empty() ? f.samples : io::get_or<std::string>(cfg, "samples", "samples.csv");
    {
        auto out = open_out(samples);
        io::write_samples_csv(out, b.imm, grid);
    }
    json d = io::descriptor(b, grid);
    d["grid"] = cfg.value("grid", json::object());
    d["samples"] = samples;
    write_text(desc, d.dump(2) + "\n");
    return kOk;
}

struct VerifyFlags {
    std::string config, bundle, checks, out;
    double h = 1e-3;
    int order = 2;
    bool quotient_check = false;
    std::size_t samples = 10000;
    std::uint64_t seed = 0;
    CLI::Option* h_opt = nullptr;
    CLI::Option* order_opt = nullptr;
    CLI::Option* samples_opt = nullptr;
};

const std::set<std::string> kLocalChecks{"pullback", "metric", "angle", "mean_curvature", "gradient", "cminimal", "cone_transfer"};

int cmd_verify(const VerifyFlags& f, unsigned jobs, const CLI::Option* seed_opt) {
    json cfg = load_config(f.config);
    io::check_keys(cfg, "verify config",
                   {"immersion", "bundle", "grid", "h", "order", "checks", "quotient_check", "embedding", "tolerances", "out"});
    if (!f.bundle.empty()) {
        cfg.erase("immersion");
        cfg["bundle"] = f.bundle;
    }
    overlay(cfg, "h", f.h_opt, f.h);
    overlay(cfg, "order", f.order_opt, f.order);
    if (f.quotient_check) cfg["quotient_check"] = true;
    if (!f.checks.empty()) {
        std::vector<std::string> v;
        std::stringstream ss(f.checks);
        std::string tok;
        while (std::getline(ss, tok, ',')) v.push_back(tok);
        cfg["checks"] = v;
    }
    const io::BuiltImmersion b = io::build_immersion(immersion_source(cfg));
    const Grid grid = io::parse_grid(cfg.value("grid", json::object()), b.imm);

    VerifyOptions vo;
    vo.h = io::get_or<double>(cfg, "h", 1e-3);
    vo.order = io::get_or<int>(cfg, "order", 2);
    vo.jobs = jobs;
    if (!(vo.h > 0.0)) throw ConfigError("h must be positive");
    if (vo.order != 2 && vo.order != 4) throw ConfigError("order must be 2 or 4");

    std::set<std::string> checks;
    for (const auto& c : io::get_or<std::vector<std::string>>(cfg, "checks", {"all"})) {
        if (c == "all") checks.insert(kLocalChecks.begin(), kLocalChecks.end());
        else if (kLocalChecks.count(c) || c == "embedding") checks.insert(c);
        else throw ConfigError("unknown check '" + c + "'");
    }
    const bool quotient = io::get_or<bool>(cfg, "quotient_check", false) || checks.count("embedding");
    if (quotient) checks.insert("embedding");

    const auto& imm = b.imm;
    VerificationReport rep;
    if (checks.count("pullback")) rep.merge(pullback_residuals(imm, grid, vo));
    if (checks.count("metric") && (imm.is_product() || imm.is_cone())) rep.merge(induced_metric_check(imm, grid, vo));
    if (checks.count("angle")) rep.merge(angle_field(imm, grid, vo).report);
    if (checks.count("mean_curvature")) rep.merge(mean_curvature_check(imm, grid, vo));
    if (checks.count("gradient")) rep.merge(gradient_identity_check(imm, grid, vo));
    if (checks.count("cminimal")) rep.merge(cminimality_residual(imm, grid, vo));
    if (checks.count("cone_transfer") && imm.is_cone()) {
        Grid link;
        for (const auto& x : grid.points) {
            RVec p(x.begin() + 1, x.end());
            if (std::find(link.points.begin(), link.points.end(), p) == link.points.end()) link.points.push_back(p);
        }
        rep.merge(cone_transfer_check(imm, link, vo));
    }
    if (checks.count("embedding")) {
        if (!b.quotient) throw ConfigError("embedding check needs a 'quotient' in the immersion config");
        EmbeddingOptions eo;
        const json ej = cfg.value("embedding", json::object());
        io::check_keys(ej, "embedding", {"samples", "seed"});
        eo.samples = io::get_or<std::size_t>(ej, "samples", eo.samples);
        eo.seed = io::get_or<std::uint64_t>(ej, "seed", eo.seed);
        if (f.samples_opt->count()) eo.samples = f.samples;
        if (seed_opt->count()) eo.seed = f.seed;
        rep.merge(embedding_check(imm, quotient_action(*b.quotient), eo));
    }
    if (cfg.contains("tolerances")) {
        const json& tj = cfg.at("tolerances");
        io::require_object(tj, "tolerances");
        for (const auto& [name, v] : tj.items()) {
            if (!rep.residuals.count(name)) throw ConfigError("tolerance override for residual '" + name + "' which was not computed");
            const double t = v.get<double>();
            rep.tolerances[name] = t;
            if (rep.verdicts[name] != Verdict::Inconclusive)
                rep.verdicts[name] = rep.residuals[name].max <= t ? Verdict::Pass : Verdict::Fail;
            rep.notes.push_back("tolerance for '" + name + "' overridden by config");
        }
    }
    rep.meta["kind"] = to_string(imm.kind);
    rep.meta_numbers["h"] = vo.h;
    json j = io::to_json(rep);
    j["meta"]["order"] = vo.order;
    j["meta"]["grid_points"] = grid.size();
    j["meta"]["tolerance_model"] = "C*h^2 + 20*eps/h^k; C calibrated on geodesic-block products";
    j["meta"]["exit_code"] = rep.exit_code();
    const std::string out = !f.out.empty() ? f.out : io::get_or<std::string>(cfg, "out", "");
    write_text(out, j.dump(2) + "\n");
    return rep.exit_code();
}

// --------------------------------------------------------------------------
// export

struct ExportFlags {
    std::string config, bundle, format, out;
};

void write_obj(std::ostream& os, const GeometricImmersion& imm, const std::vector<int>& axes, const std::vector<int>& counts,
               const Box& box, const RVec& base, const std::vector<int>& coords) {
    std::array<bool, 2> wrap{};
    std::array<std::vector<double>, 2> vals;
    for (int a = 0; a < 2; ++a) {
        const int ax = axes[a];
        const auto [lo, hi] = box[ax];
        const bool periodic = std::find(imm.periodic_axes.begin(), imm.periodic_axes.end(), ax) != imm.periodic_axes.end();
        wrap[a] = periodic && std::abs((hi - lo) - 2.0 * kPi) < 1e-12;
        const int n = counts[a];
        for (int k = 0; k < n; ++k) {
            const double frac = wrap[a] ? double(k) / n : (n == 1 ? 0.5 : double(k) / (n - 1));
            vals[a].push_back(lo + frac * (hi - lo));
        }
    }
    RVec x = base;
    for (double u : vals[0]) {
        for (double v : vals[1]) {
            x[axes[0]] = u;
            x[axes[1]] = v;
            const CVec z = imm(x);
            os << 'v';
            for (int c : coords) os << ' ' << io::fmt17(c % 2 == 0 ? z[c / 2].real() : z[c / 2].imag());
            os << '\n';
        }
    }
    const int n0 = counts[0], n1 = counts[1];
    auto id = [&](int i, int j) { return (i % n0) * n1 + (j % n1) + 1; };
    const int i_end = wrap[0] ? n0 : n0 - 1, j_end = wrap[1] ? n1 : n1 - 1;
    for (int i = 0; i < i_end; ++i) {
        for (int j = 0; j < j_end; ++j) {
            os << "f " << id(i, j) << ' ' << id(i + 1, j) << ' ' << id(i + 1, j + 1) << '\n';
            os << "f " << id(i, j) << ' ' << id(i + 1, j + 1) << ' ' << id(i, j + 1) << '\n';
        }
    }
}

int cmd_export(const ExportFlags& f) {
    json cfg = load_config(f.config);
    io::check_keys(cfg, "export config", {"immersion", "bundle", "curve", "slice", "coords", "format", "out"});
    if (!f.bundle.empty()) {
        cfg.erase("immersion");
        cfg["bundle"] = f.bundle;
    }
    if (!f.format.empty()) cfg["format"] = f.format;
    const std::string format = io::get_or<std::string>(cfg, "format", "csv");
    if (format != "csv" && format != "obj") throw ConfigError("format must be 'csv' or 'obj'");
    const std::string out = !f.out.empty() ? f.out : io::get_or<std::string>(cfg, "out", "");

    if (cfg.contains("curve")) {
        if (format != "csv") throw ConfigError("curve traces export as CSV");
        const io::CurveRun run = io::parse_curve_run(cfg.at("curve"));
        std::ostringstream os;
        write_trajectory_csv(os, integrate(run.spec, run.t_begin, run.t_end, run.step));
        write_text(out, os.str());
        return kOk;
    }

    const io::BuiltImmersion b = io::build_immersion(immersion_source(cfg));
    const auto& imm = b.imm;
    const int m = imm.dim();
    if (!cfg.contains("slice")) throw ConfigError("slice underspecified: missing 'slice'");
    const json& sj = cfg.at("slice");
    io::check_keys(sj, "slice", {"axes", "counts", "point", "box"});
    if (!sj.contains("axes") || !sj.contains("counts")) throw ConfigError("slice underspecified: need 'axes' and 'counts'");
    const auto axes = io::get_or<std::vector<int>>(sj, "axes", {});
    const auto counts = io::get_or<std::vector<int>>(sj, "counts", {});
    if (axes.empty() || axes.size() != counts.size()) throw ConfigError("slice underspecified: one count per axis");
    for (std::size_t a = 0; a < axes.size(); ++a) {
        if (axes[a] < 0 || axes[a] >= m) throw ConfigError("slice axis out of range");
        if (counts[a] < 2) throw ConfigError("slice counts must be >= 2");
        for (std::size_t b2 = 0; b2 < a; ++b2)
            if (axes[a] == axes[b2]) throw ConfigError("slice axes repeat");
    }
    Box box = imm.box;
    if (sj.contains("box")) {
        box.clear();
        for (const auto& r : sj.at("box")) {
            const auto v = r.get<std::vector<double>>();
            if (v.size() != 2) throw ConfigError("slice box entries must be [a, b]");
            box.emplace_back(v[0], v[1]);
        }
        if (box.size() != static_cast<std::size_t>(m)) throw ConfigError("slice box must cover every chart axis");
    }
    RVec base(m);
    for (int i = 0; i < m; ++i) base[i] = 0.5 * (box[i].first + box[i].second);
    if (sj.contains("point")) {
        base = io::get_or<RVec>(sj, "point", base);
        if (base.size() != static_cast<std::size_t>(m)) throw ConfigError("slice point must give every chart coordinate");
    }

    if (format == "obj") {
        if (axes.size() != 2) throw ConfigError("OBJ requires a 2-dimensional slice");
        const auto coords = io::get_or<std::vector<int>>(cfg, "coords", {0, 1, 2});
        if (coords.size() != 3) throw ConfigError("OBJ needs exactly 3 coordinate indices");
        for (int c : coords)
            if (c < 0 || c >= 2 * static_cast<int>(imm.ambient.dim_complex)) throw ConfigError("coordinate index out of range");
        std::ostringstream os;
        write_obj(os, imm, axes, counts, box, base, coords);
        write_text(out, os.str());
        return kOk;
    }

    Box sub;
    std::vector<int> sub_counts;
    for (std::size_t a = 0; a < axes.size(); ++a) {
        sub.push_back(box[axes[a]]);
        sub_counts.push_back(counts[a]);
    }
    const Grid g = tensor_grid(sub, sub_counts);
    Grid full;
    for (const auto& p : g.points) {
        RVec x = base;
        for (std::size_t a = 0; a < axes.size(); ++a) x[axes[a]] = p[a];
        full.points.push_back(std::move(x));
    }
    std::ostringstream os;
    io::write_samples_csv(os, imm, full);
    write_text(out, os.str());
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"H-minimal Lagrangian and C-minimal Legendrian immersions"};
    app.require_subcommand(1);
    unsigned jobs = 1;
    std::uint64_t seed = 0;
    app.add_option("--jobs", jobs, "worker threads")->check(CLI::Range(1u, 1024u));
    auto* seed_opt = app.add_option("--seed", seed, "random seed for sampled checks (default 0)");

    auto* curve = app.add_subcommand("curve", "Legendre curves");
    curve->require_subcommand(1);
    CurveFlags solve_flags;
    auto* solve = curve->add_subcommand("solve", "integrate a Legendre curve");
    add_curve_flags(solve, solve_flags);
    solve->add_option("--csv", solve_flags.csv, "trajectory CSV path (default trajectory.csv)");
    solve->add_option("--summary", solve_flags.summary, "summary JSON path (default stdout)");

    AnalyzeFlags an;
    auto* analyze = curve->add_subcommand("analyze", "period, rotation numbers and closedness");
    add_curve_flags(analyze, an.curve);
    an.q_opt = analyze->add_option("--q-max", an.q_max, "largest certificate denominator");
    an.tol_opt = analyze->add_option("--tol", an.tol, "certificate tolerance");
    an.grid_opt = analyze->add_option("--theta-grid", an.theta_grid, "sweep a:b:c, CSV output");
    analyze->add_option("--out", an.out, "output path (default stdout)");

    BuildFlags bf;
    auto* build = app.add_subcommand("build", "build an immersion bundle");
    build->add_option("--config", bf.config, "JSON config file")->required();
    build->add_option("--descriptor", bf.descriptor, "descriptor JSON path");
    build->add_option("--samples", bf.samples, "sample CSV path");

    VerifyFlags vf;
    auto* verify = app.add_subcommand("verify", "run the verification suite");
    verify->set_help_flag("--help", "print this help message and exit");
    verify->add_option("--config", vf.config, "JSON config file");
    verify->add_option("--bundle", vf.bundle, "bundle descriptor from build");
    vf.h_opt = verify->add_option("--h", vf.h, "finite-difference step");
    vf.order_opt = verify->add_option("--order", vf.order, "stencil order (2 or 4)");
    verify->add_option("--checks", vf.checks, "comma-separated checks or 'all'");
    verify->add_flag("--quotient-check", vf.quotient_check, "include the embedding checks");
    vf.samples_opt = verify->add_option("--samples", vf.samples, "embedding samples");
    verify->add_option("--out", vf.out, "report path (default stdout)");

    ExportFlags ef;
    auto* exp = app.add_subcommand("export", "export OBJ or CSV");
    exp->add_option("--config", ef.config, "JSON config file");
    exp->add_option("--bundle", ef.bundle, "bundle descriptor from build");
    exp->add_option("--format", ef.format, "obj | csv");
    exp->add_option("--out", ef.out, "output path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        emit_error("usage", e.what(), kInvalid);
        return kInvalid;
    }

    vf.seed = seed;
    try {
        if (*curve) {
            if (*solve) return cmd_curve_solve(solve_flags);
            return cmd_curve_analyze(an, jobs);
        }
        if (*build) return cmd_build(bf);
        if (*verify) return cmd_verify(vf, jobs, seed_opt);
        if (*exp) return cmd_export(ef);
    } catch (const SingularPointError& e) {
        emit_error(e.kind(), e.what(), kInvalid, e.factor());
        return kInvalid;
    } catch (const Error& e) {
        const int code = exit_code_for(e);
        emit_error(e.kind(), e.what(), code);
        return code;
    } catch (const io::json::exception& e) {
        emit_error("config", e.what(), kInvalid);
        return kInvalid;
    } catch (const std::exception& e) {
        emit_error("internal", e.what(), kNumerical);
        return kNumerical;
    }
    return kOk;
}
