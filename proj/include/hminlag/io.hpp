#pragma once

// JSON configuration (strict schemas) and serialization of reports, descriptors
// and sampled grids.

#include "json.hpp"

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "geoverify.hpp"
#include "immersion.hpp"
#include "legendre_curves.hpp"

namespace hminlag::io {

using nlohmann::json;

inline std::string fmt17(double x) {
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

inline void require_object(const json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
}

/// Rejects keys outside `allowed`.
inline void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
    require_object(j, where);
    for (const auto& [k, v] : j.items()) {
        if (!allowed.count(k)) throw ConfigError("unknown field '" + k + "' in " + where);
    }
}

template <class T>
T get_or(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("field '" + key + "': " + e.what());
    }
}

template <class T>
T get_required(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError("missing field '" + key + "' in " + where);
    return get_or<T>(j, key, T{});
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("invalid JSON in '" + path + "': " + e.what());
    }
}

// --------------------------------------------------------------------------
// Curve specs

/// {"ambient": "sphere"|"ads", "n1", "n2", "mu", "theta" | "rho", "t_begin", "t_end", "step"}
struct CurveRun {
    CurveSpec spec;
    double t_begin = 0.0;
    double t_end = 20.0;
    double step = 1e-3;
};

inline const std::set<std::string> kCurveRunKeys{"ambient", "n1", "n2", "mu", "theta", "rho", "t_begin", "t_end", "step"};

inline CurveRun parse_curve_run(const json& j) {
    check_keys(j, "curve", kCurveRunKeys);
    CurveRun r;
    const std::string amb = get_or<std::string>(j, "ambient", "sphere");
    const int n1 = get_or<int>(j, "n1", 1), n2 = get_or<int>(j, "n2", 1);
    const double mu = get_or<double>(j, "mu", 0.0);
    if (amb == "sphere") {
        if (j.contains("rho")) throw ConfigError("'rho' is only valid for the ads ambient");
        r.spec = CurveSpec::sphere(n1, n2, mu, get_required<double>(j, "theta", "curve"));
    } else if (amb == "ads") {
        if (j.contains("theta")) throw ConfigError("'theta' is only valid for the sphere ambient");
        r.spec = CurveSpec::ads(n1, n2, mu, get_required<double>(j, "rho", "curve"));
    } else {
        throw ConfigError("ambient must be 'sphere' or 'ads'");
    }
    r.t_begin = get_or<double>(j, "t_begin", 0.0);
    r.t_end = get_or<double>(j, "t_end", 20.0);
    r.step = get_or<double>(j, "step", 1e-3);
    return r;
}

// --------------------------------------------------------------------------
// Immersion configs
//
// {
//   "kind": "ProductSphere"|"ProductAdS"|"Cone"|"ProjectedCP"|"ProjectedCH",
//   "n1": int, "n2": int,
//   "curve": {"family": "ode"|"gamma_delta"|"alpha_rho"|"quadrature"|"twisted_great_circle", ...},
//   "blocks": [{"type": "geodesic_sphere"|"geodesic_hyperbolic"|"point"|"product", "n", "axis", "sign",
//               "immersion": {...}}, {...}],
//   "quotient": "Z2xZ2_sphere"|"Z2_hyperbolic",
//   "s_range": [a, b], "r_range": [a, b]
// }

inline const std::set<std::string> kImmersionKeys{"kind", "n1", "n2", "curve", "blocks", "quotient", "s_range", "r_range"};
inline const std::set<std::string> kCurveKeys{"family", "delta", "rho", "theta", "mu", "t_begin", "t_end", "step", "k", "rotation"};
inline const std::set<std::string> kBlockKeys{"type", "n", "axis", "sign", "immersion"};

struct BuiltImmersion {
    GeometricImmersion imm;
    std::optional<QuotientKind> quotient;
    json config;
};

inline ImmersionKind parse_kind(const std::string& s) {
    if (s == "ProductSphere") return ImmersionKind::ProductSphere;
    if (s == "ProductAdS") return ImmersionKind::ProductAdS;
    if (s == "Cone") return ImmersionKind::Cone;
    if (s == "ProjectedCP") return ImmersionKind::ProjectedCP;
    if (s == "ProjectedCH") return ImmersionKind::ProjectedCH;
    throw ConfigError("unknown immersion kind '" + s + "'");
}

inline std::pair<double, double> parse_range(const json& j, const std::string& key, std::pair<double, double> fallback) {
    if (!j.contains(key)) return fallback;
    const auto v = get_or<std::vector<double>>(j, key, {});
    if (v.size() != 2 || !(v[0] < v[1])) throw ConfigError("'" + key + "' must be [a, b] with a < b");
    return {v[0], v[1]};
}

BuiltImmersion build_immersion(const json& cfg);

inline LegendrianBlock parse_block(const json& j, bool hyperbolic_slot) {
    check_keys(j, "block", kBlockKeys);
    const std::string type = get_required<std::string>(j, "type", "block");
    if (type == "point") return point_block(hyperbolic_slot ? SignatureKind::Lorentzian : SignatureKind::Definite);
    if (type == "geodesic_sphere") {
        if (hyperbolic_slot) throw ConfigError("the second block of an anti-De Sitter product must be hyperbolic");
        return geodesic_sphere_block(get_required<int>(j, "n", "block"), get_or<int>(j, "axis", -1), get_or<int>(j, "sign", 1));
    }
    if (type == "geodesic_hyperbolic") {
        if (!hyperbolic_slot) throw ConfigError("hyperbolic blocks are only valid as the second block of an anti-De Sitter product");
        return geodesic_hyperbolic_block(get_required<int>(j, "n", "block"));
    }
    if (type == "product") {
        if (!j.contains("immersion")) throw ConfigError("product block needs an 'immersion'");
        return as_block(build_immersion(j.at("immersion")).imm);
    }
    throw ConfigError("unknown block type '" + type + "'");
}

inline LegendreCurve parse_curve(const json& j, bool sphere, int n1, int n2, std::shared_ptr<const CurveTrajectory>* keep) {
    check_keys(j, "curve", kCurveKeys);
    const std::string fam = get_required<std::string>(j, "family", "curve");
    LegendreCurve c;
    if (fam == "gamma_delta") {
        if (!sphere) throw ConfigError("gamma_delta is a sphere curve");
        c = gamma_delta_curve(get_required<double>(j, "delta", "curve"), n1, n2);
    } else if (fam == "alpha_rho") {
        if (sphere) throw ConfigError("alpha_rho is an anti-De Sitter curve");
        c = alpha_rho_curve(get_required<double>(j, "rho", "curve"), n1, n2);
    } else if (fam == "quadrature") {
        if (sphere) throw ConfigError("quadrature curves are anti-De Sitter curves");
        c = quadrature_curve(get_required<double>(j, "rho", "curve"), n1, n2);
    } else if (fam == "twisted_great_circle") {
        if (!sphere || n1 != 1 || n2 != 1) throw ConfigError("twisted_great_circle needs a sphere product with n1 = n2 = 1");
        c = twisted_great_circle(get_or<double>(j, "k", 1.0));
    } else if (fam == "ode") {
        const double mu = get_or<double>(j, "mu", 0.0);
        const CurveSpec spec = sphere ? CurveSpec::sphere(n1, n2, mu, get_required<double>(j, "theta", "curve"))
                                      : CurveSpec::ads(n1, n2, mu, get_required<double>(j, "rho", "curve"));
        auto tr = std::make_shared<const CurveTrajectory>(
            integrate(spec, get_or<double>(j, "t_begin", -2.0), get_or<double>(j, "t_end", 2.0), get_or<double>(j, "step", 1e-3)));
        if (keep) *keep = tr;
        c = trajectory_curve(tr);
    } else {
        throw ConfigError("unknown curve family '" + fam + "'");
    }
    if (j.contains("rotation")) c = rotated(c, get_or<double>(j, "rotation", 0.0));
    return c;
}

inline BuiltImmersion build_immersion(const json& cfg) {
    check_keys(cfg, "immersion", kImmersionKeys);
    const ImmersionKind kind = parse_kind(get_required<std::string>(cfg, "kind", "immersion"));
    const bool sphere = kind == ImmersionKind::ProductSphere || kind == ImmersionKind::ProjectedCP || kind == ImmersionKind::Cone;
    if (!cfg.contains("curve")) throw ConfigError("missing field 'curve' in immersion");
    const json& cj = cfg.at("curve");
    require_object(cj, "curve");

    std::vector<LegendrianBlock> blocks;
    if (cfg.contains("blocks")) {
        const json& bj = cfg.at("blocks");
        if (!bj.is_array() || bj.size() != 2) throw ConfigError("'blocks' must be an array of two blocks");
        blocks.push_back(parse_block(bj[0], false));
        blocks.push_back(parse_block(bj[1], !sphere));
    } else {
        const int n1 = get_or<int>(cfg, "n1", 1), n2 = get_or<int>(cfg, "n2", 1);
        blocks.push_back(geodesic_sphere_block(n1));
        blocks.push_back(sphere ? geodesic_sphere_block(n2) : geodesic_hyperbolic_block(n2));
    }
    const int n1 = blocks[0].dim, n2 = blocks[1].dim;
    if (cfg.contains("n1") && get_or<int>(cfg, "n1", n1) != n1) throw ConfigError("'n1' does not match the first block");
    if (cfg.contains("n2") && get_or<int>(cfg, "n2", n2) != n2) throw ConfigError("'n2' does not match the second block");

    const std::string fam = get_required<std::string>(cj, "family", "curve");
    BuiltImmersion out;
    out.config = cfg;
    std::shared_ptr<const CurveTrajectory> keep;
    const auto s_default = fam == "ode" ? std::pair{get_or<double>(cj, "t_begin", -2.0) + 0.05, get_or<double>(cj, "t_end", 2.0) - 0.05}
                                        : std::pair{-1.0, 1.0};
    const auto s_range = parse_range(cfg, "s_range", s_default);
    switch (kind) {
        case ImmersionKind::ProductSphere:
        case ImmersionKind::ProductAdS:
            out.imm = product_immersion(parse_curve(cj, sphere, n1, n2, &keep), blocks[0], blocks[1], s_range);
            break;
        case ImmersionKind::Cone: {
            const GeometricImmersion link = product_immersion(parse_curve(cj, true, n1, n2, &keep), blocks[0], blocks[1], s_range);
            out.imm = cone(link, parse_range(cfg, "r_range", {0.5, 1.5}));
            break;
        }
        case ImmersionKind::ProjectedCP:
            if (fam != "gamma_delta") throw ConfigError("ProjectedCP is built from the gamma_delta family");
            check_keys(cj, "curve", {"family", "delta"});
            out.imm = projected_phi_delta(get_required<double>(cj, "delta", "curve"), blocks[0], blocks[1]);
            break;
        case ImmersionKind::ProjectedCH:
            if (fam == "alpha_rho") {
                check_keys(cj, "curve", {"family", "rho"});
                out.imm = projected_phi_rho(get_required<double>(cj, "rho", "curve"), blocks[0], blocks[1]);
            } else if (fam == "quadrature") {
                check_keys(cj, "curve", {"family", "rho"});
                if (blocks[0].name != "geodesic_sphere" && blocks[0].name != "point")
                    throw ConfigError("the quadrature embedding uses geodesic blocks");
                out.imm = minimal_embedding_cor10(get_required<double>(cj, "rho", "curve"), n1, n2, parse_range(cfg, "s_range", {-2.0, 2.0}));
            } else {
                throw ConfigError("ProjectedCH is built from the alpha_rho or quadrature family");
            }
            break;
    }
    if (cfg.contains("quotient")) {
        const std::string q = get_or<std::string>(cfg, "quotient", "");
        if (q == "Z2xZ2_sphere") out.quotient = QuotientKind::Z2xZ2_sphere;
        else if (q == "Z2_hyperbolic") out.quotient = QuotientKind::Z2_hyperbolic;
        else throw ConfigError("unknown quotient '" + q + "'");
        check_quotient_shape(out.imm, quotient_action(*out.quotient));
    }
    return out;
}

// --------------------------------------------------------------------------
// Grids

/// {"counts": [...], "box": [[a,b], ...]} (box defaults to the immersion's sampling box).
inline Grid parse_grid(const json& j, const GeometricImmersion& imm) {
    check_keys(j, "grid", {"counts", "box"});
    Box box = imm.box;
    if (j.contains("box")) {
        box.clear();
        for (const auto& r : j.at("box")) {
            const auto v = r.get<std::vector<double>>();
            if (v.size() != 2 || !(v[0] <= v[1])) throw ConfigError("grid box entries must be [a, b]");
            box.emplace_back(v[0], v[1]);
        }
    }
    if (box.size() != static_cast<std::size_t>(imm.dim())) throw ConfigError("grid box must have one range per chart axis");
    std::vector<int> counts(imm.dim(), 3);
    if (j.contains("counts")) counts = get_or<std::vector<int>>(j, "counts", counts);
    if (counts.size() != static_cast<std::size_t>(imm.dim())) throw ConfigError("grid counts must have one entry per chart axis");
    return tensor_grid(box, counts);
}

// --------------------------------------------------------------------------
// Output

inline json to_json(const VerificationReport& r) {
    json out;
    out["residuals"] = json::object();
    for (const auto& [k, v] : r.residuals)
        out["residuals"][k] = {{"max", v.max}, {"mean", v.mean}, {"n_points", v.n_points}, {"h", v.h}};
    out["verdicts"] = json::object();
    for (const auto& [k, v] : r.verdicts) out["verdicts"][k] = to_string(v);
    json meta = json::object();
    for (const auto& [k, v] : r.meta) meta[k] = v;
    for (const auto& [k, v] : r.meta_numbers) meta[k] = v;
    meta["tolerances"] = json::object();
    for (const auto& [k, v] : r.tolerances) meta["tolerances"][k] = v;
    meta["notes"] = r.notes;
    out["meta"] = meta;
    return out;
}

inline json to_json(const PeriodReport& r) {
    json j;
    j["degenerate"] = r.degenerate;
    auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
    auto cert = [](const std::optional<Rational>& c) { return c ? json{{"p", c->p}, {"q", c->q}} : json(nullptr); };
    j["T"] = num(r.period);
    j["rot1"] = num(r.rot1);
    j["rot2"] = num(r.rot2);
    j["gamma_rot"] = num(r.gamma_rot);
    j["rationals"] = {{"rot1", cert(r.cert1)}, {"rot2", cert(r.cert2)}, {"gamma_rot", cert(r.cert_gamma)}};
    if (r.degenerate) {
        j["phase_rate1"] = num(r.phase_rate1);
        j["phase_rate2"] = num(r.phase_rate2);
        j["rationals"]["phase_rate_ratio"] = cert(r.cert_ratio);
    }
    j["closed_curve"] = r.closed_curve;
    j["projected_periodic"] = r.projected_periodic;
    j["certificate_semantics"] = r.closed_curve || r.projected_periodic ? "certified rational within tolerance" : "no certificate found";
    j["q_max"] = r.q_max;
    j["tol"] = r.tol;
    return j;
}

inline json to_json(const ProjectedPeriodicity& p) {
    json j{{"certified", p.certified}, {"degenerate", p.degenerate}, {"m", p.m}, {"closing_phase", p.closing_phase},
           {"projected_period", p.projected_period}, {"verdict", p.verdict}};
    j["certificate"] = p.certificate ? json{{"p", p.certificate->p}, {"q", p.certificate->q}} : json(nullptr);
    return j;
}

inline json descriptor(const BuiltImmersion& b, const Grid& grid) {
    const auto& imm = b.imm;
    json d;
    d["immersion"] = b.config;
    d["kind"] = to_string(imm.kind);
    d["chart_dims"] = imm.chart_dims;
    d["ambient"] = {{"dim_complex", imm.ambient.dim_complex},
                    {"signature", imm.ambient.kind == SignatureKind::Definite ? "definite" : "lorentzian"},
                    {"level", imm.level}};
    d["params"] = imm.params;
    d["labels"] = imm.labels;
    d["claims"] = {{"minimal", imm.minimal_claimed}, {"c_minimal", imm.cminimal_claimed}};
    if (imm.is_cone()) d["claims"]["special_lagrangian"] = imm.minimal_claimed;
    d["n_samples"] = grid.size();
    return d;
}

/// x0..x{m-1}, re0, im0, ... with 17 significant digits.
inline void write_samples_csv(std::ostream& os, const GeometricImmersion& imm, const Grid& grid) {
    const int m = imm.dim();
    for (int i = 0; i < m; ++i) os << (i ? "," : "") << 'x' << i;
    for (std::size_t k = 0; k < imm.ambient.dim_complex; ++k) os << ",re" << k << ",im" << k;
    os << '\n';
    for (const auto& p : grid.points) {
        const CVec v = imm(p);
        for (int i = 0; i < m; ++i) os << (i ? "," : "") << fmt17(p[i]);
        for (const auto& z : v) os << ',' << fmt17(z.real()) << ',' << fmt17(z.imag());
        os << '\n';
    }
}

}  // namespace hminlag::io
