#pragma once

// Building blocks and the immersions assembled from them: warped products
// over Legendre curves, their Hopf-projected representatives, cones in
// C^{n+1}, and the finite group actions used for the quotient embeddings.

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ambient.hpp"
#include "errors.hpp"
#include "legendre_curves.hpp"

namespace hminlag {

using Evaluator = std::function<CVec(std::span<const double>)>;
using Box = std::vector<std::pair<double, double>>;

inline constexpr double kSingularModulus = 1e-4;

/// A Legendrian immersion psi: N^n -> S^{2n+1} or H_1^{2n+1} given on one chart.
struct LegendrianBlock {
    std::string name;
    int dim = 0;
    Signature ambient = Signature::definite(1);
    Evaluator value;
    /// Throws if the chart point is outside the chart (or singular for nested products).
    std::function<void(std::span<const double>)> check_domain = [](std::span<const double>) {};
    /// Sampling box inside the chart.
    Box box;
    bool minimal_claimed = false;
    bool cminimal_claimed = false;
    std::optional<double> beta_offset;
    /// Set for totally geodesic blocks: chart point -> real model point (x or y).
    std::function<RVec(std::span<const double>)> model_point;
    /// Inverse of model_point, for blocks that have one.
    std::function<RVec(std::span<const double>)> chart_of;
};

inline LegendrianBlock point_block(SignatureKind kind = SignatureKind::Definite) {
    LegendrianBlock b;
    b.name = "point";
    b.dim = 0;
    b.ambient = Signature::make(kind, 1);
    b.value = [](std::span<const double>) { return CVec{Complex{1.0, 0.0}}; };
    b.minimal_claimed = b.cminimal_claimed = true;
    b.beta_offset = 0.0;
    b.model_point = [](std::span<const double>) { return RVec{1.0}; };
    b.chart_of = [](std::span<const double>) { return RVec{}; };
    return b;
}

/// Totally geodesic S^n = S^{2n+1} cap R^{n+1} on the hemisphere chart
/// {sign * x_axis > 0}: the chart coordinates are the remaining entries in order.
inline LegendrianBlock geodesic_sphere_block(int n, int axis = -1, int sign = 1) {
    if (n < 0) throw DomainError("sphere block dimension must be >= 0");
    if (n == 0) return point_block(SignatureKind::Definite);
    if (axis < 0) axis = n;
    if (axis > n || (sign != 1 && sign != -1)) throw DomainError("invalid hemisphere chart");
    LegendrianBlock b;
    b.name = "geodesic_sphere";
    b.dim = n;
    b.ambient = Signature::definite(n + 1);
    auto to_point = [n, axis, sign](std::span<const double> u) {
        if (u.size() != static_cast<std::size_t>(n)) throw DimensionError("sphere chart point has wrong length");
        double r2 = 0.0;
        for (double c : u) r2 += c * c;
        if (!(r2 < 1.0)) throw DomainError("point outside the hemisphere chart");
        RVec x(n + 1);
        for (int k = 0, j = 0; k <= n; ++k) x[k] = (k == axis) ? sign * std::sqrt(1.0 - r2) : u[j++];
        return x;
    };
    b.model_point = to_point;
    b.chart_of = [n, axis, sign](std::span<const double> x) {
        if (x.size() != static_cast<std::size_t>(n + 1)) throw DimensionError("sphere point has wrong length");
        if (!(sign * x[axis] > 0.0)) throw DomainError("point not in this hemisphere chart");
        RVec u;
        for (int k = 0; k <= n; ++k)
            if (k != axis) u.push_back(x[k]);
        return u;
    };
    b.value = [to_point](std::span<const double> u) { return real_to_complex(to_point(u)); };
    b.check_domain = [to_point](std::span<const double> u) { (void)to_point(u); };
    b.box.assign(n, {-0.5, 0.5});
    b.minimal_claimed = b.cminimal_claimed = true;
    b.beta_offset = (sign * ((axis % 2 == 0) ? 1 : -1) == 1) ? 0.0 : kPi;
    return b;
}

/// Totally geodesic RH^n in H_1^{2n+1} on the global graph chart y_{n+1} = sqrt(1 + |y|^2).
inline LegendrianBlock geodesic_hyperbolic_block(int n) {
    if (n < 0) throw DomainError("hyperbolic block dimension must be >= 0");
    if (n == 0) return point_block(SignatureKind::Lorentzian);
    LegendrianBlock b;
    b.name = "geodesic_hyperbolic";
    b.dim = n;
    b.ambient = Signature::lorentzian(n + 1);
    auto to_point = [n](std::span<const double> u) {
        if (u.size() != static_cast<std::size_t>(n)) throw DimensionError("hyperbolic chart point has wrong length");
        RVec y(u.begin(), u.end());
        double r2 = 0.0;
        for (double c : u) r2 += c * c;
        y.push_back(std::sqrt(1.0 + r2));
        return y;
    };
    b.model_point = to_point;
    b.chart_of = [n](std::span<const double> y) {
        if (y.size() != static_cast<std::size_t>(n + 1)) throw DimensionError("hyperbolic point has wrong length");
        return RVec(y.begin(), y.end() - 1);
    };
    b.value = [to_point](std::span<const double> u) { return real_to_complex(to_point(u)); };
    b.box.assign(n, {-1.0, 1.0});
    b.minimal_claimed = b.cminimal_claimed = true;
    b.beta_offset = (n % 2 == 0) ? 0.0 : kPi;
    return b;
}

enum class ImmersionKind { ProductSphere, ProductAdS, Cone, ProjectedCP, ProjectedCH };

inline std::string to_string(ImmersionKind k) {
    switch (k) {
        case ImmersionKind::ProductSphere: return "ProductSphere";
        case ImmersionKind::ProductAdS: return "ProductAdS";
        case ImmersionKind::Cone: return "Cone";
        case ImmersionKind::ProjectedCP: return "ProjectedCP";
        case ImmersionKind::ProjectedCH: return "ProjectedCH";
    }
    return "unknown";
}

struct GeometricImmersion {
    ImmersionKind kind = ImmersionKind::ProductSphere;
    /// Factor dimensions: {1, n1, n2} for products, {1, link dim} for cones.
    std::vector<int> chart_dims;
    Signature ambient = Signature::definite(2);
    /// +1 sphere, -1 anti-De Sitter, 0 for cones in C^{n+1}.
    double level = 1.0;
    Evaluator evaluator;
    /// Throws SingularPointError naming the factor, or DomainError off the chart.
    std::function<void(std::span<const double>)> check_regular = [](std::span<const double>) {};
    Box box;
    /// Chart axes that are angles of period 2 pi (the circle factor of projected kinds).
    std::vector<int> periodic_axes;
    bool minimal_claimed = false;
    bool cminimal_claimed = false;
    std::map<std::string, double> params;
    std::map<std::string, std::string> labels;

    std::shared_ptr<const LegendreCurve> curve;
    std::shared_ptr<const LegendrianBlock> block1;
    std::shared_ptr<const LegendrianBlock> block2;
    std::shared_ptr<const GeometricImmersion> link;

    int dim() const {
        int d = 0;
        for (int c : chart_dims) d += c;
        return d;
    }
    bool is_product() const { return curve != nullptr; }
    bool is_projected() const { return kind == ImmersionKind::ProjectedCP || kind == ImmersionKind::ProjectedCH; }
    bool is_cone() const { return kind == ImmersionKind::Cone; }

    CVec operator()(std::span<const double> point) const {
        if (point.size() != static_cast<std::size_t>(dim())) {
            throw DimensionError("chart point has length " + std::to_string(point.size()) + ", expected " +
                                 std::to_string(dim()));
        }
        return evaluator(point);
    }

    /// Ambient point from model coordinates (s, x, y) for products over geodesic blocks.
    CVec model(double s, std::span<const double> x, std::span<const double> y) const {
        if (!is_product()) throw DomainError("model coordinates exist only for product kinds");
        if (!block1->model_point || !block2->model_point) throw DomainError("model coordinates need geodesic blocks");
        if (x.size() != static_cast<std::size_t>(block1->dim + 1) || y.size() != static_cast<std::size_t>(block2->dim + 1))
            throw DimensionError("model point has wrong block lengths");
        const CPair g = curve->value(s);
        CVec out;
        out.reserve(x.size() + y.size());
        for (double v : x) out.push_back(g[0] * v);
        for (double v : y) out.push_back(g[1] * v);
        return out;
    }
};

/// (gamma_1(s) psi_1(p), gamma_2(s) psi_2(q)); chart (s, p, q).
inline GeometricImmersion product_immersion(const LegendreCurve& curve, const LegendrianBlock& b1,
                                            const LegendrianBlock& b2, std::pair<double, double> s_range = {-1.0, 1.0}) {
    const bool sphere = curve.is_sphere();
    if (b1.ambient.kind != SignatureKind::Definite) throw DomainError("first block must be spherical");
    if (b2.ambient.kind != (sphere ? SignatureKind::Definite : SignatureKind::Lorentzian)) {
        throw DomainError(sphere ? "second block must be spherical for a sphere curve"
                                 : "second block must be hyperbolic for an anti-De Sitter curve");
    }
    if (curve.n1 != b1.dim || curve.n2 != b2.dim) {
        throw DomainError("curve exponents (" + std::to_string(curve.n1) + "," + std::to_string(curve.n2) +
                          ") do not match block dimensions (" + std::to_string(b1.dim) + "," +
                          std::to_string(b2.dim) + ")");
    }
    GeometricImmersion imm;
    imm.kind = sphere ? ImmersionKind::ProductSphere : ImmersionKind::ProductAdS;
    imm.chart_dims = {1, b1.dim, b2.dim};
    const std::size_t n_total = static_cast<std::size_t>(b1.dim + b2.dim + 2);
    imm.ambient = sphere ? Signature::definite(n_total) : Signature::lorentzian(n_total);
    imm.level = imm.ambient.quadric_level();
    auto c = std::make_shared<const LegendreCurve>(curve);
    auto p1 = std::make_shared<const LegendrianBlock>(b1);
    auto p2 = std::make_shared<const LegendrianBlock>(b2);
    imm.curve = c;
    imm.block1 = p1;
    imm.block2 = p2;
    const std::size_t d1 = b1.dim, d2 = b2.dim;
    imm.evaluator = [c, p1, p2, d1, d2](std::span<const double> pt) {
        const CPair g = c->value(pt[0]);
        const CVec u = p1->value(pt.subspan(1, d1));
        const CVec v = p2->value(pt.subspan(1 + d1, d2));
        CVec out;
        out.reserve(u.size() + v.size());
        for (const auto& z : u) out.push_back(g[0] * z);
        for (const auto& z : v) out.push_back(g[1] * z);
        return out;
    };
    imm.check_regular = [c, p1, p2, d1, d2](std::span<const double> pt) {
        if (pt[0] < c->t_min || pt[0] > c->t_max) {
            throw DomainError("curve parameter " + std::to_string(pt[0]) + " outside the curve's domain");
        }
        const CPair g = c->value(pt[0]);
        if (std::abs(g[0]) < kSingularModulus) throw SingularPointError("gamma1", "|gamma1| < 1e-4 at s = " + std::to_string(pt[0]));
        if (std::abs(g[1]) < kSingularModulus) throw SingularPointError("gamma2", "|gamma2| < 1e-4 at s = " + std::to_string(pt[0]));
        p1->check_domain(pt.subspan(1, d1));
        p2->check_domain(pt.subspan(1 + d1, d2));
    };
    imm.box.push_back(s_range);
    imm.box.insert(imm.box.end(), b1.box.begin(), b1.box.end());
    imm.box.insert(imm.box.end(), b2.box.begin(), b2.box.end());
    imm.minimal_claimed = curve.minimal_family && b1.minimal_claimed && b2.minimal_claimed;
    imm.cminimal_claimed = curve.solves_cminimal_family && b1.cminimal_claimed && b2.cminimal_claimed;
    imm.params = curve.params;
    imm.params["n1"] = b1.dim;
    imm.params["n2"] = b2.dim;
    imm.labels = {{"curve", curve.family}, {"block1", b1.name}, {"block2", b2.name}, {"frame_order", "s,p,q"}};
    return imm;
}

/// Re-wraps a product immersion as a block so that it can be nested in another product.
inline LegendrianBlock as_block(const GeometricImmersion& imm) {
    if (!(imm.kind == ImmersionKind::ProductSphere || imm.kind == ImmersionKind::ProductAdS)) {
        throw DomainError("only sphere or anti-De Sitter products can be used as blocks");
    }
    LegendrianBlock b;
    b.name = "product(" + imm.labels.at("curve") + ")";
    b.dim = imm.dim();
    b.ambient = imm.ambient;
    auto inner = std::make_shared<const GeometricImmersion>(imm);
    b.value = [inner](std::span<const double> p) { return (*inner)(p); };
    b.check_domain = [inner](std::span<const double> p) { inner->check_regular(p); };
    b.box = imm.box;
    b.minimal_claimed = imm.minimal_claimed;
    b.cminimal_claimed = imm.cminimal_claimed;
    if (imm.minimal_claimed && imm.block1->beta_offset && imm.block2->beta_offset) {
        // Constant angle from the product formula, evaluated at the box centre.
        const double s = 0.5 * (imm.box[0].first + imm.box[0].second);
        const CPair g = imm.curve->value(s);
        const double beta_c = legendre_angle(g, imm.curve->derivative(s), imm.curve->ambient);
        const int n1 = imm.block1->dim, n2 = imm.block2->dim;
        b.beta_offset = wrap_angle(n1 * kPi + beta_c + n1 * std::arg(g[0]) + n2 * std::arg(g[1]) +
                                   *imm.block1->beta_offset + *imm.block2->beta_offset);
    }
    return b;
}

inline GeometricImmersion phi_delta(double delta, const LegendrianBlock& b1, const LegendrianBlock& b2,
                                    std::pair<double, double> s_range = {-1.0, 1.0}) {
    GeometricImmersion imm = product_immersion(gamma_delta_curve(delta, b1.dim, b2.dim), b1, b2, s_range);
    imm.labels["construction"] = "phi_delta";
    return imm;
}

/// Representative (cos d e^{i s sin^2 d} psi_1, sin d e^{-i s cos^2 d} psi_2), s an angle.
inline GeometricImmersion projected_phi_delta(double delta, const LegendrianBlock& b1, const LegendrianBlock& b2) {
    GeometricImmersion imm =
        product_immersion(gamma_delta_circle_curve(delta, b1.dim, b2.dim), b1, b2, {0.0, 2.0 * kPi});
    imm.kind = ImmersionKind::ProjectedCP;
    imm.periodic_axes = {0};
    imm.labels["construction"] = "projected_phi_delta";
    return imm;
}

/// Representative (sinh r e^{i s cosh^2 r} psi_1, cosh r e^{i s sinh^2 r} psi_2), s an angle.
inline GeometricImmersion projected_phi_rho(double rho, const LegendrianBlock& b1, const LegendrianBlock& b2) {
    GeometricImmersion imm = product_immersion(alpha_rho_circle_curve(rho, b1.dim, b2.dim), b1, b2, {0.0, 2.0 * kPi});
    imm.kind = ImmersionKind::ProjectedCH;
    imm.periodic_axes = {0};
    imm.labels["construction"] = "projected_phi_rho";
    return imm;
}

/// (sqrt(s^2+sh^2) e^{i theta_1(s)} x, sqrt(s^2+ch^2) e^{i theta_2(s)} y) on R x S^{n1} x RH^{n2}.
inline GeometricImmersion minimal_embedding_cor10(double rho, int n1, int n2,
                                                  std::pair<double, double> s_range = {-2.0, 2.0}) {
    GeometricImmersion imm = product_immersion(quadrature_curve(rho, n1, n2), geodesic_sphere_block(n1),
                                               geodesic_hyperbolic_block(n2), s_range);
    imm.kind = ImmersionKind::ProjectedCH;
    imm.labels["construction"] = "minimal_embedding_cor10";
    return imm;
}

/// r * phi(p) on (R \ {0}) x chart.
inline GeometricImmersion cone(const GeometricImmersion& link, std::pair<double, double> r_range = {0.5, 1.5}) {
    if (link.level != 1.0 || link.ambient.kind != SignatureKind::Definite) {
        throw DomainError("cone needs a Legendrian link in the sphere");
    }
    GeometricImmersion imm;
    imm.kind = ImmersionKind::Cone;
    imm.chart_dims = {1, link.dim()};
    imm.ambient = link.ambient;
    imm.level = 0.0;
    auto l = std::make_shared<const GeometricImmersion>(link);
    imm.link = l;
    imm.evaluator = [l](std::span<const double> pt) {
        CVec v = (*l)(pt.subspan(1));
        for (auto& z : v) z *= pt[0];
        return v;
    };
    imm.check_regular = [l](std::span<const double> pt) {
        if (std::abs(pt[0]) < kSingularModulus) throw SingularPointError("cone_vertex", "|r| < 1e-4: cone vertex");
        l->check_regular(pt.subspan(1));
    };
    imm.box.push_back(r_range);
    imm.box.insert(imm.box.end(), link.box.begin(), link.box.end());
    for (int a : link.periodic_axes) imm.periodic_axes.push_back(a + 1);
    imm.minimal_claimed = link.minimal_claimed;
    imm.cminimal_claimed = link.cminimal_claimed;
    imm.params = link.params;
    imm.labels = link.labels;
    imm.labels["construction"] = "cone";
    imm.labels["metric"] = "dr^2 + r^2 g_link";
    imm.labels["singularity"] = "r = 0";
    if (link.minimal_claimed) imm.labels["special_lagrangian"] = "claimed";
    return imm;
}

// --------------------------------------------------------------------------
// Quotient actions on model coordinates (s, x, y)

struct ModelPoint {
    double s = 0.0;
    RVec x;
    RVec y;
};

enum class QuotientKind { Z2xZ2_sphere, Z2_hyperbolic };

struct QuotientAction {
    QuotientKind kind = QuotientKind::Z2xZ2_sphere;
    std::vector<std::function<ModelPoint(const ModelPoint&)>> generators;
    /// All group elements, identity first.
    std::vector<std::function<ModelPoint(const ModelPoint&)>> elements;
};

inline QuotientAction quotient_action(QuotientKind kind) {
    auto h1 = [](const ModelPoint& m) {
        ModelPoint r = m;
        r.s = m.s + kPi;
        for (auto& v : r.x) v = -v;
        return r;
    };
    auto h2 = [](const ModelPoint& m) {
        ModelPoint r = m;
        r.s = m.s + kPi;
        for (auto& v : r.y) v = -v;
        return r;
    };
    auto id = [](const ModelPoint& m) { return m; };
    QuotientAction q;
    q.kind = kind;
    if (kind == QuotientKind::Z2xZ2_sphere) {
        q.generators = {h1, h2};
        q.elements = {id, h1, h2, [h1, h2](const ModelPoint& m) { return h1(h2(m)); }};
    } else {
        q.generators = {h1};
        q.elements = {id, h1};
    }
    return q;
}

/// Checks that the immersion's chart shape is compatible with the action.
inline void check_quotient_shape(const GeometricImmersion& imm, const QuotientAction& q) {
    if (!imm.is_projected() || !imm.block1->model_point || !imm.block2->model_point) {
        throw DomainError("quotient actions need a projected product over geodesic blocks");
    }
    const bool hyperbolic = imm.kind == ImmersionKind::ProjectedCH;
    if ((q.kind == QuotientKind::Z2_hyperbolic) != hyperbolic) {
        throw DomainError("quotient kind does not match the immersion's chart (circle x sphere x " +
                          std::string(hyperbolic ? "hyperbolic" : "sphere") + ")");
    }
}

}  // namespace hminlag
