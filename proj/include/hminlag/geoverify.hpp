#pragma once

// Finite-difference verification of the constructed immersions. Everything is
// recomputed from the evaluators; closed forms enter only as the right-hand
// sides of comparisons.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ambient.hpp"
#include "errors.hpp"
#include "immersion.hpp"
#include "jets.hpp"
#include "legendre_curves.hpp"
#include "numerics.hpp"
#include "rational.hpp"
#include "tolerances.hpp"

namespace hminlag {

// --------------------------------------------------------------------------
// Frames, angles, curvature

struct FrameData {
    CVec point;
    std::vector<CVec> tangents;  ///< chart derivatives
    std::vector<CVec> basis;     ///< orthonormal, same orientation as the chart
    Eigen::MatrixXd metric;
    Eigen::MatrixXd inverse;
    double sqrt_det = 1.0;
    Complex volume{1.0, 0.0};  ///< Omega on the orthonormal basis; e^{i beta} when Legendrian
    Signature sig = Signature::definite(1);
    double level = 1.0;

    std::size_t dim() const { return tangents.size(); }

    /// Inverse Gram matrix of the tangents followed (on a quadric) by the position.
    Eigen::MatrixXd span_inverse;

    /// Orthogonal projection onto the complement of span{tangents, point}.
    CVec normal_part(std::span<const Complex> v) const {
        CVec out(v.begin(), v.end());
        const std::size_t m = dim();
        const std::size_t w = span_inverse.rows();
        RVec c(w);
        for (std::size_t l = 0; l < w; ++l) c[l] = riemannian(v, l < m ? tangents[l] : point, sig);
        for (std::size_t k = 0; k < w; ++k) {
            double coef = 0.0;
            for (std::size_t l = 0; l < w; ++l) coef += span_inverse(k, l) * c[l];
            axpy(-coef, k < m ? tangents[k] : point, out);
        }
        return out;
    }

    /// Length of v in the orthonormal frame {e_k, J e_k, J point} of the ambient tangent
    /// space; positive definite and invariant under ambient isometries.
    double norm(std::span<const Complex> v) const {
        double s = 0.0;
        for (const auto& e : basis) {
            const double a = riemannian(v, e, sig);
            const double b = riemannian(v, scaled(e, kI), sig);
            s += a * a + b * b;
        }
        if (level != 0.0) {
            const double c = riemannian(v, scaled(point, kI), sig);
            s += c * c;
        }
        return std::sqrt(s);
    }
};

inline Eigen::MatrixXd gram_matrix(const std::vector<CVec>& t, const Signature& sig) {
    const auto m = static_cast<Eigen::Index>(t.size());
    Eigen::MatrixXd g(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = i; j < m; ++j) g(i, j) = g(j, i) = riemannian(t[i], t[j], sig);
    return g;
}

inline FrameData make_frame(CVec point, std::vector<CVec> tangents, const Signature& sig, double level) {
    FrameData f;
    f.point = std::move(point);
    f.tangents = std::move(tangents);
    f.sig = sig;
    f.level = level;
    const auto m = static_cast<Eigen::Index>(f.tangents.size());
    if (f.point.size() != sig.dim_complex) throw DimensionError("frame point does not match the ambient");
    const std::size_t expected = level == 0.0 ? sig.dim_complex : sig.dim_complex - 1;
    if (f.tangents.size() != expected) throw DimensionError("frame needs " + std::to_string(expected) + " tangents");
    f.metric = gram_matrix(f.tangents, sig);
    {
        std::vector<CVec> span = f.tangents;
        if (level != 0.0) span.push_back(f.point);
        const auto w = static_cast<Eigen::Index>(span.size());
        f.span_inverse = w == 0 ? Eigen::MatrixXd(0, 0) : Eigen::MatrixXd(gram_matrix(span, sig).inverse());
    }
    if (m == 0) {
        f.inverse = Eigen::MatrixXd(0, 0);
        f.volume = complex_volume(f.point, {}, sig);
        return f;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(f.metric);
    if (llt.info() != Eigen::Success) throw SingularPointError("metric", "induced metric is not positive definite");
    const Eigen::MatrixXd lmat = llt.matrixL();
    double det = 1.0;
    for (Eigen::Index k = 0; k < m; ++k) det *= lmat(k, k);
    if (!(det > 1e-14)) throw SingularPointError("metric", "induced metric is degenerate");
    f.sqrt_det = det;
    f.inverse = llt.solve(Eigen::MatrixXd::Identity(m, m));
    // basis = tangents * L^{-T}
    const Eigen::MatrixXd linv_t = lmat.inverse().transpose();
    f.basis.assign(m, CVec(sig.dim_complex, Complex{}));
    for (Eigen::Index k = 0; k < m; ++k)
        for (Eigen::Index j = 0; j < m; ++j)
            if (linv_t(j, k) != 0.0) axpy(linv_t(j, k), f.tangents[j], f.basis[k]);
    if (level == 0.0) {
        f.volume = complex_determinant(f.basis);
    } else {
        f.volume = complex_volume(f.point, f.basis, sig);
    }
    return f;
}

struct GeometrySource {
    Evaluator f;
    Signature sig;
    double level;
};

inline GeometrySource source_of(const GeometricImmersion& imm) { return {imm.evaluator, imm.ambient, imm.level}; }
inline GeometrySource source_of(const LegendrianBlock& b) { return {b.value, b.ambient, b.ambient.quadric_level()}; }

inline FrameData frame_at(const GeometrySource& src, std::span<const double> x, const DiffOptions& opt) {
    return make_frame(src.f(x), first_derivatives(src.f, x, opt), src.sig, src.level);
}

inline FrameData frame_at(const GeometricImmersion& imm, std::span<const double> x, const DiffOptions& opt) {
    check_stencil_regular(imm, x, opt);
    return frame_at(source_of(imm), x, opt);
}

/// Legendrian (or, for cones, Lagrangian) angle in (-pi, pi].
inline double angle_at(const GeometrySource& src, std::span<const double> x, const DiffOptions& opt) {
    const FrameData fr = frame_at(src, x, opt);
    if (std::abs(fr.volume) < 1e-8) throw SingularPointError("frame", "complex volume vanishes: frame not Lagrangian");
    return std::arg(fr.volume);
}

inline double angle_at(const GeometricImmersion& imm, std::span<const double> x, const DiffOptions& opt) {
    check_stencil_regular(imm, x, opt);
    return angle_at(source_of(imm), x, opt);
}

/// Mean curvature vector (1/m) g^{ij} sigma_ij from a 2-jet.
inline CVec mean_curvature(const Jet& jet, const FrameData& fr) {
    const std::size_t m = fr.dim();
    CVec h(fr.point.size(), Complex{});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) axpy(fr.inverse(i, j), jet.d2[i][j], h);
    CVec out = fr.normal_part(h);
    for (auto& z : out) z /= static_cast<double>(m);
    return out;
}

inline CVec mean_curvature(const GeometricImmersion& imm, std::span<const double> x, const DiffOptions& opt) {
    const Jet jet = evaluate_jet(imm, x, opt);
    const FrameData fr = make_frame(jet.value, jet.d1, imm.ambient, imm.level);
    return mean_curvature(jet, fr);
}

namespace detail {

/// d beta / d x_i from wrapped central differences of the angle field.
inline RVec angle_gradient(const GeometrySource& src, std::span<const double> x, const DiffOptions& opt,
                           double beta_center) {
    const auto& st = first_stencil(opt.order);
    RVec grad(x.size(), 0.0);
    RVec y(x.begin(), x.end());
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t k = 0; k < st.offsets.size(); ++k) {
            y[i] = x[i] + st.offsets[k] * opt.steps[i];
            const double d = wrap_angle(angle_at(src, y, opt) - beta_center);
            if (std::abs(d) > kPi / 2) {
                throw NumericalQualityError("angle field jumps by more than pi/2 across one stencil; refine the step");
            }
            grad[i] += st.weights[k] * d / opt.steps[i];
        }
        y[i] = x[i];
    }
    return grad;
}

}  // namespace detail

inline RVec angle_gradient(const GeometricImmersion& imm, std::span<const double> x, const DiffOptions& opt) {
    DiffOptions wide = opt;
    for (auto& h : wide.steps) h *= 2.0;
    check_stencil_regular(imm, x, wide);
    const GeometrySource src = source_of(imm);
    return detail::angle_gradient(src, x, opt, angle_at(src, x, opt));
}

/// J grad beta = i * g^{ij} d_j beta d_i phi.
inline CVec j_grad_beta(const FrameData& fr, std::span<const double> dbeta) {
    const std::size_t m = fr.dim();
    CVec out(fr.point.size(), Complex{});
    for (std::size_t i = 0; i < m; ++i) {
        double c = 0.0;
        for (std::size_t j = 0; j < m; ++j) c += fr.inverse(i, j) * dbeta[j];
        axpy(kI * c, fr.tangents[i], out);
    }
    return out;
}

/// Laplace-Beltrami of beta in divergence form:
/// (1/sqrt g) d_i (sqrt g g^{ij} d_j beta), all derivatives by central differences.
inline double laplacian_beta(const GeometricImmersion& imm, std::span<const double> x, const DiffOptions& opt) {
    DiffOptions wide = opt;
    for (auto& h : wide.steps) h *= 3.0;
    check_stencil_regular(imm, x, wide);
    const GeometrySource src = source_of(imm);
    const auto& st = detail::first_stencil(opt.order);
    const double beta0 = angle_at(src, x, opt);
    const FrameData center = frame_at(src, x, opt);
    double div = 0.0;
    RVec y(x.begin(), x.end());
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t k = 0; k < st.offsets.size(); ++k) {
            y[i] = x[i] + st.offsets[k] * opt.steps[i];
            const FrameData fr = frame_at(src, y, opt);
            const double beta_y = beta0 + wrap_angle(std::arg(fr.volume) - beta0);
            const RVec g = detail::angle_gradient(src, y, opt, beta_y);
            double flux = 0.0;
            for (std::size_t j = 0; j < x.size(); ++j) flux += fr.inverse(i, j) * g[j];
            div += st.weights[k] * fr.sqrt_det * flux / opt.steps[i];
        }
        y[i] = x[i];
    }
    return div / center.sqrt_det;
}

// --------------------------------------------------------------------------
// Curve-side quantities by finite differences (for product closed forms)

namespace detail {

inline constexpr double kCurveInnerStep = 1e-3;
inline constexpr double kCurveOuterStep = 1e-2;

inline CPair curve_derivative_fd(const LegendreCurve& c, double s, double h = kCurveInnerStep) {
    const CPair a = c.value(s + 2 * h), b = c.value(s + h), d = c.value(s - h), e = c.value(s - 2 * h);
    CPair out;
    for (int j = 0; j < 2; ++j) out[j] = (-a[j] + 8.0 * b[j] - 8.0 * d[j] + e[j]) / (12.0 * h);
    return out;
}

/// beta_gamma + n1 arg gamma1 + n2 arg gamma2 + n1 pi (the s-part of the product angle).
inline double product_curve_angle(const LegendreCurve& c, double s) {
    const CPair g = c.value(s);
    const CPair d = curve_derivative_fd(c, s);
    return c.n1 * kPi + legendre_angle(g, d, c.ambient) + c.n1 * std::arg(g[0]) + c.n2 * std::arg(g[1]);
}

}  // namespace detail

/// One-dimensional Laplacian of the product angle for C-minimal blocks:
/// (1/|g'|^2) (f'' + (log(|g1|^{n1} |g2|^{n2} / |g'|))' f'), valid in any parametrization.
inline double product_laplacian_closed_form(const LegendreCurve& c, double s) {
    const double h = detail::kCurveOuterStep;
    const double f0 = detail::product_curve_angle(c, s);
    auto rel = [&](double t) { return wrap_angle(detail::product_curve_angle(c, t) - f0); };
    auto logw = [&](double t) {
        const CPair g = c.value(t);
        const double speed = induced_speed(detail::curve_derivative_fd(c, t), c.ambient);
        return c.n1 * std::log(std::abs(g[0])) + c.n2 * std::log(std::abs(g[1])) - std::log(speed);
    };
    const double fp2 = rel(s + 2 * h), fp1 = rel(s + h), fm1 = rel(s - h), fm2 = rel(s - 2 * h);
    const double f1 = (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * h);
    const double f2 = (-fp2 + 16.0 * fp1 + 16.0 * fm1 - fm2) / (12.0 * h * h);
    const double l1 = (-logw(s + 2 * h) + 8.0 * logw(s + h) - 8.0 * logw(s - h) + logw(s - 2 * h)) / (12.0 * h);
    const double speed = induced_speed(detail::curve_derivative_fd(c, s), c.ambient);
    return (f2 + l1 * f1) / (speed * speed);
}

/// Product angle assembled from the curve, the block angles and the n1 pi term.
inline double product_angle_closed_form(const GeometricImmersion& imm, std::span<const double> x,
                                        const DiffOptions& block_opt) {
    if (!imm.is_product()) throw DomainError("closed-form angle needs a product kind");
    const auto d1 = static_cast<std::size_t>(imm.block1->dim);
    const auto d2 = static_cast<std::size_t>(imm.block2->dim);
    auto block_angle = [&](const LegendrianBlock& b, std::span<const double> p) {
        if (b.beta_offset) return *b.beta_offset;
        DiffOptions o{block_opt.order, RVec(block_opt.steps.begin(), block_opt.steps.begin() + b.dim)};
        return angle_at(source_of(b), p, o);
    };
    return wrap_angle(detail::product_curve_angle(*imm.curve, x[0]) + block_angle(*imm.block1, x.subspan(1, d1)) +
                      block_angle(*imm.block2, x.subspan(1 + d1, d2)));
}

// --------------------------------------------------------------------------
// Grids and reports

struct Grid {
    std::vector<RVec> points;
    std::size_t size() const { return points.size(); }
};

/// Tensor grid with counts[i] equispaced nodes on box[i] (count 1 -> midpoint).
inline Grid tensor_grid(const Box& box, const std::vector<int>& counts) {
    if (box.size() != counts.size()) throw DimensionError("grid counts must match the chart dimension");
    Grid g;
    std::vector<RVec> axes;
    for (std::size_t i = 0; i < box.size(); ++i) {
        if (counts[i] < 1) throw DomainError("grid counts must be >= 1");
        RVec a(counts[i]);
        for (int k = 0; k < counts[i]; ++k) {
            a[k] = counts[i] == 1 ? 0.5 * (box[i].first + box[i].second)
                                  : box[i].first + (box[i].second - box[i].first) * k / (counts[i] - 1.0);
        }
        axes.push_back(std::move(a));
    }
    std::vector<int> idx(box.size(), 0);
    while (true) {
        RVec p(box.size());
        for (std::size_t i = 0; i < box.size(); ++i) p[i] = axes[i][idx[i]];
        g.points.push_back(std::move(p));
        std::size_t i = 0;
        for (; i < box.size(); ++i) {
            if (++idx[i] < counts[i]) break;
            idx[i] = 0;
        }
        if (i == box.size()) break;
    }
    return g;
}

inline Grid random_grid(const Box& box, std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Grid g;
    for (std::size_t k = 0; k < count; ++k) {
        RVec p(box.size());
        for (std::size_t i = 0; i < box.size(); ++i) p[i] = std::uniform_real_distribution<double>(box[i].first, box[i].second)(rng);
        g.points.push_back(std::move(p));
    }
    return g;
}

struct ResidualStats {
    double max = 0.0;
    double mean = 0.0;
    std::size_t n_points = 0;
    double h = 0.0;

    static ResidualStats of(std::span<const double> v, double h) {
        ResidualStats r;
        r.n_points = v.size();
        r.h = h;
        double sum = 0.0;
        for (double x : v) {
            r.max = std::max(r.max, x);
            sum += x;
        }
        r.mean = v.empty() ? 0.0 : sum / static_cast<double>(v.size());
        return r;
    }
};

enum class Verdict { Pass, Fail, Inconclusive };

inline std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "pass";
        case Verdict::Fail: return "fail";
        case Verdict::Inconclusive: return "inconclusive";
    }
    return "unknown";
}

struct VerificationReport {
    std::map<std::string, ResidualStats> residuals;
    std::map<std::string, Verdict> verdicts;
    std::map<std::string, double> tolerances;
    std::map<std::string, double> meta_numbers;
    std::map<std::string, std::string> meta;
    std::vector<std::string> notes;

    void add(const std::string& name, const ResidualStats& s, double tolerance) {
        residuals[name] = s;
        tolerances[name] = tolerance;
        verdicts[name] = s.max <= tolerance ? Verdict::Pass : Verdict::Fail;
    }

    /// Passes when the residual is at least `floor` (negative controls).
    void add_lower_bound(const std::string& name, const ResidualStats& s, double floor) {
        residuals[name] = s;
        tolerances[name] = floor;
        verdicts[name] = s.max >= floor ? Verdict::Pass : Verdict::Fail;
    }

    void merge(const VerificationReport& o) {
        for (const auto& [k, v] : o.residuals) residuals[k] = v;
        for (const auto& [k, v] : o.verdicts) verdicts[k] = v;
        for (const auto& [k, v] : o.tolerances) tolerances[k] = v;
        for (const auto& [k, v] : o.meta_numbers) meta_numbers[k] = v;
        for (const auto& [k, v] : o.meta) meta[k] = v;
        notes.insert(notes.end(), o.notes.begin(), o.notes.end());
    }

    bool all_pass() const {
        return std::all_of(verdicts.begin(), verdicts.end(), [](const auto& kv) { return kv.second == Verdict::Pass; });
    }
    bool any_fail() const {
        return std::any_of(verdicts.begin(), verdicts.end(), [](const auto& kv) { return kv.second == Verdict::Fail; });
    }
    /// 0 all pass, 1 any fail, 3 inconclusive without failures.
    int exit_code() const { return any_fail() ? 1 : (all_pass() ? 0 : 3); }
};

struct VerifyOptions {
    double h = 1e-3;
    int order = 2;
    unsigned jobs = 1;
    /// Stencil order for angle values (angle_field); order 4 keeps beta accurate to ~h^4.
    int angle_order = 4;

    DiffOptions diff(std::size_t dim) const { return DiffOptions::uniform(dim, h, order); }
};

namespace detail {

template <class Fn>
RVec map_grid(const Grid& grid, unsigned jobs, Fn&& fn) {
    RVec out(grid.size());
    parallel_for(grid.size(), jobs, [&](std::size_t k) { out[k] = fn(grid.points[k]); });
    return out;
}

/// Max angular distance of the values from their circular mean.
inline double circular_spread(std::span<const double> angles) {
    Complex acc{};
    for (double a : angles) acc += std::polar(1.0, a);
    if (std::abs(acc) < 1e-12) return kPi;
    const double mean = std::arg(acc);
    double m = 0.0;
    for (double a : angles) m = std::max(m, angular_distance(a, mean));
    return m;
}

}  // namespace detail

// --------------------------------------------------------------------------
// Checks

/// "liouville", "kaehler", "quadric" (the last omitted for cones).
inline VerificationReport pullback_residuals(const GeometricImmersion& imm, const Grid& grid, const VerifyOptions& vo) {
    const DiffOptions opt = vo.diff(imm.dim());
    std::vector<std::array<double, 3>> vals(grid.size());
    parallel_for(grid.size(), vo.jobs, [&](std::size_t k) {
        const auto& x = grid.points[k];
        check_stencil_regular(imm, x, opt);
        const CVec p = imm.evaluator(x);
        const auto d = first_derivatives(imm.evaluator, x, opt);
        double lv = 0.0, kv = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i) {
            lv = std::max(lv, std::abs(liouville(p, d[i], imm.ambient)));
            for (std::size_t j = i + 1; j < d.size(); ++j) kv = std::max(kv, std::abs(kaehler(d[i], d[j], imm.ambient)));
        }
        const double q = imm.level == 0.0 ? 0.0 : std::abs(herm(p, p, imm.ambient).real() - imm.level);
        vals[k] = {lv, kv, q};
    });
    VerificationReport rep;
    const double bound = std::max(tol::kPullbackFloor, tol::order2(tol::kPullbackC, vo.h));
    const char* names[3] = {"liouville", "kaehler", "quadric"};
    for (int c = 0; c < 3; ++c) {
        if (c == 2 && imm.level == 0.0) continue;
        RVec v(grid.size());
        for (std::size_t k = 0; k < grid.size(); ++k) v[k] = vals[k][c];
        rep.add(names[c], ResidualStats::of(v, vo.h), c == 2 ? 1e-10 : bound);
    }
    return rep;
}

/// Relative deviation of the finite-difference Gram matrix from the warped-product
/// (or cone) formula; "metric_formula" and "metric_offdiag".
inline VerificationReport induced_metric_check(const GeometricImmersion& imm, const Grid& grid, const VerifyOptions& vo) {
    if (!imm.is_product() && !imm.is_cone()) throw DomainError("metric formula needs a product or cone kind");
    const DiffOptions opt = vo.diff(imm.dim());
    RVec dev(grid.size()), off(grid.size());
    parallel_for(grid.size(), vo.jobs, [&](std::size_t k) {
        const auto& x = grid.points[k];
        check_stencil_regular(imm, x, opt);
        const Eigen::MatrixXd g = gram_matrix(first_derivatives(imm.evaluator, x, opt), imm.ambient);
        const auto m = g.rows();
        Eigen::MatrixXd f = Eigen::MatrixXd::Zero(m, m);
        if (imm.is_product()) {
            const LegendreCurve& c = *imm.curve;
            const CPair gv = c.value(x[0]);
            const double sp = induced_speed(detail::curve_derivative_fd(c, x[0]), c.ambient);
            f(0, 0) = sp * sp;
            const int d1 = imm.block1->dim, d2 = imm.block2->dim;
            auto block_metric = [&](const LegendrianBlock& b, std::span<const double> p) {
                DiffOptions o{opt.order, RVec(opt.steps.begin(), opt.steps.begin() + b.dim)};
                return gram_matrix(first_derivatives(b.value, p, o), b.ambient);
            };
            if (d1 > 0) f.block(1, 1, d1, d1) = std::norm(gv[0]) * block_metric(*imm.block1, std::span(x).subspan(1, d1));
            if (d2 > 0)
                f.block(1 + d1, 1 + d1, d2, d2) =
                    std::norm(gv[1]) * block_metric(*imm.block2, std::span(x).subspan(1 + d1, d2));
        } else {
            const GeometricImmersion& l = *imm.link;
            const double r = x[0];
            DiffOptions o{opt.order, RVec(opt.steps.begin() + 1, opt.steps.end())};
            f(0, 0) = 1.0;
            f.block(1, 1, m - 1, m - 1) = r * r * gram_matrix(first_derivatives(l.evaluator, std::span(x).subspan(1), o), l.ambient);
        }
        const double scale = f.cwiseAbs().maxCoeff();
        dev[k] = (g - f).cwiseAbs().maxCoeff() / scale;
        double o = 0.0;
        for (Eigen::Index j = 1; j < m; ++j) o = std::max(o, std::abs(g(0, j)));
        off[k] = o;
    });
    VerificationReport rep;
    rep.add("metric_formula", ResidualStats::of(dev, vo.h), tol::order2(tol::kMetricC, vo.h));
    rep.add("metric_offdiag", ResidualStats::of(off, vo.h), std::max(tol::kPullbackFloor, tol::order2(tol::kMetricC, vo.h)));
    return rep;
}

struct AngleField {
    RVec beta;
    VerificationReport report;
};

/// Angle values on the grid; "angle_formula" against the product formula (products)
/// or the link angle (cones); "angle_constancy" when the immersion is claimed minimal.
inline AngleField angle_field(const GeometricImmersion& imm, const Grid& grid, const VerifyOptions& vo) {
    const DiffOptions opt = DiffOptions::uniform(imm.dim(), vo.h, vo.angle_order);
    AngleField out;
    out.beta = detail::map_grid(grid, vo.jobs, [&](const RVec& x) { return angle_at(imm, x, opt); });
    if (imm.is_product() || imm.is_cone()) {
        RVec dev(grid.size());
        parallel_for(grid.size(), vo.jobs, [&](std::size_t k) {
            const auto& x = grid.points[k];
            double ref;
            if (imm.is_product()) {
                ref = product_angle_closed_form(imm, x, opt);
            } else {
                DiffOptions o{opt.order, RVec(opt.steps.begin() + 1, opt.steps.end())};
                ref = angle_at(source_of(*imm.link), std::span(x).subspan(1), o);
            }
            dev[k] = angular_distance(out.beta[k], ref);
        });
        out.report.add("angle_formula", ResidualStats::of(dev, vo.h), 1e-7);
    }
    if (imm.minimal_claimed) {
        const double spread = detail::circular_spread(out.beta);
        out.report.add("angle_constancy", ResidualStats{spread, spread, grid.size(), vo.h}, 1e-8);
    }
    return out;
}

/// "mean_curvature" (max |H|, only for immersions claimed minimal) and "H_perp_Jphi".
inline VerificationReport mean_curvature_check(const GeometricImmersion& imm, const Grid& grid, const VerifyOptions& vo) {
    const DiffOptions opt = vo.diff(imm.dim());
    RVec hn(grid.size()), perp(grid.size());
    parallel_for(grid.size(), vo.jobs, [&](std::size_t k) {
        const Jet jet = evaluate_jet(imm, grid.points[k], opt);
        const FrameData fr = make_frame(jet.value, jet.d1, imm.ambient, imm.level);
        const CVec h = mean_curvature(jet, fr);
        hn[k] = fr.norm(h);
        perp[k] = imm.level == 0.0 ? 0.0 : std::abs(riemannian(h, scaled(jet.value, kI), imm.ambient));
    });
    VerificationReport rep;
    if (imm.minimal_claimed) rep.add("mean_curvature", ResidualStats::of(hn, vo.h), tol::order2_floor(tol::kMeanCurvatureC, vo.h, 2));
    if (imm.level != 0.0) rep.add("H_perp_Jphi", ResidualStats::of(perp, vo.h), tol::order2_floor(tol::kMeanCurvatureC, vo.h, 2));
    return rep;
}

/// |J grad beta - m H| at one point (m = chart dimension).
inline double gradient_identity_residual(const GeometricImmersion& imm, std::span<const double> x, const DiffOptions& opt) {
    const Jet jet = evaluate_jet(imm, x, opt);
    const FrameData fr = make_frame(jet.value, jet.d1, imm.ambient, imm.level);
    const CVec h = mean_curvature(jet, fr);
    const RVec db = angle_gradient(imm, x, opt);
    CVec d = j_grad_beta(fr, db);
    axpy(-static_cast<double>(fr.dim()), h, d);
    return fr.norm(d);
}

inline VerificationReport gradient_identity_check(const GeometricImmersion& imm, const Grid& grid, const VerifyOptions& vo) {
    const DiffOptions opt = vo.diff(imm.dim());
    const RVec r = detail::map_grid(grid, vo.jobs, [&](const RVec& x) { return gradient_identity_residual(imm, x, opt); });
    VerificationReport rep;
    rep.add("JgradBeta_nH", ResidualStats::of(r, vo.h), tol::order2_floor(tol::kGradientC, vo.h, 2));
    return rep;
}

/// "div_JH" = |Laplacian beta| / m on the grid. For products over C-minimal blocks the
/// one-dimensional closed form is evaluated as "eq10_crosscheck".
inline VerificationReport cminimality_residual(const GeometricImmersion& imm, const Grid& grid, const VerifyOptions& vo) {
    const DiffOptions opt = vo.diff(imm.dim());
    const bool eq10 = imm.is_product() && imm.block1->cminimal_claimed && imm.block2->cminimal_claimed;
    const double m = imm.dim();
    std::vector<std::array<double, 2>> vals(grid.size());
    parallel_for(grid.size(), vo.jobs, [&](std::size_t k) {
        const auto& x = grid.points[k];
        const double lap = laplacian_beta(imm, x, opt);
        vals[k] = {std::abs(lap) / m, eq10 ? std::abs(lap - product_laplacian_closed_form(*imm.curve, x[0])) : 0.0};
    });
    RVec a(grid.size()), b(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        a[k] = vals[k][0];
        b[k] = vals[k][1];
    }
    VerificationReport rep;
    rep.add("div_JH", ResidualStats::of(a, vo.h), tol::order2_floor(tol::kDivJHC, vo.h, 3));
    if (!imm.cminimal_claimed) rep.notes.push_back("immersion is not claimed C-minimal; div_JH is expected to fail");
    if (eq10) {
        rep.add("eq10_crosscheck", ResidualStats::of(b, vo.h), tol::order2_floor(tol::kEq10C, vo.h, 3));
    } else {
        rep.notes.push_back("one-dimensional Laplacian cross-check skipped (not a product over C-minimal blocks)");
    }
    return rep;
}

/// Cone vs link: pointwise angle transfer and the Laplacian of the angle on the r = 1 slice.
/// Uses order-4 stencils, a long radial step (the cone is linear in r) and link steps h.
inline VerificationReport cone_transfer_check(const GeometricImmersion& cone_imm, const Grid& link_grid,
                                              const VerifyOptions& vo, double radial_step = 0.1) {
    if (!cone_imm.is_cone()) throw DomainError("cone transfer needs a cone");
    const GeometricImmersion& link = *cone_imm.link;
    DiffOptions lopt = DiffOptions::uniform(link.dim(), vo.h, 4);
    DiffOptions copt = lopt;
    copt.steps.insert(copt.steps.begin(), radial_step);
    std::vector<std::array<double, 2>> vals(link_grid.size());
    parallel_for(link_grid.size(), vo.jobs, [&](std::size_t k) {
        const auto& p = link_grid.points[k];
        RVec x{1.0};
        x.insert(x.end(), p.begin(), p.end());
        const double a = angular_distance(angle_at(cone_imm, x, copt), angle_at(link, p, lopt));
        const double l = std::abs(laplacian_beta(cone_imm, x, copt) - laplacian_beta(link, p, lopt));
        vals[k] = {a, l};
    });
    RVec a(link_grid.size()), l(link_grid.size());
    for (std::size_t k = 0; k < link_grid.size(); ++k) {
        a[k] = vals[k][0];
        l[k] = vals[k][1];
    }
    VerificationReport rep;
    rep.add("cone_angle_transfer", ResidualStats::of(a, vo.h), 1e-10);
    rep.add("cone_laplacian_transfer", ResidualStats::of(l, vo.h), 1e-8);
    rep.meta_numbers["cone_radial_step"] = radial_step;
    return rep;
}

/// Runs every applicable local check on the grid. Cones additionally compare against
/// their link on the link part of the grid.
inline VerificationReport verify_local(const GeometricImmersion& imm, const Grid& grid, const VerifyOptions& vo) {
    VerificationReport rep;
    rep.merge(pullback_residuals(imm, grid, vo));
    if (imm.is_product() || imm.is_cone()) rep.merge(induced_metric_check(imm, grid, vo));
    rep.merge(angle_field(imm, grid, vo).report);
    rep.merge(mean_curvature_check(imm, grid, vo));
    rep.merge(gradient_identity_check(imm, grid, vo));
    rep.merge(cminimality_residual(imm, grid, vo));
    if (imm.is_cone()) {
        Grid link;
        for (const auto& x : grid.points) {
            RVec p(x.begin() + 1, x.end());
            if (std::find(link.points.begin(), link.points.end(), p) == link.points.end()) link.points.push_back(std::move(p));
        }
        rep.merge(cone_transfer_check(imm, link, vo));
    }
    rep.meta["kind"] = to_string(imm.kind);
    rep.meta_numbers["h"] = vo.h;
    rep.meta_numbers["order"] = vo.order;
    rep.meta_numbers["n_points"] = static_cast<double>(grid.size());
    return rep;
}

// --------------------------------------------------------------------------
// Quotient embeddings

struct EmbeddingOptions {
    std::size_t samples = 10000;
    std::uint64_t seed = 0;
    double chart_eps = 1e-3;
    double soundness_tol = 1e-9;
    double collision_tol = 1e-9;
    double y_extent = 2.0;
};

namespace detail {

inline RVec random_unit(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    RVec v(n);
    double r = 0.0;
    do {
        r = 0.0;
        for (auto& c : v) {
            c = nd(rng);
            r += c * c;
        }
    } while (r < 1e-12);
    r = std::sqrt(r);
    for (auto& c : v) c /= r;
    return v;
}

inline double vec_dist2(const RVec& a, const RVec& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return s;
}

inline double chart_distance(const ModelPoint& a, const ModelPoint& b) {
    const double ds = wrap_angle(a.s - b.s);
    return std::sqrt(ds * ds + vec_dist2(a.x, b.x) + vec_dist2(a.y, b.y));
}

}  // namespace detail

/// Identification soundness and sampled injectivity of the quotient embedding.
inline VerificationReport embedding_check(const GeometricImmersion& imm, const QuotientAction& q,
                                          const EmbeddingOptions& eo = {}) {
    check_quotient_shape(imm, q);
    const bool hyperbolic = q.kind == QuotientKind::Z2_hyperbolic;
    const std::size_t nx = imm.block1->dim + 1, ny = imm.block2->dim + 1;
    std::mt19937_64 rng(eo.seed);
    std::uniform_real_distribution<double> us(0.0, 2.0 * kPi);
    std::uniform_real_distribution<double> uy(-eo.y_extent, eo.y_extent);
    auto sample = [&]() {
        ModelPoint m;
        m.s = us(rng);
        m.x = detail::random_unit(nx, rng);
        if (hyperbolic) {
            RVec yh(ny - 1);
            for (auto& c : yh) c = uy(rng);
            m.y = imm.block2->model_point(yh);
        } else {
            m.y = detail::random_unit(ny, rng);
        }
        return m;
    };
    auto phi = [&](const ModelPoint& m) { return imm.model(m.s, m.x, m.y); };
    auto sep = [&](const ModelPoint& a, const ModelPoint& b) {
        return projective_separation(phi(a), phi(b), imm.ambient);
    };
    // Nearby point at chart distance ~ eps in a random direction (stays on the model spaces).
    auto perturb = [&](const ModelPoint& m, double eps) {
        ModelPoint r = m;
        const RVec dir = detail::random_unit(1 + nx + ny, rng);
        r.s += eps * dir[0];
        for (std::size_t k = 0; k < nx; ++k) r.x[k] += eps * dir[1 + k];
        double nrm = 0.0;
        for (double c : r.x) nrm += c * c;
        for (auto& c : r.x) c /= std::sqrt(nrm);
        if (hyperbolic) {
            RVec yh(r.y.begin(), r.y.end() - 1);
            for (std::size_t k = 0; k + 1 < ny; ++k) yh[k] += eps * dir[1 + nx + k];
            r.y = imm.block2->model_point(yh);
        } else {
            for (std::size_t k = 0; k < ny; ++k) r.y[k] += eps * dir[1 + nx + k];
            nrm = 0.0;
            for (double c : r.y) nrm += c * c;
            for (auto& c : r.y) c /= std::sqrt(nrm);
        }
        return r;
    };

    RVec sound;
    sound.reserve(eo.samples);
    for (std::size_t k = 0; k < eo.samples; ++k) {
        const ModelPoint m = sample();
        double worst = 0.0;
        for (std::size_t g = 1; g < q.elements.size(); ++g) worst = std::max(worst, sep(q.elements[g](m), m));
        sound.push_back(worst);
    }

    RVec seps;
    std::size_t collisions = 0, skipped = 0;
    std::uniform_real_distribution<double> ue(std::log(eo.chart_eps), std::log(10.0 * eo.chart_eps));
    std::uniform_int_distribution<std::size_t> ug(0, q.elements.size() - 1);
    for (std::size_t k = 0; seps.size() < eo.samples && k < 4 * eo.samples; ++k) {
        const ModelPoint a = sample();
        ModelPoint b;
        if (k % 2 == 0) {
            b = sample();
        } else {
            b = perturb(q.elements[ug(rng)](a), std::exp(ue(rng)));
        }
        double orbit = std::numeric_limits<double>::infinity();
        for (const auto& g : q.elements) orbit = std::min(orbit, detail::chart_distance(a, g(b)));
        if (orbit <= 0.5 * eo.chart_eps) {
            ++skipped;
            continue;
        }
        const double s = sep(a, b);
        if (s <= eo.collision_tol) ++collisions;
        seps.push_back(s);
    }
    VerificationReport rep;
    rep.add("identification", ResidualStats::of(sound, 0.0), eo.soundness_tol);
    const double min_sep = seps.empty() ? 0.0 : *std::min_element(seps.begin(), seps.end());
    ResidualStats inj{static_cast<double>(collisions), 0.0, seps.size(), 0.0};
    rep.residuals["injectivity_collisions"] = inj;
    rep.tolerances["injectivity_collisions"] = 0.0;
    if (collisions > 0) {
        rep.verdicts["injectivity"] = Verdict::Fail;
    } else if (min_sep < 10.0 * eo.collision_tol) {
        rep.verdicts["injectivity"] = Verdict::Inconclusive;
    } else {
        rep.verdicts["injectivity"] = Verdict::Pass;
    }
    rep.residuals["injectivity"] = ResidualStats{min_sep, 0.0, seps.size(), 0.0};
    rep.tolerances["injectivity"] = 10.0 * eo.collision_tol;
    rep.meta_numbers["min_separation"] = min_sep;
    rep.meta_numbers["pairs_checked"] = static_cast<double>(seps.size());
    rep.meta_numbers["pairs_skipped_same_orbit"] = static_cast<double>(skipped);
    rep.meta_numbers["seed"] = static_cast<double>(eo.seed);
    rep.notes.push_back((collisions ? std::to_string(collisions) + " collisions" : std::string("no collision")) +
                        " found among " + std::to_string(seps.size()) + " sampled distinct-orbit pairs");
    return rep;
}

// --------------------------------------------------------------------------
// Projected periodicity

struct ProjectedPeriodicity {
    bool certified = false;
    bool degenerate = false;
    std::int64_t m = 0;             ///< number of moduli periods (or 1 in the round case)
    double closing_phase = 0.0;     ///< nu with gamma(m T) = e^{i nu} gamma(0)
    double projected_period = 0.0;  ///< A = m T, or 2 pi / |rate1 - rate2| in the round case
    std::optional<Rational> certificate;
    std::string verdict;  ///< "certified rational within tolerance" | "no certificate found"
};

inline ProjectedPeriodicity projected_periodicity(const CurveTrajectory& tr, const PeriodReport& rep) {
    ProjectedPeriodicity out;
    if (rep.degenerate) {
        // Constant moduli: gamma_j = rho_j e^{i rate_j t}; projectively closed after one turn of the difference.
        out.degenerate = true;
        out.certified = true;
        out.m = 1;
        out.projected_period = 2.0 * kPi / std::abs(rep.phase_rate1 - rep.phase_rate2);
        out.closing_phase = wrap_angle(rep.phase_rate1 * out.projected_period);
        out.verdict = "certified rational within tolerance";
        return out;
    }
    const double t = rep.period;
    const double d1 = tr.phase_at(0, t) - tr.phase_at(0, 0.0);
    const double d2 = tr.phase_at(1, t) - tr.phase_at(1, 0.0);
    const double x = (d2 - d1) / (2.0 * kPi);
    out.certificate = rational_certificate(x, rep.q_max, rep.tol);
    if (!out.certificate) {
        out.verdict = "no certificate found";
        return out;
    }
    out.certified = true;
    out.m = out.certificate->q;
    out.projected_period = static_cast<double>(out.m) * t;
    out.closing_phase = wrap_angle(static_cast<double>(out.m) * d1);
    out.verdict = "certified rational within tolerance";
    return out;
}

// --------------------------------------------------------------------------
// Convergence order from an h-sequence

/// log2 of successive ratios for steps halving each time.
inline RVec observed_orders(std::span<const double> residuals) {
    RVec out;
    for (std::size_t k = 0; k + 1 < residuals.size(); ++k) out.push_back(std::log2(residuals[k] / residuals[k + 1]));
    return out;
}

}  // namespace hminlag
