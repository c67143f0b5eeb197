#pragma once

// Legendre curves in S^3 and in anti-De Sitter H_1^3: the C-minimality ODE
// family, fixed-step RK4 trajectories with dense output, the closed-form
// families, conserved quantities, periods and rotation numbers, and the
// explicit quadrature parametrization of the indefinite mu = 0 solutions.

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ambient.hpp"
#include "errors.hpp"
#include "numerics.hpp"
#include "rational.hpp"

namespace hminlag {

using CPair = std::array<Complex, 2>;

inline CPair operator+(const CPair& a, const CPair& b) { return {a[0] + b[0], a[1] + b[1]}; }
inline CPair operator-(const CPair& a, const CPair& b) { return {a[0] - b[0], a[1] - b[1]}; }
inline CPair operator*(Complex s, const CPair& a) { return {s * a[0], s * a[1]}; }
inline CPair operator*(double s, const CPair& a) { return {s * a[0], s * a[1]}; }
inline double pair_norm(const CPair& a) { return std::sqrt(std::norm(a[0]) + std::norm(a[1])); }

/// z^n by repeated multiplication (exact at z = 0, unlike std::pow).
inline Complex ipow(Complex z, int n) {
    Complex r{1.0, 0.0};
    for (int k = 0; k < n; ++k) r *= z;
    return r;
}

inline double ipow(double x, int n) {
    if (n < 0) return 1.0 / ipow(x, -n);
    double r = 1.0;
    for (int k = 0; k < n; ++k) r *= x;
    return r;
}

inline Complex pair_herm(const CPair& a, const CPair& b, const Signature& sig) {
    return herm(std::span<const Complex>(a), std::span<const Complex>(b), sig);
}

/// Speed of a tangent vector in the metric induced by the (possibly Lorentzian) form.
inline double induced_speed(const CPair& deriv, const Signature& sig) {
    return std::sqrt(std::max(0.0, pair_herm(deriv, deriv, sig).real()));
}

// --------------------------------------------------------------------------
// ODE family

struct CurveSpec {
    Signature ambient = Signature::definite(2);
    int n1 = 0;
    int n2 = 0;
    double mu = 0.0;
    CPair init{Complex{1.0, 0.0}, Complex{0.0, 0.0}};

    /// Real initial condition (cos theta, sin theta), theta in (0, pi/2).
    static CurveSpec sphere(int n1, int n2, double mu, double theta) {
        if (!(theta > 0.0 && theta < kPi / 2)) throw DomainError("theta out of (0, pi/2)");
        CurveSpec s{Signature::definite(2), n1, n2, mu, {std::cos(theta), std::sin(theta)}};
        s.validate();
        return s;
    }

    /// Real initial condition (sinh rho, cosh rho), rho > 0.
    static CurveSpec ads(int n1, int n2, double mu, double rho) {
        if (!(rho > 0.0)) throw DomainError("rho must be > 0");
        CurveSpec s{Signature::lorentzian(2), n1, n2, mu, {std::sinh(rho), std::cosh(rho)}};
        s.validate();
        return s;
    }

    bool is_sphere() const { return ambient.kind == SignatureKind::Definite; }
    double level() const { return ambient.quadric_level(); }
    bool has_real_init() const { return init[0].imag() == 0.0 && init[1].imag() == 0.0; }

    void validate() const {
        if (ambient.dim_complex != 2) throw DimensionError("curve ambient must be C^2");
        if (n1 < 0 || n2 < 0) throw DomainError("n1, n2 must be nonnegative");
        if (!std::isfinite(mu)) throw DomainError("mu must be finite");
        const double q = pair_herm(init, init, ambient).real();
        if (std::abs(q - level()) > 1e-12) {
            throw DomainError("initial condition is off the quadric (herm = " + std::to_string(q) + ")");
        }
    }
};

/// Right-hand side of the reduced C-minimality ODE in polynomial form.
/// Sphere:  g1' =  i e^{i mu t} conj(g1)^{n1}   conj(g2)^{n2+1},
///          g2' = -i e^{i mu t} conj(g1)^{n1+1} conj(g2)^{n2}.
/// AdS: same with a plus sign in both components.
inline CPair ode_rhs(const CurveSpec& spec, double t, const CPair& y) {
    const Complex e = std::polar(1.0, spec.mu * t);
    const Complex c1 = std::conj(y[0]);
    const Complex c2 = std::conj(y[1]);
    const Complex p1 = ipow(c1, spec.n1);
    const Complex p2 = ipow(c2, spec.n2);
    const Complex d1 = kI * e * p1 * p2 * c2;
    const Complex d2 = kI * e * p1 * c1 * p2;
    return {d1, spec.is_sphere() ? -d2 : d2};
}

inline CPair rk4_step(const CurveSpec& spec, double t, const CPair& y, double h) {
    const CPair k1 = ode_rhs(spec, t, y);
    const CPair k2 = ode_rhs(spec, t + 0.5 * h, y + (0.5 * h) * k1);
    const CPair k3 = ode_rhs(spec, t + 0.5 * h, y + (0.5 * h) * k2);
    const CPair k4 = ode_rhs(spec, t + h, y + h * k3);
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Legendre (or Legendrian) angle of a curve: arg((g1 g2' - g2 g1') / |g'|).
inline double legendre_angle(const CPair& value, const CPair& deriv, const Signature& sig) {
    const double speed2 = pair_herm(deriv, deriv, sig).real();
    if (!(speed2 > 1e-300)) throw SingularPointError("curve", "legendre_angle: zero speed");
    const Complex w = value[0] * deriv[1] - value[1] * deriv[0];
    if (std::abs(w) == 0.0) throw SingularPointError("curve", "legendre_angle: degenerate frame");
    return std::arg(w);
}

// --------------------------------------------------------------------------
// Trajectories

class CurveTrajectory;
CurveTrajectory integrate(const CurveSpec& spec, double t_begin, double t_end, double step);

/// Numerically integrated Legendre curve on a uniform grid through t = 0.
class CurveTrajectory {
public:
    const CurveSpec& spec() const noexcept { return spec_; }
    std::span<const double> ts() const noexcept { return ts_; }
    std::span<const CPair> values() const noexcept { return values_; }
    std::span<const CPair> derivs() const noexcept { return derivs_; }
    std::span<const double> rho1() const noexcept { return rho_[0]; }
    std::span<const double> rho2() const noexcept { return rho_[1]; }
    std::span<const double> nu1() const noexcept { return nu_[0]; }
    std::span<const double> nu2() const noexcept { return nu_[1]; }
    std::span<const double> rho(int j) const { return rho_.at(j); }
    std::span<const double> nu(int j) const { return nu_.at(j); }
    double step() const noexcept { return step_; }
    std::size_t size() const noexcept { return ts_.size(); }
    std::size_t origin_index() const noexcept { return origin_; }
    double t_begin() const noexcept { return ts_.front(); }
    double t_end() const noexcept { return ts_.back(); }
    /// Estimated global error of the terminal states from the half-step rerun.
    double richardson_error() const noexcept { return richardson_error_; }

    /// Dense output: one RK4 step of size t - t_k from the node t_k <= t.
    /// Continuous in t and polynomial between nodes.
    CPair at(double t) const {
        const std::size_t k = node_below(t);
        const double dt = t - ts_[k];
        if (dt == 0.0) return values_[k];
        return rk4_step(spec_, ts_[k], values_[k], dt);
    }

    CPair derivative_at(double t) const { return ode_rhs(spec_, t, at(t)); }

    /// Continuously unwrapped argument of component j at an arbitrary time.
    double phase_at(int j, double t) const {
        const std::size_t k = node_below(t);
        const CPair y = at(t);
        return nu_[j][k] + wrap_angle(std::arg(y[j]) - nu_[j][k]);
    }

private:
    friend CurveTrajectory integrate(const CurveSpec&, double, double, double);

    std::size_t node_below(double t) const {
        const double slack = 1e-9 * step_;
        if (!(t >= ts_.front() - slack && t <= ts_.back() + slack)) {
            throw DomainError("time " + std::to_string(t) + " outside trajectory range [" +
                              std::to_string(ts_.front()) + ", " + std::to_string(ts_.back()) + "]");
        }
        double idx = std::floor((t - ts_.front()) / step_);
        if (idx < 0) idx = 0;
        auto k = static_cast<std::size_t>(idx);
        if (k + 1 >= ts_.size()) k = ts_.size() - 2;
        return k;
    }

    CurveSpec spec_;
    RVec ts_;
    std::vector<CPair> values_;
    std::vector<CPair> derivs_;
    std::array<RVec, 2> rho_;
    std::array<RVec, 2> nu_;
    double step_ = 0.0;
    std::size_t origin_ = 0;
    double richardson_error_ = 0.0;
};

namespace detail {

inline void check_drift(const CurveSpec& spec, const CPair& y, double t) {
    const double q = pair_herm(y, y, spec.ambient).real();
    if (std::abs(q - spec.level()) > 1e-6) {
        std::ostringstream msg;
        msg << std::setprecision(3) << "quadric drift " << std::abs(q - spec.level()) << " at t = " << t
            << " exceeds 1e-6; use a smaller step";
        if (!spec.is_sphere()) msg << " or a shorter interval (max modulus " << pair_norm(y) << ", the solution may be escaping)";
        throw IntegrationError(msg.str());
    }
}

// States at the two ends of [t_begin, t_end] integrated with a given step.
inline std::pair<CPair, CPair> integrate_ends(const CurveSpec& spec, std::size_t n_back, std::size_t n_fwd,
                                              double step) {
    CPair fwd = spec.init;
    for (std::size_t k = 0; k < n_fwd; ++k) fwd = rk4_step(spec, k * step, fwd, step);
    CPair back = spec.init;
    for (std::size_t k = 0; k < n_back; ++k) back = rk4_step(spec, -(double)k * step, back, -step);
    return {back, fwd};
}

}  // namespace detail

/// Classical RK4 on a uniform grid t_k = k * step covering [t_begin, t_end],
/// with t_begin <= 0 <= t_end and the initial condition at t = 0.
inline CurveTrajectory integrate(const CurveSpec& spec, double t_begin, double t_end, double step) {
    spec.validate();
    if (!(step > 0.0) || step > 1e-2) throw DomainError("integration step must lie in (0, 1e-2]");
    if (!std::isfinite(t_begin) || !std::isfinite(t_end) || t_begin > 0.0 || t_end < 0.0) {
        throw DomainError("integration range must be finite and contain t = 0");
    }
    const auto n_fwd = static_cast<std::size_t>(std::ceil(t_end / step - 1e-9));
    const auto n_back = static_cast<std::size_t>(std::ceil(-t_begin / step - 1e-9));
    const std::size_t n = n_back + n_fwd + 1;

    CurveTrajectory tr;
    tr.spec_ = spec;
    tr.step_ = step;
    tr.origin_ = n_back;
    tr.ts_.resize(n);
    tr.values_.resize(n);
    for (std::size_t k = 0; k < n; ++k) tr.ts_[k] = (static_cast<double>(k) - static_cast<double>(n_back)) * step;

    tr.values_[n_back] = spec.init;
    for (std::size_t k = n_back; k + 1 < n; ++k) {
        tr.values_[k + 1] = rk4_step(spec, tr.ts_[k], tr.values_[k], step);
        detail::check_drift(spec, tr.values_[k + 1], tr.ts_[k + 1]);
    }
    for (std::size_t k = n_back; k > 0; --k) {
        tr.values_[k - 1] = rk4_step(spec, tr.ts_[k], tr.values_[k], -step);
        detail::check_drift(spec, tr.values_[k - 1], tr.ts_[k - 1]);
    }

    tr.derivs_.resize(n);
    for (int j = 0; j < 2; ++j) {
        tr.rho_[j].resize(n);
        tr.nu_[j].resize(n);
    }
    for (std::size_t k = 0; k < n; ++k) {
        tr.derivs_[k] = ode_rhs(spec, tr.ts_[k], tr.values_[k]);
        for (int j = 0; j < 2; ++j) tr.rho_[j][k] = std::abs(tr.values_[k][j]);
    }

    // Nearest-branch unwrapping outward from the origin.
    for (int j = 0; j < 2; ++j) {
        auto& nu = tr.nu_[j];
        nu[n_back] = std::arg(spec.init[j]);
        auto advance = [&](std::size_t from, std::size_t to) {
            const double raw = std::arg(tr.values_[to][j]);
            const double d = wrap_angle(raw - nu[from]);
            if (tr.rho_[j][to] > 1e-8 && tr.rho_[j][from] > 1e-8 && std::abs(d) >= kPi / 2) {
                throw IntegrationError("phase of component " + std::to_string(j + 1) +
                                       " advances by more than pi/2 per step near t = " +
                                       std::to_string(tr.ts_[to]) + "; use a smaller step");
            }
            nu[to] = tr.rho_[j][to] > 1e-8 ? nu[from] + d : nu[from];
        };
        for (std::size_t k = n_back; k + 1 < n; ++k) advance(k, k + 1);
        for (std::size_t k = n_back; k > 0; --k) advance(k, k - 1);
    }

    // Half-step rerun; the h-solution error is ~16/15 of the difference.
    const auto [back2, fwd2] = detail::integrate_ends(spec, 2 * n_back, 2 * n_fwd, 0.5 * step);
    const double e_f = pair_norm(tr.values_.back() - fwd2);
    const double e_b = pair_norm(tr.values_.front() - back2);
    tr.richardson_error_ = std::max(e_f, e_b) * 16.0 / 15.0;
    return tr;
}

/// Trajectory on [min(0, t_end), max(0, t_end)].
inline CurveTrajectory integrate(const CurveSpec& spec, double t_end, double step) {
    return integrate(spec, std::min(0.0, t_end), std::max(0.0, t_end), step);
}

/// Last grid time in [0, t_end] before max |state_j|^2 exceeds `bound`. Anti-De Sitter
/// solutions typically leave every compact set (many in finite time).
inline double exit_time(const CurveSpec& spec, double t_end, double step, double bound) {
    spec.validate();
    if (!(step > 0.0) || !(t_end >= 0.0)) throw DomainError("exit_time needs step > 0 and t_end >= 0");
    CPair y = spec.init;
    const auto n = static_cast<std::size_t>(std::ceil(t_end / step - 1e-9));
    for (std::size_t k = 0; k < n; ++k) {
        const CPair next = rk4_step(spec, k * step, y, step);
        if (!(std::max(std::norm(next[0]), std::norm(next[1])) <= bound)) return k * step;
        y = next;
    }
    return n * step;
}

// Pointwise invariants of a trajectory. Each returns the maximum over the grid.

inline double quadric_drift(const CurveTrajectory& tr) {
    double m = 0.0;
    for (const auto& y : tr.values())
        m = std::max(m, std::abs(pair_herm(y, y, tr.spec().ambient).real() - tr.spec().level()));
    return m;
}

/// Legendre condition Lambda(gamma') = Im herm(gamma', gamma) = 0.
inline double legendre_residual(const CurveTrajectory& tr) {
    double m = 0.0;
    for (std::size_t k = 0; k < tr.size(); ++k)
        m = std::max(m, std::abs(pair_herm(tr.derivs()[k], tr.values()[k], tr.spec().ambient).imag()));
    return m;
}

/// |gamma'| - rho1^{n1} rho2^{n2}.
inline double gauge_residual(const CurveTrajectory& tr) {
    const auto& s = tr.spec();
    double m = 0.0;
    for (std::size_t k = 0; k < tr.size(); ++k) {
        const double speed = induced_speed(tr.derivs()[k], s.ambient);
        m = std::max(m, std::abs(speed - ipow(tr.rho1()[k], s.n1) * ipow(tr.rho2()[k], s.n2)));
    }
    return m;
}

/// Drift of Re(g1^{n1+1} g2^{n2+1}); conserved when mu = 0.
inline double first_integral_drift(const CurveTrajectory& tr) {
    const auto& s = tr.spec();
    auto f = [&](const CPair& y) { return (ipow(y[0], s.n1 + 1) * ipow(y[1], s.n2 + 1)).real(); };
    const double ref = f(s.init);
    double m = 0.0;
    for (const auto& y : tr.values()) m = std::max(m, std::abs(f(y) - ref));
    return m;
}

/// Drift of beta + n1 nu1 + n2 nu2 - mu t (on the circle).
inline double angle_linearity_drift(const CurveTrajectory& tr) {
    const auto& s = tr.spec();
    auto g = [&](std::size_t k) {
        return legendre_angle(tr.values()[k], tr.derivs()[k], s.ambient) + s.n1 * tr.nu1()[k] +
               s.n2 * tr.nu2()[k] - s.mu * tr.ts()[k];
    };
    const double ref = g(tr.origin_index());
    double m = 0.0;
    for (std::size_t k = 0; k < tr.size(); ++k) m = std::max(m, angular_distance(g(k), ref));
    return m;
}

/// max |conj(gamma(t)) - gamma(-t)| over the symmetric part of the grid.
inline double time_symmetry_residual(const CurveTrajectory& tr) {
    if (!tr.spec().has_real_init()) throw DomainError("time symmetry needs a real initial condition");
    const std::size_t o = tr.origin_index();
    const std::size_t reach = std::min(o, tr.size() - 1 - o);
    double m = 0.0;
    for (std::size_t k = 1; k <= reach; ++k) {
        const CPair& a = tr.values()[o + k];
        const CPair& b = tr.values()[o - k];
        m = std::max(m, pair_norm(CPair{std::conj(a[0]), std::conj(a[1])} - b));
    }
    return m;
}

/// max |values - (rho1 e^{i nu1}, rho2 e^{i nu2})| where the moduli exceed 1e-8.
inline double polar_consistency(const CurveTrajectory& tr) {
    double m = 0.0;
    for (std::size_t k = 0; k < tr.size(); ++k)
        for (int j = 0; j < 2; ++j)
            if (tr.rho(j)[k] > 1e-8)
                m = std::max(m, std::abs(tr.values()[k][j] - std::polar(tr.rho(j)[k], tr.nu(j)[k])));
    return m;
}

/// CSV: t,re1,im1,re2,im2,rho1,rho2,nu1,nu2 with 17 significant digits.
inline void write_trajectory_csv(std::ostream& os, const CurveTrajectory& tr) {
    const auto old_prec = os.precision(17);
    os << "t,re1,im1,re2,im2,rho1,rho2,nu1,nu2\n";
    for (std::size_t k = 0; k < tr.size(); ++k) {
        const CPair& y = tr.values()[k];
        os << tr.ts()[k] << ',' << y[0].real() << ',' << y[0].imag() << ',' << y[1].real() << ','
           << y[1].imag() << ',' << tr.rho1()[k] << ',' << tr.rho2()[k] << ',' << tr.nu1()[k] << ','
           << tr.nu2()[k] << '\n';
    }
    os.precision(old_prec);
}

// --------------------------------------------------------------------------
// Closed-form families

/// Angle at which the constant-moduli sphere curve is minimal (mu = 0).
inline double delta0(int n1, int n2) { return std::atan(std::sqrt((n2 + 1.0) / (n1 + 1.0))); }

/// Frequencies (a, b) with gamma_delta(t) = (c e^{i a t}, s e^{-i b t}).
inline std::pair<double, double> gamma_delta_frequencies(double delta, int n1, int n2) {
    if (!(delta > 0.0 && delta < kPi / 2)) throw DomainError("delta out of (0, pi/2)");
    const double c = std::cos(delta), s = std::sin(delta);
    return {ipow(c, n1 - 1) * ipow(s, n2 + 1), ipow(c, n1 + 1) * ipow(s, n2 - 1)};
}

inline CPair gamma_delta(double delta, int n1, int n2, double t) {
    const auto [a, b] = gamma_delta_frequencies(delta, n1, n2);
    return {std::polar(std::cos(delta), a * t), std::polar(std::sin(delta), -b * t)};
}

inline CPair gamma_delta_derivative(double delta, int n1, int n2, double t) {
    const auto [a, b] = gamma_delta_frequencies(delta, n1, n2);
    const CPair g = gamma_delta(delta, n1, n2, t);
    return {kI * a * g[0], -kI * b * g[1]};
}

inline double gamma_delta_mu(double delta, int n1, int n2) {
    if (!(delta > 0.0 && delta < kPi / 2)) throw DomainError("delta out of (0, pi/2)");
    const double c = std::cos(delta), s = std::sin(delta);
    return ipow(c, n1 - 1) * ipow(s, n2 - 1) * ((n1 + 1) * s * s - (n2 + 1) * c * c);
}

/// Frequencies (a, b) with alpha_rho(t) = (sh e^{i a t}, ch e^{i b t}).
inline std::pair<double, double> alpha_rho_frequencies(double rho, int n1, int n2) {
    if (!(rho > 0.0)) throw DomainError("rho must be > 0");
    const double sh = std::sinh(rho), ch = std::cosh(rho);
    return {ipow(sh, n1 - 1) * ipow(ch, n2 + 1), ipow(sh, n1 + 1) * ipow(ch, n2 - 1)};
}

inline CPair alpha_rho(double rho, int n1, int n2, double t) {
    const auto [a, b] = alpha_rho_frequencies(rho, n1, n2);
    return {std::polar(std::sinh(rho), a * t), std::polar(std::cosh(rho), b * t)};
}

inline CPair alpha_rho_derivative(double rho, int n1, int n2, double t) {
    const auto [a, b] = alpha_rho_frequencies(rho, n1, n2);
    const CPair g = alpha_rho(rho, n1, n2, t);
    return {kI * a * g[0], kI * b * g[1]};
}

inline double alpha_rho_mu(double rho, int n1, int n2) {
    if (!(rho > 0.0)) throw DomainError("rho must be > 0");
    const double sh = std::sinh(rho), ch = std::cosh(rho);
    return ipow(sh, n1 - 1) * ipow(ch, n2 - 1) * ((n1 + 1) * ch * ch + (n2 + 1) * sh * sh);
}

// --------------------------------------------------------------------------
// Period, rotation numbers, closedness (mu = 0, sphere, real initial data)

struct PeriodDetection {
    bool degenerate = false;  ///< constant moduli (the round case theta = delta0)
    double period = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {
inline void require_mu0_sphere(const CurveTrajectory& tr) {
    const auto& s = tr.spec();
    if (!s.is_sphere() || s.mu != 0.0 || !s.has_real_init()) {
        throw DomainError("period analysis needs a mu = 0 sphere curve with real initial data");
    }
}
inline double modulus_rate(const CurveTrajectory& tr, double t) {
    const CPair y = tr.at(t);
    return 2.0 * (ode_rhs(tr.spec(), t, y)[0] * std::conj(y[0])).real();
}
}  // namespace detail

/// Period of the moduli: the second zero of d/dt |gamma_1|^2 after t = 0.
inline PeriodDetection detect_period(const CurveTrajectory& tr) {
    detail::require_mu0_sphere(tr);
    const std::size_t o = tr.origin_index();
    const double r0 = tr.rho1()[o] * tr.rho1()[o];
    double amp = 0.0;
    for (std::size_t k = o; k < tr.size(); ++k) amp = std::max(amp, std::abs(tr.rho1()[k] * tr.rho1()[k] - r0));
    if (amp < 1e-9) return {true, std::numeric_limits<double>::quiet_NaN()};

    int zeros = 0;
    double prev = detail::modulus_rate(tr, tr.ts()[o + 1]);
    for (std::size_t k = o + 2; k < tr.size(); ++k) {
        const double cur = detail::modulus_rate(tr, tr.ts()[k]);
        if ((prev < 0.0 && cur >= 0.0) || (prev > 0.0 && cur <= 0.0)) {
            if (++zeros == 2) {
                double lo = tr.ts()[k - 1], hi = tr.ts()[k];
                double flo = prev;
                while (hi - lo > 1e-12) {
                    const double mid = 0.5 * (lo + hi);
                    const double fm = detail::modulus_rate(tr, mid);
                    if ((fm < 0.0) == (flo < 0.0)) {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                return {false, 0.5 * (lo + hi)};
            }
        }
        prev = cur;
    }
    throw InconclusiveError("no full modulus period found before t = " + std::to_string(tr.t_end()) +
                            "; extend t_end");
}

struct RotationNumbers {
    double rot1 = 0.0;
    double rot2 = 0.0;
    double gamma_rot = 0.0;
};

/// Normalized integrals K/(2 pi) int_0^T dt / rho_j^2 and K/(2 pi) int_0^T dt / (rho1^2 rho2^2),
/// K = Re(g1(0)^{n1+1} g2(0)^{n2+1}), by composite Simpson on a uniform grid over [0, T]
/// sampled from the dense output (spacing <= the trajectory step).
inline RotationNumbers rotation_numbers(const CurveTrajectory& tr, double period) {
    detail::require_mu0_sphere(tr);
    if (!(period > 0.0) || period > tr.t_end()) throw DomainError("period outside the trajectory range");
    const auto& s = tr.spec();
    const double k0 = (ipow(s.init[0], s.n1 + 1) * ipow(s.init[1], s.n2 + 1)).real();
    std::size_t m = static_cast<std::size_t>(std::ceil(period / tr.step()));
    if (m % 2 == 1) ++m;
    const double dx = period / static_cast<double>(m);
    RVec f1(m + 1), f2(m + 1), f12(m + 1);
    for (std::size_t k = 0; k <= m; ++k) {
        const CPair y = tr.at(k * dx);
        const double r1 = std::norm(y[0]), r2 = std::norm(y[1]);
        f1[k] = 1.0 / r1;
        f2[k] = 1.0 / r2;
        f12[k] = 1.0 / (r1 * r2);
    }
    const double scale = k0 / (2.0 * kPi);
    RotationNumbers r{scale * composite_simpson(f1, dx), scale * composite_simpson(f2, dx),
                      scale * composite_simpson(f12, dx)};
    if (std::abs(r.gamma_rot - r.rot1 - r.rot2) > 1e-8) {
        throw NumericalQualityError("rotation numbers inconsistent: gamma_rot - rot1 - rot2 = " +
                                    std::to_string(r.gamma_rot - r.rot1 - r.rot2));
    }
    return r;
}

struct PeriodReport {
    bool degenerate = false;
    double period = std::numeric_limits<double>::quiet_NaN();
    double rot1 = std::numeric_limits<double>::quiet_NaN();
    double rot2 = std::numeric_limits<double>::quiet_NaN();
    double gamma_rot = std::numeric_limits<double>::quiet_NaN();
    /// Degenerate case only: measured phase rates nu_j' and their ratio.
    double phase_rate1 = std::numeric_limits<double>::quiet_NaN();
    double phase_rate2 = std::numeric_limits<double>::quiet_NaN();
    std::optional<Rational> cert1;
    std::optional<Rational> cert2;
    std::optional<Rational> cert_gamma;
    std::optional<Rational> cert_ratio;  ///< degenerate case: nu1'/nu2'
    bool closed_curve = false;
    bool projected_periodic = false;
    std::int64_t q_max = 64;
    double tol = 1e-7;
};

inline PeriodReport analyze_period(const CurveTrajectory& tr, std::int64_t q_max = 64, double tol = 1e-7) {
    PeriodReport rep;
    rep.q_max = q_max;
    rep.tol = tol;
    const PeriodDetection det = detect_period(tr);
    if (det.degenerate) {
        // Constant moduli: phases are linear in t; read the rates off the trajectory.
        rep.degenerate = true;
        const std::size_t o = tr.origin_index();
        const double span_t = tr.t_end() - tr.ts()[o];
        rep.phase_rate1 = (tr.nu1().back() - tr.nu1()[o]) / span_t;
        rep.phase_rate2 = (tr.nu2().back() - tr.nu2()[o]) / span_t;
        rep.cert_ratio = rational_certificate(rep.phase_rate1 / rep.phase_rate2, q_max, tol);
        rep.closed_curve = rep.cert_ratio.has_value();
        rep.projected_periodic = true;
        return rep;
    }
    rep.period = det.period;
    const RotationNumbers rn = rotation_numbers(tr, det.period);
    rep.rot1 = rn.rot1;
    rep.rot2 = rn.rot2;
    rep.gamma_rot = rn.gamma_rot;
    rep.cert1 = rational_certificate(rn.rot1, q_max, tol);
    rep.cert2 = rational_certificate(rn.rot2, q_max, tol);
    rep.cert_gamma = rational_certificate(rn.gamma_rot, q_max, tol);
    rep.closed_curve = rep.cert1.has_value() && rep.cert2.has_value();
    rep.projected_periodic = rep.cert_gamma.has_value();
    return rep;
}

// --------------------------------------------------------------------------
// Quadrature parametrization of the indefinite mu = 0 solutions

namespace detail {

/// theta_j'(x) = K / ((x^2 + a_j) sqrt(Q(x^2))) with Q(y) = (P(y) - P(0)) / y,
/// P(y) = (y + sh^2)^{n1+1} (y + ch^2)^{n2+1}, K = sh^{n1+1} ch^{n2+1}.
class ThetaIntegrand {
public:
    ThetaIntegrand(double rho, int n1, int n2) {
        if (!(rho > 0.0)) throw DomainError("rho must be > 0");
        if (n1 < 0 || n2 < 0) throw DomainError("n1, n2 must be nonnegative");
        const double sh = std::sinh(rho), ch = std::cosh(rho);
        a_ = {sh * sh, ch * ch};
        k_ = ipow(sh, n1 + 1) * ipow(ch, n2 + 1);
        const RVec p1 = binomial_poly(a_[0], n1 + 1);
        const RVec p2 = binomial_poly(a_[1], n2 + 1);
        RVec p(p1.size() + p2.size() - 1, 0.0);
        for (std::size_t i = 0; i < p1.size(); ++i)
            for (std::size_t j = 0; j < p2.size(); ++j) p[i + j] += p1[i] * p2[j];
        q_.assign(p.begin() + 1, p.end());
    }

    double k() const { return k_; }
    double a(int j) const { return a_[j]; }

    double q(double y) const {
        double acc = 0.0;
        for (std::size_t i = q_.size(); i-- > 0;) acc = acc * y + q_[i];
        return acc;
    }

    /// Both derivatives at x (even functions of x).
    std::pair<double, double> operator()(double x) const {
        const double y = x * x;
        const double root = std::sqrt(q(y));
        return {k_ / ((y + a_[0]) * root), k_ / ((y + a_[1]) * root)};
    }

private:
    static RVec binomial_poly(double a, int m) {
        RVec c(m + 1);
        double binom = 1.0;
        for (int k = 0; k <= m; ++k) {
            c[k] = binom * ipow(a, m - k);
            binom = binom * (m - k) / (k + 1);
        }
        return c;
    }

    std::array<double, 2> a_{};
    double k_ = 0.0;
    RVec q_;
};

}  // namespace detail

/// theta_1(s), theta_2(s) by adaptive Simpson on the one-sided interval between 0 and s.
inline std::pair<double, double> theta_quadrature(double rho, int n1, int n2, double s, double tol = 1e-10) {
    const detail::ThetaIntegrand f(rho, n1, n2);
    if (s == 0.0) return {0.0, 0.0};
    const double sign = s > 0.0 ? 1.0 : -1.0;
    const double b = std::abs(s);
    const double t1 = adaptive_simpson([&](double x) { return f(x).first; }, 0.0, b, tol);
    const double t2 = adaptive_simpson([&](double x) { return f(x).second; }, 0.0, b, tol);
    return {sign * t1, sign * t2};
}

/// Same integrals with a fixed graded Gauss-Legendre layout on [0, |s|]; the
/// result is a smooth function of s (used where s is finite-differenced).
class SmoothTheta {
public:
    SmoothTheta(double rho, int n1, int n2) : f_(rho, n1, n2), rule_(gauss_legendre(12)) {
        // Breakpoints in u = x / |s|: 0, then geometric from 1e-4 to 1.
        breaks_.push_back(0.0);
        for (double u = 1e-4; u < 1.0; u *= 1.5) breaks_.push_back(u);
        breaks_.push_back(1.0);
    }

    std::pair<double, double> operator()(double s) const {
        if (s == 0.0) return {0.0, 0.0};
        const double b = std::abs(s);
        double t1 = 0.0, t2 = 0.0;
        for (std::size_t p = 0; p + 1 < breaks_.size(); ++p) {
            const double lo = breaks_[p] * b, hi = breaks_[p + 1] * b;
            const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
            for (std::size_t k = 0; k < rule_.nodes.size(); ++k) {
                const auto [g1, g2] = f_(mid + half * rule_.nodes[k]);
                t1 += half * rule_.weights[k] * g1;
                t2 += half * rule_.weights[k] * g2;
            }
        }
        return s > 0.0 ? std::pair{t1, t2} : std::pair{-t1, -t2};
    }

    const detail::ThetaIntegrand& integrand() const { return f_; }

private:
    detail::ThetaIntegrand f_;
    GaussRule rule_;
    RVec breaks_;
};

// --------------------------------------------------------------------------
// Curves as callables, the building input of product immersions

struct LegendreCurve {
    std::string family;
    Signature ambient = Signature::definite(2);
    int n1 = 0;
    int n2 = 0;
    std::function<CPair(double)> value;
    std::function<CPair(double)> derivative;
    double t_min = -std::numeric_limits<double>::infinity();
    double t_max = std::numeric_limits<double>::infinity();
    /// Solves the C-minimality ODE up to reparametrization and rotation.
    bool solves_cminimal_family = false;
    /// Solves it with mu = 0 (minimal products over minimal blocks).
    bool minimal_family = false;
    /// Parametrized so that |gamma'| = |gamma1|^{n1} |gamma2|^{n2}.
    bool in_gauge = false;
    std::map<std::string, double> params;

    bool is_sphere() const { return ambient.kind == SignatureKind::Definite; }
};

inline LegendreCurve gamma_delta_curve(double delta, int n1, int n2) {
    const double mu = gamma_delta_mu(delta, n1, n2);
    LegendreCurve c;
    c.family = "gamma_delta";
    c.ambient = Signature::definite(2);
    c.n1 = n1;
    c.n2 = n2;
    c.value = [=](double t) { return gamma_delta(delta, n1, n2, t); };
    c.derivative = [=](double t) { return gamma_delta_derivative(delta, n1, n2, t); };
    c.solves_cminimal_family = true;
    c.minimal_family = std::abs(mu) < 1e-14;
    c.in_gauge = true;
    c.params = {{"delta", delta}, {"mu", mu}, {"delta0", delta0(n1, n2)}};
    return c;
}

/// gamma_delta reparametrized by the circle parameter s in [0, 2pi):
/// (cos d e^{i s sin^2 d}, sin d e^{-i s cos^2 d}).
inline LegendreCurve gamma_delta_circle_curve(double delta, int n1, int n2) {
    if (!(delta > 0.0 && delta < kPi / 2)) throw DomainError("delta out of (0, pi/2)");
    const double c = std::cos(delta), s = std::sin(delta);
    LegendreCurve out;
    out.family = "gamma_delta_circle";
    out.ambient = Signature::definite(2);
    out.n1 = n1;
    out.n2 = n2;
    out.value = [=](double x) { return CPair{std::polar(c, s * s * x), std::polar(s, -c * c * x)}; };
    out.derivative = [=](double x) {
        return CPair{kI * (s * s) * std::polar(c, s * s * x), -kI * (c * c) * std::polar(s, -c * c * x)};
    };
    const double mu = gamma_delta_mu(delta, n1, n2);
    out.solves_cminimal_family = true;
    out.minimal_family = std::abs(mu) < 1e-14;
    out.params = {{"delta", delta}, {"mu", mu}, {"delta0", delta0(n1, n2)},
                  {"unprojected_period", 2.0 * kPi / (ipow(c, n1 - 1) * ipow(s, n2 - 1))}};
    return out;
}

inline LegendreCurve alpha_rho_curve(double rho, int n1, int n2) {
    const double mu = alpha_rho_mu(rho, n1, n2);
    LegendreCurve c;
    c.family = "alpha_rho";
    c.ambient = Signature::lorentzian(2);
    c.n1 = n1;
    c.n2 = n2;
    c.value = [=](double t) { return alpha_rho(rho, n1, n2, t); };
    c.derivative = [=](double t) { return alpha_rho_derivative(rho, n1, n2, t); };
    c.solves_cminimal_family = true;
    c.in_gauge = true;
    c.params = {{"rho", rho}, {"mu", mu}};
    return c;
}

/// alpha_rho reparametrized by the circle parameter: (sh e^{i s ch^2}, ch e^{i s sh^2}).
inline LegendreCurve alpha_rho_circle_curve(double rho, int n1, int n2) {
    if (!(rho > 0.0)) throw DomainError("rho must be > 0");
    const double sh = std::sinh(rho), ch = std::cosh(rho);
    LegendreCurve c;
    c.family = "alpha_rho_circle";
    c.ambient = Signature::lorentzian(2);
    c.n1 = n1;
    c.n2 = n2;
    c.value = [=](double x) { return CPair{std::polar(sh, ch * ch * x), std::polar(ch, sh * sh * x)}; };
    c.derivative = [=](double x) {
        return CPair{kI * (ch * ch) * std::polar(sh, ch * ch * x), kI * (sh * sh) * std::polar(ch, sh * sh * x)};
    };
    c.solves_cminimal_family = true;
    c.params = {{"rho", rho}, {"mu", alpha_rho_mu(rho, n1, n2)}};
    return c;
}

inline LegendreCurve trajectory_curve(std::shared_ptr<const CurveTrajectory> tr) {
    const CurveSpec& s = tr->spec();
    LegendreCurve c;
    c.family = "ode";
    c.ambient = s.ambient;
    c.n1 = s.n1;
    c.n2 = s.n2;
    c.value = [tr](double t) { return tr->at(t); };
    c.derivative = [tr](double t) { return tr->derivative_at(t); };
    c.t_min = tr->t_begin();
    c.t_max = tr->t_end();
    c.solves_cminimal_family = true;
    c.minimal_family = s.mu == 0.0;
    c.in_gauge = true;
    c.params = {{"mu", s.mu}, {"step", tr->step()}};
    return c;
}

/// The mu = 0 indefinite solution parametrized by s:
/// (sqrt(s^2 + sh^2) e^{i theta_1(s)}, sqrt(s^2 + ch^2) e^{i theta_2(s)}).
inline LegendreCurve quadrature_curve(double rho, int n1, int n2) {
    auto theta = std::make_shared<const SmoothTheta>(rho, n1, n2);
    const double sh2 = std::sinh(rho) * std::sinh(rho), ch2 = std::cosh(rho) * std::cosh(rho);
    LegendreCurve c;
    c.family = "quadrature";
    c.ambient = Signature::lorentzian(2);
    c.n1 = n1;
    c.n2 = n2;
    c.value = [=](double s) {
        const auto [t1, t2] = (*theta)(s);
        return CPair{std::polar(std::sqrt(s * s + sh2), t1), std::polar(std::sqrt(s * s + ch2), t2)};
    };
    c.derivative = [=](double s) {
        const auto [t1, t2] = (*theta)(s);
        const auto [d1, d2] = theta->integrand()(s);
        const double r1 = std::sqrt(s * s + sh2), r2 = std::sqrt(s * s + ch2);
        return CPair{Complex(s / r1, r1 * d1) * std::polar(1.0, t1), Complex(s / r2, r2 * d2) * std::polar(1.0, t2)};
    };
    c.solves_cminimal_family = true;
    c.minimal_family = true;
    c.params = {{"rho", rho}, {"mu", 0.0}};
    return c;
}

/// A Legendre curve in S^3 that is not a reparametrized solution of the
/// C-minimality ODE (k != 0); k = 0 is the great circle (cos t, sin t).
inline LegendreCurve twisted_great_circle(double k) {
    LegendreCurve c;
    c.family = "twisted_great_circle";
    c.ambient = Signature::definite(2);
    c.n1 = 1;
    c.n2 = 1;
    c.value = [k](double t) {
        return CPair{std::polar(std::cos(t), k * (t / 2 - std::sin(2 * t) / 4)),
                     std::polar(std::sin(t), -k * (t / 2 + std::sin(2 * t) / 4))};
    };
    c.derivative = [k](double t) {
        const double s = std::sin(t), co = std::cos(t);
        const Complex e1 = std::polar(1.0, k * (t / 2 - std::sin(2 * t) / 4));
        const Complex e2 = std::polar(1.0, -k * (t / 2 + std::sin(2 * t) / 4));
        return CPair{Complex(-s, co * k * s * s) * e1, Complex(co, -s * k * co * co) * e2};
    };
    c.solves_cminimal_family = (k == 0.0);
    c.minimal_family = (k == 0.0);
    c.params = {{"k", k}};
    return c;
}

/// e^{i theta} * curve; realizes the lambda parameter of the two-parameter family.
inline LegendreCurve rotated(LegendreCurve c, double theta) {
    const Complex e = std::polar(1.0, theta);
    auto v = c.value;
    auto d = c.derivative;
    c.value = [=](double t) { return e * v(t); };
    c.derivative = [=](double t) { return e * d(t); };
    c.params["rotation"] = theta;
    return c;
}

}  // namespace hminlag
