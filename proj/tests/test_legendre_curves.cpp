#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <random>
#include <sstream>

#include "hminlag/legendre_curves.hpp"

using namespace hminlag;

namespace {

double pair_dist(const CPair& a, const CPair& b) { return pair_norm(a - b); }

// Fourth-order central difference of a curve, independent of the closed-form derivatives.
CPair fd_derivative(const std::function<CPair(double)>& f, double t, double h = 1e-3) {
    CPair out;
    const CPair a = f(t + 2 * h), b = f(t + h), c = f(t - h), d = f(t - 2 * h);
    for (int j = 0; j < 2; ++j) out[j] = (-a[j] + 8.0 * b[j] - 8.0 * c[j] + d[j]) / (12.0 * h);
    return out;
}

}  // namespace

// ---------------------------------------------------------------- ODE right-hand side

TEST(OdeRhs, DirectSubstitution) {
    const double th = 0.6, c = std::cos(th), s = std::sin(th);
    const CurveSpec spec = CurveSpec::sphere(1, 1, 0.0, th);
    const CPair d = ode_rhs(spec, 0.0, spec.init);
    EXPECT_NEAR(std::abs(d[0] - kI * c * s * s), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(d[1] + kI * c * c * s), 0.0, 1e-15);
}

TEST(OdeRhs, GammaDeltaSolvesTheOde) {
    for (auto [n1, n2] : {std::pair{1, 1}, {2, 0}, {1, 2}, {3, 1}, {0, 2}}) {
        for (double delta : {0.3, 0.7, 1.2}) {
            const double mu = gamma_delta_mu(delta, n1, n2);
            const CurveSpec spec = CurveSpec::sphere(n1, n2, mu, delta);
            for (double t : {-1.3, 0.0, 0.4, 2.5}) {
                const CPair y = gamma_delta(delta, n1, n2, t);
                EXPECT_LE(pair_dist(ode_rhs(spec, t, y), gamma_delta_derivative(delta, n1, n2, t)), 1e-12)
                    << n1 << "," << n2 << " delta=" << delta << " t=" << t;
                EXPECT_LE(pair_dist(fd_derivative([&](double u) { return gamma_delta(delta, n1, n2, u); }, t),
                                    gamma_delta_derivative(delta, n1, n2, t)),
                          1e-10);
            }
        }
    }
}

TEST(OdeRhs, AlphaRhoSolvesTheOde) {
    for (auto [n1, n2] : {std::pair{1, 1}, {2, 1}, {1, 3}}) {
        for (double rho : {0.3, 0.5, 1.1}) {
            const CurveSpec spec = CurveSpec::ads(n1, n2, alpha_rho_mu(rho, n1, n2), rho);
            for (double t : {-0.7, 0.0, 0.9}) {
                const CPair y = alpha_rho(rho, n1, n2, t);
                const CPair d = alpha_rho_derivative(rho, n1, n2, t);
                EXPECT_LE(pair_dist(ode_rhs(spec, t, y), d), 1e-12 * (1.0 + pair_norm(d)));
            }
        }
    }
}

// ---------------------------------------------------------------- closed forms

TEST(GammaDelta, InitialValueAndRoundCase) {
    const CPair y = gamma_delta(0.4, 2, 1, 0.0);
    EXPECT_DOUBLE_EQ(y[0].real(), std::cos(0.4));
    EXPECT_DOUBLE_EQ(y[1].real(), std::sin(0.4));
    EXPECT_NEAR(gamma_delta_mu(kPi / 4, 1, 1), 0.0, 1e-15);
    EXPECT_NEAR(delta0(1, 1), kPi / 4, 1e-15);
    EXPECT_NEAR(delta0(2, 0), std::atan(std::sqrt(1.0 / 3.0)), 1e-15);
    EXPECT_NEAR(gamma_delta_mu(delta0(2, 0), 2, 0), 0.0, 1e-15);
    EXPECT_THROW(gamma_delta(0.0, 1, 1, 0.0), DomainError);
    EXPECT_THROW(gamma_delta(kPi / 2, 1, 1, 0.0), DomainError);
}

TEST(AlphaRho, InitialValueOnAntiDeSitter) {
    const CPair y = alpha_rho(0.7, 1, 2, 0.0);
    EXPECT_DOUBLE_EQ(y[0].real(), std::sinh(0.7));
    EXPECT_DOUBLE_EQ(y[1].real(), std::cosh(0.7));
    for (double t : {0.3, -2.0}) {
        const CPair a = alpha_rho(0.7, 1, 2, t);
        EXPECT_NEAR(pair_herm(a, a, Signature::lorentzian(2)).real(), -1.0, 1e-13);
    }
}

TEST(LegendreAngle, GreatCircleIsZero) {
    for (double t : {0.1, 0.9, 2.0}) {
        const CPair g{std::cos(t), std::sin(t)}, d{-std::sin(t), std::cos(t)};
        EXPECT_NEAR(legendre_angle(g, d, Signature::definite(2)), 0.0, 1e-15);
    }
}

TEST(LegendreAngle, GammaDeltaAtOrigin) {
    const double delta = 0.5;
    const CPair g = gamma_delta(delta, 1, 1, 0.0);
    const CPair d = fd_derivative([&](double u) { return gamma_delta(delta, 1, 1, u); }, 0.0);
    EXPECT_NEAR(legendre_angle(g, d, Signature::definite(2)), -kPi / 2, 1e-10);
    EXPECT_THROW(legendre_angle(g, CPair{}, Signature::definite(2)), SingularPointError);
}

// ---------------------------------------------------------------- integration

TEST(Integrate, MatchesRoundCurve) {
    const CurveSpec spec = CurveSpec::sphere(1, 1, 0.0, kPi / 4);
    const CurveTrajectory tr = integrate(spec, 10.0, 1e-3);
    double err = 0.0;
    for (std::size_t k = 0; k < tr.size(); ++k)
        err = std::max(err, pair_dist(tr.values()[k], gamma_delta(kPi / 4, 1, 1, tr.ts()[k])));
    EXPECT_LE(err, 1e-8);
    EXPECT_LE(tr.richardson_error(), 1e-10);
}

TEST(Integrate, ClassicalFourthOrder) {
    const double delta = 0.5;
    const CurveSpec spec = CurveSpec::sphere(2, 1, gamma_delta_mu(delta, 2, 1), delta);
    const CPair ref = gamma_delta(delta, 2, 1, 10.0);
    const double e1 = pair_dist(integrate(spec, 10.0, 1e-2).values().back(), ref);
    const double e2 = pair_dist(integrate(spec, 10.0, 5e-3).values().back(), ref);
    EXPECT_GT(e1 / e2, 14.0);
    EXPECT_LT(e1 / e2, 18.0);
}

TEST(Integrate, RejectsBadSteps) {
    const CurveSpec spec = CurveSpec::sphere(1, 1, 0.0, 0.5);
    EXPECT_THROW(integrate(spec, 1.0, 0.0), DomainError);
    EXPECT_THROW(integrate(spec, 1.0, 0.05), DomainError);
    EXPECT_THROW(CurveSpec::sphere(1, 1, 0.0, kPi / 2), DomainError);
    EXPECT_THROW(CurveSpec::ads(1, 1, 0.0, 0.0), DomainError);
}

TEST(Integrate, EscapingAntiDeSitterSolutionIsReported) {
    const CurveSpec spec = CurveSpec::ads(1, 1, 0.0, 0.5);
    const double t_exit = exit_time(spec, 5.0, 2.5e-4, 4.0);
    EXPECT_LT(t_exit, 2.0);
    EXPECT_THROW(integrate(spec, 5.0, 1e-3), IntegrationError);
    EXPECT_LE(quadric_drift(integrate(spec, t_exit, 2.5e-4)), 1e-9);
}

TEST(Invariants, ConservationOnRandomSpecs) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> umu(-2.0, 2.0), uth(0.1, 1.45), urho(0.1, 1.2);
    std::uniform_int_distribution<int> un(0, 2);
    for (int k = 0; k < 6; ++k) {
        const bool sphere = k % 2 == 0;
        const int n1 = un(rng), n2 = un(rng);
        const double mu = umu(rng);
        const CurveSpec spec = sphere ? CurveSpec::sphere(n1, n2, mu, uth(rng)) : CurveSpec::ads(n1, n2, mu, urho(rng));
        const double step = sphere ? 1e-3 : 2.5e-4;
        const double t_end = sphere ? 5.0 : exit_time(spec, 5.0, step, 4.0);
        // Real initial data: the backward solution is the conjugate, so the window is symmetric.
        const CurveTrajectory tr = integrate(spec, -t_end, t_end, step);
        EXPECT_LE(quadric_drift(tr), 1e-9);
        EXPECT_LE(legendre_residual(tr), 1e-9);
        EXPECT_LE(gauge_residual(tr), 1e-8);
        EXPECT_LE(angle_linearity_drift(tr), 1e-7);
        EXPECT_LE(time_symmetry_residual(tr), 1e-9);
        EXPECT_LE(polar_consistency(tr), 1e-12);
    }
}

TEST(Invariants, FirstIntegralAtMuZero) {
    for (double th : {0.3, 1.0}) {
        const CurveSpec spec = CurveSpec::sphere(2, 1, 0.0, th);
        EXPECT_LE(first_integral_drift(integrate(spec, 20.0, 1e-3)), 1e-8);
    }
    const CurveSpec ads = CurveSpec::ads(1, 2, 0.0, 0.4);
    const CurveTrajectory tr = integrate(ads, exit_time(ads, 5.0, 2.5e-4, 4.0), 2.5e-4);
    const double ref = std::pow(std::sinh(0.4), 2) * std::pow(std::cosh(0.4), 3);
    const CPair y = tr.values().back();
    EXPECT_NEAR((ipow(y[0], 2) * ipow(y[1], 3)).real(), ref, 1e-8);
}

TEST(Trajectory, DenseOutputAgreesWithNodes) {
    const CurveSpec spec = CurveSpec::sphere(1, 2, 0.3, 0.8);
    const CurveTrajectory tr = integrate(spec, -1.0, 2.0, 1e-3);
    for (std::size_t k = 0; k < tr.size(); k += 137) EXPECT_LE(pair_dist(tr.at(tr.ts()[k]), tr.values()[k]), 1e-15);
    EXPECT_NEAR(tr.t_begin(), -1.0, 1e-12);
    EXPECT_THROW(tr.at(2.5), DomainError);
}

TEST(Trajectory, CsvHeaderAndPrecision) {
    const CurveTrajectory tr = integrate(CurveSpec::sphere(1, 1, 0.0, 0.5), 0.01, 1e-3);
    std::ostringstream os;
    write_trajectory_csv(os, tr);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "t,re1,im1,re2,im2,rho1,rho2,nu1,nu2");
    std::getline(is, line);
    EXPECT_EQ(line.substr(0, 22), "0,0.87758256189037276,");
    int rows = 1;
    while (std::getline(is, line)) ++rows;
    EXPECT_EQ(static_cast<std::size_t>(rows), tr.size());
}

// ---------------------------------------------------------------- periods

TEST(Period, RoundCaseIsDegenerate) {
    const CurveTrajectory tr = integrate(CurveSpec::sphere(1, 1, 0.0, kPi / 4), 20.0, 1e-3);
    EXPECT_TRUE(detect_period(tr).degenerate);
    const PeriodReport rep = analyze_period(tr);
    EXPECT_TRUE(rep.degenerate);
    // Phase rates of the round curve: +s^2 and -c^2, ratio -1.
    EXPECT_NEAR(rep.phase_rate1, 0.5, 1e-10);
    EXPECT_NEAR(rep.phase_rate2, -0.5, 1e-10);
    ASSERT_TRUE(rep.cert_ratio.has_value());
    EXPECT_EQ(*rep.cert_ratio, (Rational{-1, 1}));
}

TEST(Period, RichardsonAgreement) {
    const CurveSpec spec = CurveSpec::sphere(1, 1, 0.0, kPi / 3);
    const double t1 = detect_period(integrate(spec, 20.0, 1e-3)).period;
    const double t2 = detect_period(integrate(spec, 20.0, 5e-4)).period;
    EXPECT_NEAR(t1, t2, 1e-8);
}

TEST(Period, SwapSymmetryWhenDimensionsAgree) {
    for (double th : {0.3, 0.55}) {
        const double a = detect_period(integrate(CurveSpec::sphere(2, 2, 0.0, th), 60.0, 1e-3)).period;
        const double b = detect_period(integrate(CurveSpec::sphere(2, 2, 0.0, kPi / 2 - th), 60.0, 1e-3)).period;
        EXPECT_NEAR(a, b, 1e-8);
    }
}

TEST(Period, InconclusiveWhenTooShort) {
    EXPECT_THROW(detect_period(integrate(CurveSpec::sphere(1, 1, 0.0, 0.4), 1.0, 1e-3)), InconclusiveError);
    EXPECT_THROW(detect_period(integrate(CurveSpec::sphere(1, 1, 0.2, 0.4), 20.0, 1e-3)), DomainError);
}

TEST(Rotation, MatchesPhaseIncrements) {
    for (auto [n1, n2, th] : {std::tuple{1, 1, 1.0}, {2, 1, 0.5}, {1, 3, 0.9}}) {
        const CurveTrajectory tr = integrate(CurveSpec::sphere(n1, n2, 0.0, th), 60.0, 1e-3);
        const double T = detect_period(tr).period;
        const RotationNumbers r = rotation_numbers(tr, T);
        EXPECT_NEAR(r.gamma_rot, r.rot1 + r.rot2, 1e-8);
        // rho_1^2 nu_1' = K and rho_2^2 nu_2' = -K along mu = 0 solutions.
        EXPECT_NEAR(r.rot1, (tr.phase_at(0, T) - tr.phase_at(0, 0.0)) / (2 * kPi), 1e-8);
        EXPECT_NEAR(r.rot2, -(tr.phase_at(1, T) - tr.phase_at(1, 0.0)) / (2 * kPi), 1e-8);
    }
}

// ---------------------------------------------------------------- quadrature

TEST(ThetaQuadrature, OddAndZeroAtOrigin) {
    const auto z = theta_quadrature(0.5, 1, 1, 0.0);
    EXPECT_EQ(z.first, 0.0);
    EXPECT_EQ(z.second, 0.0);
    for (double s : {0.2, 1.5, 4.0}) {
        const auto a = theta_quadrature(0.5, 1, 2, s), b = theta_quadrature(0.5, 1, 2, -s);
        EXPECT_NEAR(a.first, -b.first, 1e-14);
        EXPECT_NEAR(a.second, -b.second, 1e-14);
    }
}

TEST(ThetaQuadrature, SmoothRuleAgreesWithAdaptive) {
    for (double rho : {0.3, 1.0}) {
        const SmoothTheta smooth(rho, 1, 1);
        for (double s : {-5.0, -0.01, 0.7, 3.3}) {
            const auto a = theta_quadrature(rho, 1, 1, s);
            const auto b = smooth(s);
            EXPECT_NEAR(a.first, b.first, 1e-10);
            EXPECT_NEAR(a.second, b.second, 1e-10);
        }
    }
}

TEST(ThetaQuadrature, QuadratureCurveIsLegendreAndOnQuadric) {
    const LegendreCurve c = quadrature_curve(0.5, 1, 1);
    const Signature L = Signature::lorentzian(2);
    for (double s : {-2.0, 0.0, 0.8}) {
        const CPair y = c.value(s), d = c.derivative(s);
        EXPECT_NEAR(pair_herm(y, y, L).real(), -1.0, 1e-12);
        EXPECT_NEAR(pair_herm(d, y, L).imag(), 0.0, 1e-12);
        EXPECT_LE(pair_dist(d, fd_derivative(c.value, s)), 1e-9);
    }
    const CPair y0 = c.value(0.0);
    EXPECT_NEAR(std::abs(y0[0] - std::sinh(0.5)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(y0[1] - std::cosh(0.5)), 0.0, 1e-15);
}

// ---------------------------------------------------------------- curve objects

TEST(Curves, CircleFormsAreHorizontal) {
    const LegendreCurve a = gamma_delta_circle_curve(0.9, 2, 1), b = alpha_rho_circle_curve(0.6, 1, 1);
    for (double s : {0.0, 1.0, 4.0}) {
        EXPECT_NEAR(pair_herm(a.derivative(s), a.value(s), a.ambient).imag(), 0.0, 1e-15);
        EXPECT_NEAR(pair_herm(b.derivative(s), b.value(s), b.ambient).imag(), 0.0, 1e-14);
    }
}

TEST(Curves, TwistedCircleIsLegendreButNotASolution) {
    const LegendreCurve c = twisted_great_circle(1.0);
    for (double t : {0.3, 0.8, 1.2}) {
        const CPair y = c.value(t);
        EXPECT_NEAR(pair_herm(y, y, c.ambient).real(), 1.0, 1e-15);
        EXPECT_NEAR(pair_herm(c.derivative(t), y, c.ambient).imag(), 0.0, 1e-15);
        EXPECT_LE(pair_dist(c.derivative(t), fd_derivative(c.value, t)), 1e-10);
    }
    EXPECT_FALSE(c.solves_cminimal_family);
}

TEST(Curves, RotationIsAGlobalPhase) {
    const LegendreCurve c = gamma_delta_curve(0.5, 1, 1), r = rotated(c, 0.8);
    const CPair a = c.value(0.3), b = r.value(0.3);
    for (int j = 0; j < 2; ++j) EXPECT_NEAR(std::abs(b[j] - std::polar(1.0, 0.8) * a[j]), 0.0, 1e-15);
}
