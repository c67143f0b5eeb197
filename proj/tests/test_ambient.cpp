#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hminlag/ambient.hpp"
#include "hminlag/errors.hpp"
#include "hminlag/numerics.hpp"
#include "hminlag/rational.hpp"

using namespace hminlag;

namespace {
const Signature D2 = Signature::definite(2);
const Signature L2 = Signature::lorentzian(2);

void expect_complex(Complex a, Complex b, double tol = 1e-15) {
    EXPECT_NEAR(a.real(), b.real(), tol);
    EXPECT_NEAR(a.imag(), b.imag(), tol);
}
}  // namespace

TEST(Herm, UnitVector) { expect_complex(herm(CVec{1.0, 0.0}, CVec{1.0, 0.0}, D2), 1.0); }

TEST(Herm, TimelikeUnit) { expect_complex(herm(CVec{0.0, kI}, CVec{0.0, kI}, L2), -1.0); }

TEST(Herm, DirectExpansion) { expect_complex(herm(CVec{1.0, 1.0}, CVec{1.0, kI}, D2), Complex(1.0, -1.0)); }

TEST(Herm, DimensionMismatchThrows) {
    EXPECT_THROW(herm(CVec{1.0}, CVec{1.0, 0.0}, D2), DimensionError);
    EXPECT_THROW(Signature::definite(0), DimensionError);
}

TEST(Herm, ConjugateSymmetricAndSesquilinear) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    auto rnd = [&] { return CVec{{nd(rng), nd(rng)}, {nd(rng), nd(rng)}, {nd(rng), nd(rng)}}; };
    const Signature L3 = Signature::lorentzian(3);
    for (int k = 0; k < 20; ++k) {
        const CVec z = rnd(), w = rnd();
        const Complex a{nd(rng), nd(rng)};
        expect_complex(herm(z, w, L3), std::conj(herm(w, z, L3)), 1e-12);
        expect_complex(herm(scaled(z, a), w, L3), a * herm(z, w, L3), 1e-12);
        expect_complex(herm(z, scaled(w, a), L3), std::conj(a) * herm(z, w, L3), 1e-12);
    }
}

TEST(Forms, LiouvilleExamples) {
    EXPECT_DOUBLE_EQ(liouville(CVec{1.0, 0.0}, CVec{kI, 0.0}, D2), 1.0);
    EXPECT_DOUBLE_EQ(liouville(CVec{0.6, 0.8}, CVec{-0.8, 0.6}, D2), 0.0);
}

TEST(Forms, KaehlerAntisymmetric) {
    const CVec u{Complex(0.3, -1.0), Complex(2.0, 0.5)}, v{Complex(-1.0, 0.2), Complex(0.0, 1.5)};
    EXPECT_DOUBLE_EQ(kaehler(u, u, D2), 0.0);
    EXPECT_DOUBLE_EQ(kaehler(u, u, L2), 0.0);
    EXPECT_NEAR(kaehler(u, v, L2), -kaehler(v, u, L2), 1e-15);
    // Kaehler form is the metric composed with J.
    EXPECT_NEAR(kaehler(u, v, D2), riemannian(scaled(u, kI), v, D2), 1e-14);
}

TEST(Volume, IdentityAndColumnScaling) {
    const Signature D3 = Signature::definite(3);
    const CVec e1{1.0, 0.0, 0.0}, e2{0.0, 1.0, 0.0}, e3{0.0, 0.0, 1.0};
    expect_complex(complex_volume(e1, {e2, e3}, D3), 1.0);
    const double th = 0.77;
    expect_complex(complex_volume(scaled(e1, std::polar(1.0, th)), {e2, e3}, D3), std::polar(1.0, th), 1e-15);
    EXPECT_THROW(complex_volume(e1, {e2}, D3), DimensionError);
}

TEST(Volume, DeterminantMatchesCofactorExpansion) {
    const std::vector<CVec> cols{{Complex(1, 2), Complex(0, 1), Complex(3, 0)},
                                 {Complex(-1, 0), Complex(2, -1), Complex(0, 0.5)},
                                 {Complex(0.5, 0.5), Complex(1, 0), Complex(-2, 1)}};
    auto m = [&](int r, int c) { return cols[c][r]; };
    const Complex ref = m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
                        m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
                        m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
    expect_complex(complex_determinant(cols), ref, 1e-12);
}

TEST(Separation, SameFiberOrthogonalAndHalf) {
    const CVec e1{1.0, 0.0}, e2{0.0, 1.0};
    EXPECT_NEAR(projective_separation(e1, scaled(e1, std::polar(1.0, 1.3)), D2), 0.0, 1e-15);
    EXPECT_NEAR(projective_separation(e1, e2, D2), 1.0, 1e-15);
    const CVec mid{1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)};
    EXPECT_NEAR(projective_separation(e1, mid, D2), 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(Separation, AntiDeSitterMatchesClosedForm) {
    const double a = 0.4, b = 1.1;
    const CVec z{std::sinh(a), std::cosh(a)}, w{std::sinh(b) * kI, std::cosh(b)};
    const QuadricPoint qz(z, L2), qw(w, L2);
    const double h = std::abs(herm(z, w, L2));
    EXPECT_NEAR(projective_separation(qz, qw), std::sqrt(h * h - 1.0), 1e-13);
    EXPECT_NEAR(projective_separation(qz, QuadricPoint(scaled(z, std::polar(1.0, -2.0)), L2)), 0.0, 1e-15);
    EXPECT_THROW(QuadricPoint(CVec{1.0, 1.0}, D2), DomainError);
    EXPECT_THROW(projective_separation(qz, QuadricPoint(CVec{1.0, 0.0}, D2)), DomainError);
}

TEST(Numerics, WrapAngle) {
    EXPECT_NEAR(wrap_angle(3 * kPi), kPi, 1e-12);
    EXPECT_NEAR(wrap_angle(-0.5), -0.5, 0);
    EXPECT_NEAR(angular_distance(kPi - 1e-3, -kPi + 1e-3), 2e-3, 1e-12);
}

TEST(Numerics, QuadratureRules) {
    RVec f(101);
    for (int k = 0; k <= 100; ++k) f[k] = std::exp(0.01 * k);
    EXPECT_NEAR(composite_simpson(f, 0.01), std::exp(1.0) - 1.0, 1e-9);
    EXPECT_NEAR(adaptive_simpson([](double x) { return std::exp(x); }, 0.0, 1.0, 1e-12), std::exp(1.0) - 1.0, 1e-11);
    EXPECT_NEAR(composite_gauss([](double x) { return std::cos(x); }, 0.0, kPi / 2, 4, gauss_legendre(8)), 1.0, 1e-14);
}

TEST(Numerics, ParallelForCoversEveryIndexOnce) {
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), 7, [&](std::size_t k) { hits[k] += 1; });
    for (int h : hits) EXPECT_EQ(h, 1);
}

TEST(RationalCertificate, SpecExamples) {
    EXPECT_EQ(rational_certificate(0.5, 10, 1e-9), (Rational{1, 2}));
    EXPECT_FALSE(rational_certificate(1.0 / std::sqrt(2.0), 50, 1e-9).has_value());
    EXPECT_EQ(rational_certificate(0.333333333, 10, 1e-6), (Rational{1, 3}));
}

TEST(RationalCertificate, RecoversPlantedRationals) {
    for (std::int64_t q = 1; q <= 64; ++q) {
        for (std::int64_t p = -q; p <= 2 * q; p += 5) {
            const auto r = rational_certificate(static_cast<double>(p) / q + 1e-12, 64, 1e-9);
            ASSERT_TRUE(r.has_value()) << p << "/" << q;
            const std::int64_t g = std::gcd(p, q);
            EXPECT_EQ(*r, (Rational{p / g, q / g}));
        }
    }
    EXPECT_THROW(rational_certificate(0.5, 0, 1e-9), DomainError);
}
