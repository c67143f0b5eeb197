#pragma once

// Hermitian linear algebra on C^{n+1} for the two ambient quadrics:
// the unit sphere (definite form, level +1) and anti-De Sitter space
// (Lorentzian form with the minus sign on the last coordinate, level -1).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace hminlag {

using Complex = std::complex<double>;
using CVec = std::vector<Complex>;
using RVec = std::vector<double>;

inline constexpr Complex kI{0.0, 1.0};
inline constexpr double kPi = 3.14159265358979323846;

enum class SignatureKind { Definite, Lorentzian };

struct Signature {
    SignatureKind kind = SignatureKind::Definite;
    std::size_t dim_complex = 1;

    static Signature definite(std::size_t dim) { return make(SignatureKind::Definite, dim); }
    static Signature lorentzian(std::size_t dim) { return make(SignatureKind::Lorentzian, dim); }

    static Signature make(SignatureKind kind, std::size_t dim) {
        if (dim < 1) throw DimensionError("signature needs dim_complex >= 1");
        return Signature{kind, dim};
    }

    /// Sign of the k-th diagonal entry of the Hermitian form.
    double sign(std::size_t k) const {
        return (kind == SignatureKind::Lorentzian && k + 1 == dim_complex) ? -1.0 : 1.0;
    }

    /// Level of the associated quadric: +1 for the sphere, -1 for anti-De Sitter.
    double quadric_level() const { return kind == SignatureKind::Definite ? 1.0 : -1.0; }

    bool operator==(const Signature&) const = default;
};

namespace detail {
inline void check_dims(std::span<const Complex> z, std::span<const Complex> w, const Signature& sig) {
    if (z.size() != sig.dim_complex || w.size() != sig.dim_complex) {
        throw DimensionError("vector length " + std::to_string(z.size()) + "/" +
                             std::to_string(w.size()) + " does not match signature dimension " +
                             std::to_string(sig.dim_complex));
    }
}
}  // namespace detail

/// sum_k eps_k z_k conj(w_k).
inline Complex herm(std::span<const Complex> z, std::span<const Complex> w, const Signature& sig) {
    detail::check_dims(z, w, sig);
    Complex acc{0.0, 0.0};
    for (std::size_t k = 0; k < z.size(); ++k) acc += sig.sign(k) * z[k] * std::conj(w[k]);
    return acc;
}

inline double riemannian(std::span<const Complex> z, std::span<const Complex> w, const Signature& sig) {
    return herm(z, w, sig).real();
}

/// omega(u, v) = <J u, v> = -Im herm(u, v).
inline double kaehler(std::span<const Complex> u, std::span<const Complex> v, const Signature& sig) {
    return -herm(u, v, sig).imag();
}

/// Lambda_at(v) = <v, J at> = Im herm(v, at).
inline double liouville(std::span<const Complex> at, std::span<const Complex> v, const Signature& sig) {
    return herm(v, at, sig).imag();
}

/// Determinant over C of a square matrix given by its columns (LU with partial pivoting).
inline Complex complex_determinant(const std::vector<CVec>& columns) {
    const std::size_t n = columns.size();
    for (const auto& c : columns) {
        if (c.size() != n) throw DimensionError("complex_determinant needs a square matrix");
    }
    // a[row][col]
    std::vector<CVec> a(n, CVec(n));
    for (std::size_t c = 0; c < n; ++c)
        for (std::size_t r = 0; r < n; ++r) a[r][c] = columns[c][r];

    Complex det{1.0, 0.0};
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t r = k + 1; r < n; ++r)
            if (std::abs(a[r][k]) > std::abs(a[piv][k])) piv = r;
        if (a[piv][k] == Complex{0.0, 0.0}) return Complex{0.0, 0.0};
        if (piv != k) {
            std::swap(a[piv], a[k]);
            det = -det;
        }
        det *= a[k][k];
        for (std::size_t r = k + 1; r < n; ++r) {
            const Complex f = a[r][k] / a[k][k];
            for (std::size_t c = k; c < n; ++c) a[r][c] -= f * a[k][c];
        }
    }
    return det;
}

/// Omega_z(v_1..v_n) = det_C{z, v_1, ..., v_n} with n = dim_complex - 1.
inline Complex complex_volume(std::span<const Complex> z, const std::vector<CVec>& tangent,
                              const Signature& sig) {
    if (z.size() != sig.dim_complex) throw DimensionError("position has wrong length");
    if (tangent.size() + 1 != sig.dim_complex) {
        throw DimensionError("complex_volume expects " + std::to_string(sig.dim_complex - 1) +
                             " tangent vectors, got " + std::to_string(tangent.size()));
    }
    std::vector<CVec> cols;
    cols.reserve(sig.dim_complex);
    cols.emplace_back(z.begin(), z.end());
    for (const auto& v : tangent) {
        if (v.size() != sig.dim_complex) throw DimensionError("tangent vector has wrong length");
        cols.push_back(v);
    }
    return complex_determinant(cols);
}

/// A point on the sphere (level +1) or on anti-De Sitter space (level -1).
class QuadricPoint {
public:
    QuadricPoint(CVec z, Signature sig, double tol = 1e-9) : z_(std::move(z)), sig_(sig) {
        const double q = herm(z_, z_, sig_).real();
        if (std::abs(q - sig_.quadric_level()) > tol) {
            throw DomainError("point is off the quadric: herm(z,z) = " + std::to_string(q));
        }
    }

    const CVec& z() const noexcept { return z_; }
    const Signature& signature() const noexcept { return sig_; }
    double level() const noexcept { return sig_.quadric_level(); }

private:
    CVec z_;
    Signature sig_;
};

/// Distance-like quantity that vanishes iff z and w lie on the same Hopf fiber:
/// sqrt(1 - |herm(z,w)|^2) on the sphere, sqrt(|herm(z,w)|^2 - 1) on anti-De Sitter space.
/// Evaluated as sqrt(herm(r,r)) with r = w - (herm(w,z)/herm(z,z)) z, which equals the
/// above on the quadric and keeps full relative accuracy for nearby fibers.
inline double projective_separation(std::span<const Complex> z, std::span<const Complex> w,
                                    const Signature& sig) {
    const Complex a = herm(w, z, sig) / sig.quadric_level();
    CVec r(w.begin(), w.end());
    for (std::size_t k = 0; k < r.size(); ++k) r[k] -= a * z[k];
    return std::sqrt(std::max(0.0, herm(r, r, sig).real()));
}

inline double projective_separation(const QuadricPoint& z, const QuadricPoint& w) {
    if (!(z.signature() == w.signature())) {
        throw DomainError("projective_separation: points live on different quadrics");
    }
    return projective_separation(z.z(), w.z(), z.signature());
}

// Small vector helpers used throughout.

inline double euclidean_norm(std::span<const Complex> v) {
    double s = 0.0;
    for (const auto& c : v) s += std::norm(c);
    return std::sqrt(s);
}

inline CVec scaled(std::span<const Complex> v, Complex a) {
    CVec out(v.begin(), v.end());
    for (auto& c : out) c *= a;
    return out;
}

inline void axpy(Complex a, std::span<const Complex> x, std::span<Complex> y) {
    for (std::size_t k = 0; k < x.size(); ++k) y[k] += a * x[k];
}

inline CVec real_to_complex(std::span<const double> x) {
    CVec out(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) out[k] = x[k];
    return out;
}

}  // namespace hminlag
