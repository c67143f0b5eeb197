#pragma once

// Rationality surrogate: a real number is "certified rational within tolerance"
// when one of its continued-fraction convergents with a small denominator is
// within `tol`. Absence of a certificate never means "irrational".

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>

#include "errors.hpp"

namespace hminlag {

struct Rational {
    std::int64_t p = 0;
    std::int64_t q = 1;

    double value() const { return static_cast<double>(p) / static_cast<double>(q); }
    bool operator==(const Rational&) const = default;
};

inline std::optional<Rational> rational_certificate(double x, std::int64_t q_max, double tol) {
    if (q_max < 1) throw DomainError("rational_certificate: q_max must be >= 1");
    if (!(tol > 0.0)) throw DomainError("rational_certificate: tol must be > 0");
    if (!std::isfinite(x)) return std::nullopt;

    // Convergents h_k / k_k via the standard recurrence.
    std::int64_t h_prev = 1, h = static_cast<std::int64_t>(std::floor(x));
    std::int64_t k_prev = 0, k = 1;
    double rem = x - std::floor(x);
    for (int iter = 0; iter < 64; ++iter) {
        if (k > q_max) break;
        if (std::abs(x - static_cast<double>(h) / static_cast<double>(k)) <= tol) {
            const std::int64_t g = std::gcd(h, k);
            return Rational{h / g, k / g};
        }
        if (rem < 1e-300) break;
        const double inv = 1.0 / rem;
        const double a_real = std::floor(inv);
        if (a_real > 1e15) break;
        const auto a = static_cast<std::int64_t>(a_real);
        rem = inv - a_real;
        const std::int64_t h_next = a * h + h_prev;
        const std::int64_t k_next = a * k + k_prev;
        h_prev = h;
        h = h_next;
        k_prev = k;
        k = k_next;
    }
    return std::nullopt;
}

}  // namespace hminlag
