#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "ambient.hpp"
#include "errors.hpp"

namespace hminlag {

/// Representative of x modulo 2pi in (-pi, pi].
inline double wrap_angle(double x) {
    double r = std::remainder(x, 2.0 * kPi);
    if (r <= -kPi) r += 2.0 * kPi;
    return r;
}

/// Distance on the circle R/2piZ.
inline double angular_distance(double a, double b) { return std::abs(wrap_angle(a - b)); }

/// Composite Simpson on uniformly spaced samples; needs an odd number of samples.
inline double composite_simpson(std::span<const double> f, double dx) {
    const std::size_t n = f.size();
    if (n < 3 || n % 2 == 0) throw DomainError("composite_simpson needs an odd sample count >= 3");
    double acc = f.front() + f.back();
    for (std::size_t k = 1; k + 1 < n; ++k) acc += (k % 2 == 1 ? 4.0 : 2.0) * f[k];
    return acc * dx / 3.0;
}

namespace detail {

struct SimpsonPanel {
    double a, b, fa, fm, fb, whole;
};

inline double adaptive_simpson_rec(const std::function<double(double)>& f, const SimpsonPanel& p,
                                   double tol, int depth, int max_depth) {
    const double m = 0.5 * (p.a + p.b);
    const double lm = 0.5 * (p.a + m);
    const double rm = 0.5 * (m + p.b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - p.a) / 6.0 * (p.fa + 4.0 * flm + p.fm);
    const double right = (p.b - m) / 6.0 * (p.fm + 4.0 * frm + p.fb);
    const double delta = left + right - p.whole;
    if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    if (depth >= max_depth) {
        throw QuadratureError("adaptive Simpson did not converge on [" + std::to_string(p.a) + ", " +
                              std::to_string(p.b) + "]");
    }
    return adaptive_simpson_rec(f, {p.a, m, p.fa, flm, p.fm, left}, 0.5 * tol, depth + 1, max_depth) +
           adaptive_simpson_rec(f, {m, p.b, p.fm, frm, p.fb, right}, 0.5 * tol, depth + 1, max_depth);
}

}  // namespace detail

/// Adaptive Simpson with the Richardson correction; absolute tolerance `tol`.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                               int max_depth = 50) {
    if (a == b) return 0.0;
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::adaptive_simpson_rec(f, {a, b, fa, fm, fb, whole}, tol, 0, max_depth);
}

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
    RVec nodes;
    RVec weights;
};

inline GaussRule gauss_legendre(int m) {
    GaussRule rule{RVec(m), RVec(m)};
    for (int i = 0; i < m; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (m + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= m; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            if (m == 1) p0 = 1.0;
            dp = m * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        rule.nodes[i] = x;
        rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return rule;
}

/// Composite Gauss-Legendre with a fixed panel layout. The result depends
/// smoothly on the endpoints, which finite-difference consumers rely on.
inline double composite_gauss(const std::function<double(double)>& f, double a, double b, int panels,
                              const GaussRule& rule) {
    const double w = (b - a) / panels;
    double acc = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * w;
        const double mid = lo + 0.5 * w;
        for (std::size_t k = 0; k < rule.nodes.size(); ++k) acc += rule.weights[k] * f(mid + 0.5 * w * rule.nodes[k]);
    }
    return 0.5 * w * acc;
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Exceptions are rethrown
/// on the calling thread (the one with the smallest index wins).
inline void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
    if (jobs <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    jobs = std::min<unsigned>(jobs, static_cast<unsigned>(n));
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::size_t failed_index = n;
    std::exception_ptr failure;
    {
        std::vector<std::jthread> pool;
        pool.reserve(jobs);
        for (unsigned w = 0; w < jobs; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        std::lock_guard lock(mu);
                        if (i < failed_index) {
                            failed_index = i;
                            failure = std::current_exception();
                        }
                    }
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
}

}  // namespace hminlag
