#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "ambient.hpp"
#include "errors.hpp"
#include "immersion.hpp"

namespace hminlag {

/// Central-difference settings: stencil order (2 or 4) and one step per chart axis.
struct DiffOptions {
    int order = 2;
    RVec steps;

    static DiffOptions uniform(std::size_t dim, double h, int order = 2) { return {order, RVec(dim, h)}; }

    void validate(std::size_t dim) const {
        if (order != 2 && order != 4) throw DomainError("stencil order must be 2 or 4");
        if (steps.size() != dim) throw DimensionError("one step per chart axis required");
        for (double h : steps)
            if (!(h > 0.0)) throw DomainError("steps must be positive");
    }
};

struct Jet {
    CVec value;
    std::vector<CVec> d1;               ///< d1[i] = d phi / d x_i
    std::vector<std::vector<CVec>> d2;  ///< d2[i][j], symmetric
};

namespace detail {

struct Stencil {
    std::vector<int> offsets;
    std::vector<double> weights;
};

inline const Stencil& first_stencil(int order) {
    static const Stencil s2{{-1, 1}, {-0.5, 0.5}};
    static const Stencil s4{{-2, -1, 1, 2}, {1.0 / 12.0, -2.0 / 3.0, 2.0 / 3.0, -1.0 / 12.0}};
    return order == 4 ? s4 : s2;
}

inline const Stencil& second_stencil(int order) {
    static const Stencil s2{{-1, 0, 1}, {1.0, -2.0, 1.0}};
    static const Stencil s4{{-2, -1, 0, 1, 2}, {-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0}};
    return order == 4 ? s4 : s2;
}

inline void accumulate(CVec& acc, double w, const CVec& v) {
    if (acc.empty()) acc.assign(v.size(), Complex{});
    for (std::size_t k = 0; k < v.size(); ++k) acc[k] += w * v[k];
}

}  // namespace detail

/// Central-difference first derivatives only.
inline std::vector<CVec> first_derivatives(const Evaluator& f, std::span<const double> x, const DiffOptions& opt) {
    opt.validate(x.size());
    const auto& st = detail::first_stencil(opt.order);
    std::vector<CVec> d1(x.size());
    RVec y(x.begin(), x.end());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double h = opt.steps[i];
        for (std::size_t k = 0; k < st.offsets.size(); ++k) {
            y[i] = x[i] + st.offsets[k] * h;
            detail::accumulate(d1[i], st.weights[k] / h, f(y));
        }
        y[i] = x[i];
    }
    return d1;
}

/// Full 2-jet by central differences; mixed derivatives use the tensor product
/// of the first-derivative stencils (the 4-point cross at order 2).
inline Jet jet_of(const Evaluator& f, std::span<const double> x, const DiffOptions& opt) {
    opt.validate(x.size());
    const std::size_t n = x.size();
    Jet jet;
    jet.value = f(x);
    jet.d1 = first_derivatives(f, x, opt);
    jet.d2.assign(n, std::vector<CVec>(n));
    const auto& s1 = detail::first_stencil(opt.order);
    const auto& s2 = detail::second_stencil(opt.order);
    RVec y(x.begin(), x.end());
    for (std::size_t i = 0; i < n; ++i) {
        const double hi = opt.steps[i];
        for (std::size_t k = 0; k < s2.offsets.size(); ++k) {
            y[i] = x[i] + s2.offsets[k] * hi;
            detail::accumulate(jet.d2[i][i], s2.weights[k] / (hi * hi), s2.offsets[k] == 0 ? jet.value : f(y));
        }
        y[i] = x[i];
        for (std::size_t j = i + 1; j < n; ++j) {
            const double hj = opt.steps[j];
            for (std::size_t a = 0; a < s1.offsets.size(); ++a) {
                for (std::size_t b = 0; b < s1.offsets.size(); ++b) {
                    y[i] = x[i] + s1.offsets[a] * hi;
                    y[j] = x[j] + s1.offsets[b] * hj;
                    detail::accumulate(jet.d2[i][j], s1.weights[a] * s1.weights[b] / (hi * hj), f(y));
                }
            }
            y[i] = x[i];
            y[j] = x[j];
            jet.d2[j][i] = jet.d2[i][j];
        }
    }
    return jet;
}

/// Throws unless every stencil node of the point is a regular chart point.
inline void check_stencil_regular(const GeometricImmersion& imm, std::span<const double> x, const DiffOptions& opt) {
    imm.check_regular(x);
    const int reach = opt.order / 2;
    RVec y(x.begin(), x.end());
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (int sgn : {-1, 1}) {
            y[i] = x[i] + sgn * reach * opt.steps[i];
            imm.check_regular(y);
        }
        y[i] = x[i];
    }
}

inline Jet evaluate_jet(const GeometricImmersion& imm, std::span<const double> x, const DiffOptions& opt) {
    if (x.size() != static_cast<std::size_t>(imm.dim())) throw DimensionError("chart point has wrong length");
    check_stencil_regular(imm, x, opt);
    return jet_of(imm.evaluator, x, opt);
}

inline Jet evaluate_jet(const GeometricImmersion& imm, std::span<const double> x, double h, int order = 2) {
    return evaluate_jet(imm, x, DiffOptions::uniform(x.size(), h, order));
}

}  // namespace hminlag
