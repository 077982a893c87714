#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "archkernel/error.hpp"

namespace archkernel::detail {

/// Nodes and weights of a one-dimensional quadrature rule.
struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;

    [[nodiscard]] std::size_t size() const noexcept { return nodes.size(); }
};

/// n-point Gauss-Legendre rule on [-1, 1] (Newton iteration on P_n).
inline Rule gauss_legendre(int n) {
    require(n >= 1, Errc::DomainError, "gauss_legendre needs n >= 1");
    Rule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            if (n == 1) p0 = 1.0;
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // Recompute the derivative at the converged node.
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = pk;
        }
        dp = n == 1 ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[static_cast<std::size_t>(i)] = -x;
        rule.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
        rule.weights[static_cast<std::size_t>(i)] = w;
        rule.weights[static_cast<std::size_t>(n - 1 - i)] = w;
    }
    return rule;
}

/// Composite Gauss-Legendre over consecutive panels [b_k, b_{k+1}].
inline Rule composite(std::span<const double> breakpoints, int per_panel) {
    const Rule base = gauss_legendre(per_panel);
    Rule rule;
    for (std::size_t k = 0; k + 1 < breakpoints.size(); ++k) {
        const double a = breakpoints[k];
        const double b = breakpoints[k + 1];
        if (!(b > a)) continue;
        const double half = 0.5 * (b - a);
        const double mid = 0.5 * (a + b);
        for (std::size_t i = 0; i < base.size(); ++i) {
            rule.nodes.push_back(mid + half * base.nodes[i]);
            rule.weights.push_back(half * base.weights[i]);
        }
    }
    return rule;
}

/// Breakpoints on [lo, hi] with `uniform` equal panels plus geometric refinement
/// towards the ends (panel widths shrinking by 10x, `levels` times), which
/// resolves the integrable endpoint singularities of copula densities.
inline std::vector<double> graded_breakpoints(double lo, double hi, int uniform, int levels,
                                              bool grade_lo = true, bool grade_hi = true) {
    std::vector<double> pts;
    const double width = hi - lo;
    for (int k = 0; k <= uniform; ++k) pts.push_back(lo + width * k / uniform);
    const double first = width / uniform;
    for (int j = 1; j <= levels; ++j) {
        const double off = first * std::pow(10.0, -j);
        if (grade_lo) pts.push_back(lo + off);
        if (grade_hi) pts.push_back(hi - off);
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

/// Default graded rule on the unit interval; `nodes` is the approximate
/// number of nodes requested.
inline Rule unit_rule(std::size_t nodes, int per_panel = 4, int levels = 10) {
    const int uniform = std::max(1, static_cast<int>(nodes) / per_panel);
    const auto pts = graded_breakpoints(0.0, 1.0, uniform, levels);
    return composite(pts, per_panel);
}

/// Trapezoid weights on an equispaced grid of `points` nodes over [0, 1].
inline Rule trapezoid_unit(int points) {
    require(points >= 2, Errc::DomainError, "trapezoid needs at least two points");
    Rule rule;
    const double h = 1.0 / (points - 1);
    for (int i = 0; i < points; ++i) {
        rule.nodes.push_back(i * h);
        rule.weights.push_back((i == 0 || i == points - 1) ? 0.5 * h : h);
    }
    rule.nodes.back() = 1.0;
    return rule;
}

}  // namespace archkernel::detail
