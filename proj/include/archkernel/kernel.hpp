#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string_view>
#include <vector>

#include "archkernel/copula.hpp"
#include "archkernel/error.hpp"
#include "archkernel/generator.hpp"

namespace archkernel {

enum class KernelBranch { MinIsOne, InZeroMargin, InteriorZeroSet, Regular };

constexpr std::string_view to_string(KernelBranch b) noexcept {
    switch (b) {
        case KernelBranch::MinIsOne: return "min-is-one";
        case KernelBranch::InZeroMargin: return "in-zero-margin";
        case KernelBranch::InteriorZeroSet: return "interior-zero-set";
        case KernelBranch::Regular: return "regular";
    }
    return "unknown";
}

/// K(x, [0,y]) together with the case of the closed form that produced it.
struct KernelEvaluation {
    double value = 0.0;
    KernelBranch branch = KernelBranch::Regular;
};

namespace detail {

// Sum of phi over x when x lies outside the zero set of C^{1:l}; nullopt
// otherwise (including the tie band, which counts as C^{1:l}(x) = 0).
template <GeneratorLike G>
std::optional<double> conditioning_sum(const ArchimedeanCopula<G>& c, std::span<const double> x) {
    const auto& g = c.generator();
    const double sx = c.sum_phi(x);
    if (sx == kInf) return std::nullopt;
    if (!g.strict() && sx >= g.phi_zero() * (1.0 - kZeroSetTieTolerance)) return std::nullopt;
    return sx;
}

template <GeneratorLike G>
double regular_ratio(const G& g, int l, double sx, double total) {
    if (!g.strict() && total >= g.phi_zero() * (1.0 - kZeroSetTieTolerance))
        total = std::min(total, g.phi_zero());
    const double num = g.log_abs_deriv(l, total);
    if (num == -kInf) return 0.0;
    return std::clamp(std::exp(num - g.log_abs_deriv(l, sx)), 0.0, 1.0);
}

template <GeneratorLike G>
void require_kernel_split(const ArchimedeanCopula<G>& c, std::span<const double> x, std::size_t ny) {
    const auto l = static_cast<int>(x.size());
    require(l >= 1 && l <= c.dim() - 1, Errc::DomainError, "conditioning block size must lie in [1, d-1]");
    require_unit_cube(x, x.size(), "kernel x");
    require(static_cast<int>(ny) == c.dim() - l, Errc::DimensionMismatch,
            "target block must have d - l coordinates");
}

}  // namespace detail

/// l-Markov kernel K_C(x, [0,y]) with l = x.size(), evaluated by the case
/// distinction: 1 on min(x) = 1 or on the zero set of C^{1:l}; 0 in the
/// interior of L_0; otherwise psi^(l)(sum phi(x) + sum phi(y)) / psi^(l)(sum phi(x)).
/// Boundary ties sum = phi(0) use the left limit of the regular ratio.
template <GeneratorLike G>
KernelEvaluation kernel_cdf(const ArchimedeanCopula<G>& c, std::span<const double> x, std::span<const double> y) {
    detail::require_kernel_split(c, x, y.size());
    detail::require_unit_cube(y, y.size(), "kernel y");
    if (*std::min_element(x.begin(), x.end()) == 1.0) return {1.0, KernelBranch::MinIsOne};
    const auto sx = detail::conditioning_sum(c, x);
    if (!sx) return {1.0, KernelBranch::InZeroMargin};
    const auto& g = c.generator();
    const double total = *sx + c.sum_phi(y);
    if (!g.strict() && total > g.phi_zero() * (1.0 + kZeroSetTieTolerance))
        return {0.0, KernelBranch::InteriorZeroSet};
    const int l = static_cast<int>(x.size());
    return {detail::regular_ratio(g, l, *sx, total), KernelBranch::Regular};
}

/// g_x(y) = K_C(x, [0,y] x I x ... x I).
template <GeneratorLike G>
double kernel_univariate_cdf(const ArchimedeanCopula<G>& c, std::span<const double> x, double y) {
    detail::require_kernel_split(c, x, static_cast<std::size_t>(c.dim()) - x.size());
    detail::require_open_cube(x, "kernel x");
    detail::require(y >= 0.0 && y <= 1.0, Errc::DomainError, "y outside [0,1]");
    const auto sx = detail::conditioning_sum(c, x);
    detail::require(sx.has_value(), Errc::DomainError, "x lies in the zero set of the marginal");
    const double py = c.generator().phi(y);
    if (py == kInf) return 0.0;
    const double total = *sx + py;
    const auto& g = c.generator();
    if (!g.strict() && total > g.phi_zero() * (1.0 + kZeroSetTieTolerance)) return 0.0;
    return detail::regular_ratio(g, static_cast<int>(x.size()), *sx, total);
}

struct QuantileResult {
    double value = 0.0;
    /// Set when the right-continuous generalized inverse of a step-shaped
    /// conditional distribution was returned.
    bool generalized = false;
};

inline constexpr int kQuantileBisectionSteps = 80;

/// g_x^{-1}(u) = psi(psi^(l)^{-1}(u * psi^(l)(sum phi(x))) - sum phi(x)) for
/// l <= d-2. For l = d-1 the conditional CDF is inverted by 80 bisection
/// steps on y, returning inf{y : g_x(y) >= u}.
template <GeneratorLike G>
QuantileResult kernel_univariate_quantile(const ArchimedeanCopula<G>& c, std::span<const double> x, double u) {
    detail::require_kernel_split(c, x, static_cast<std::size_t>(c.dim()) - x.size());
    detail::require_open_cube(x, "kernel x");
    detail::require(u >= 0.0 && u <= 1.0, Errc::RangeError, "probability outside [0,1]");
    const auto sx = detail::conditioning_sum(c, x);
    detail::require(sx.has_value(), Errc::DomainError, "x lies in the zero set of the marginal");
    const auto& g = c.generator();
    const int l = static_cast<int>(x.size());
    if (u == 1.0) return {1.0, false};

    if (l <= g.dim() - 2) {
        if (u == 0.0 && g.strict()) return {0.0, false};
        const double target = (u == 0.0 ? -kInf : std::log(u)) + g.log_abs_deriv(l, *sx);
        const double z = g.log_deriv_inverse(l, target);
        return {std::clamp(g.psi(std::max(0.0, z - *sx)), 0.0, 1.0), false};
    }

    double lo = 0.0;
    double hi = 1.0;
    for (int i = 0; i < kQuantileBisectionSteps; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (kernel_univariate_cdf(c, x, mid) >= u) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return {hi, !g.top_derivative_continuous()};
}

/// Consolidation: each contiguous group of target coordinates
/// (sizes in `groups`) is replaced by its marginal copula value and the
/// kernel of the lower-dimensional marginal is evaluated.
template <GeneratorLike G>
double kernel_consolidate(const ArchimedeanCopula<G>& c, std::span<const double> x, std::span<const double> y,
                          std::span<const int> groups) {
    detail::require(c.strict(), Errc::NotStrict, "consolidation needs a strict generator");
    detail::require_kernel_split(c, x, y.size());
    detail::require(std::accumulate(groups.begin(), groups.end(), 0) == static_cast<int>(y.size()) &&
                        std::all_of(groups.begin(), groups.end(), [](int s) { return s >= 1; }),
                    Errc::DomainError, "grouping must partition the target coordinates");
    std::vector<double> merged;
    std::size_t pos = 0;
    for (int size : groups) {
        const auto block = y.subspan(pos, static_cast<std::size_t>(size));
        merged.push_back(size == 1 ? block[0] : c.marginal(size).cdf(block));
        pos += static_cast<std::size_t>(size);
    }
    const auto reduced = c.marginal(static_cast<int>(x.size() + merged.size()));
    return kernel_cdf(reduced, x, merged).value;
}

/// 1-Markov kernel adapters shared by the metrics: K(x, [0,y]) with scalar x.
template <GeneratorLike G>
double kernel_one(const ArchimedeanCopula<G>& c, double x, std::span<const double> y) {
    const double xs[1] = {x};
    return kernel_cdf(c, xs, y).value;
}

inline double kernel_one(const FixtureCopulaB& b, double x, std::span<const double> y) {
    return b.kernel_first(x, y);
}

}  // namespace archkernel
