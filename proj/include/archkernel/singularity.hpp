#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "archkernel/copula.hpp"
#include "archkernel/kernel.hpp"
#include "archkernel/metrics.hpp"
#include "archkernel/rng.hpp"

namespace archkernel {

/// Monte Carlo estimate of the absolutely continuous mass, the integral of
/// the density over I^d. It is 1 for absolutely continuous copulas and 0 for
/// singular ones.
template <GeneratorLike G>
Estimate density_mass(const ArchimedeanCopula<G>& c, std::size_t n, std::uint64_t seed) {
    detail::require(n >= 2, Errc::DomainError, "need at least two draws");
    const auto d = static_cast<std::size_t>(c.dim());
    std::vector<double> per(n);
    detail::parallel_for(n, [&](std::size_t i) {
        StreamRng rng(seed, streams::kIntegration + i);
        std::vector<double> u(d);
        for (auto& v : u) v = rng.uniform();
        try {
            per[i] = c.density(u);
        } catch (const Error& e) {
            // Exact zero-set boundary hits have measure zero.
            if (e.code() != Errc::NotDifferentiable) throw;
            per[i] = 0.0;
        }
    });
    return detail::mean_with_error(per);
}

/// y -> g_x(y) on an equispaced grid for the top-order kernel (l = d-1),
/// with the largest jump between neighbours and, for non-strict
/// generators, the predicted jump location psi(phi(0) - sum phi(x)).
struct StepProfile {
    std::vector<double> y;
    std::vector<double> value;
    double max_jump = 0.0;
    double observed_location = 0.0;
    double predicted_location = std::numeric_limits<double>::quiet_NaN();
};

template <GeneratorLike G>
StepProfile top_kernel_profile(const ArchimedeanCopula<G>& c, std::span<const double> x, std::size_t points = 1001) {
    detail::require(static_cast<int>(x.size()) == c.dim() - 1, Errc::DimensionMismatch,
                    "the top-order kernel conditions on d-1 coordinates");
    detail::require(points >= 2, Errc::DomainError, "profile needs at least two points");
    StepProfile p;
    for (std::size_t i = 0; i < points; ++i) {
        const double y = static_cast<double>(i) / static_cast<double>(points - 1);
        p.y.push_back(y);
        p.value.push_back(kernel_univariate_cdf(c, x, y));
    }
    for (std::size_t i = 1; i < points; ++i) {
        const double jump = p.value[i] - p.value[i - 1];
        if (jump > p.max_jump) {
            p.max_jump = jump;
            p.observed_location = 0.5 * (p.y[i] + p.y[i - 1]);
        }
    }
    const auto& g = c.generator();
    if (!g.strict()) p.predicted_location = g.psi(g.phi_zero() - c.sum_phi(x));
    return p;
}

/// Kernels of the fixture copula B(x,y,z) = z min(x,y): the first-order kernel
/// puts all its mass on the line {y = x}, a Lebesgue-null set, while the
/// second-order kernel is the uniform distribution for every (x, y).
struct FixtureSingularityReport {
    double min_strip_mass = 1.0;
    double strip_area = 0.0;
    double second_kernel_max_deviation = 0.0;
    bool first_kernel_singular = false;
    bool second_kernel_uniform = false;
};

inline FixtureSingularityReport fixture_b_singularity(std::size_t grid = 101, double eps = 1e-9) {
    const FixtureCopulaB b;
    FixtureSingularityReport r;
    r.strip_area = 2.0 * eps;
    for (std::size_t i = 1; i + 1 < grid; ++i) {
        const double x = static_cast<double>(i) / static_cast<double>(grid - 1);
        // K(x, [x-eps, x+eps] x I): difference of two kernel CDF values.
        const double upper[2] = {std::min(1.0, x + eps), 1.0};
        const double lower[2] = {x - eps, 1.0};
        r.min_strip_mass = std::min(r.min_strip_mass, b.kernel_first(x, upper) - b.kernel_first(x, lower));
        for (std::size_t j = 0; j < grid; ++j) {
            const double y = static_cast<double>(j) / static_cast<double>(grid - 1);
            const double xy[2] = {x, y};
            for (std::size_t k = 0; k < grid; k += 10) {
                const double z = static_cast<double>(k) / static_cast<double>(grid - 1);
                r.second_kernel_max_deviation = std::max(r.second_kernel_max_deviation, std::abs(b.kernel_second(xy, z) - z));
            }
        }
    }
    r.first_kernel_singular = r.min_strip_mass == 1.0;
    r.second_kernel_uniform = r.second_kernel_max_deviation == 0.0;
    return r;
}

}  // namespace archkernel
