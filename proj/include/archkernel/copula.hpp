#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <span>
#include <string>
#include <vector>

#include "archkernel/error.hpp"
#include "archkernel/generator.hpp"

namespace archkernel {

/// Anything with a dimension and a distribution function on the unit cube.
template <class C>
concept CopulaLike = requires(const C& c, std::span<const double> x) {
    { c.dim() } -> std::convertible_to<int>;
    { c.cdf(x) } -> std::convertible_to<double>;
};

namespace detail {

inline void require_unit_cube(std::span<const double> x, std::size_t dim, const char* what) {
    require(x.size() == dim, Errc::DimensionMismatch,
            std::string(what) + ": expected " + std::to_string(dim) + " coordinates, got " +
                std::to_string(x.size()));
    for (double v : x)
        require(v >= 0.0 && v <= 1.0, Errc::DomainError, std::string(what) + ": coordinate outside [0,1]");
}

inline void require_open_cube(std::span<const double> x, const char* what) {
    for (double v : x)
        require(v > 0.0 && v < 1.0, Errc::DomainError, std::string(what) + ": coordinate outside (0,1)");
}

}  // namespace detail

/// C(x) = psi(phi(x_1) + ... + phi(x_d)).
///
/// The copula dimension may be smaller than the generator's monotonicity
/// order; that is how the leading marginals C^{1:k} are represented.
template <GeneratorLike G = Generator>
class ArchimedeanCopula {
public:
    using generator_type = G;

    explicit ArchimedeanCopula(G gen) : gen_(std::move(gen)), d_(gen_.dim()) {}

    ArchimedeanCopula(G gen, int d) : gen_(std::move(gen)), d_(d) {
        detail::require(d >= 1 && d <= gen_.dim(), Errc::DimensionMismatch,
                        "copula dimension must lie in [1, generator dimension]");
    }

    [[nodiscard]] int dim() const noexcept { return d_; }
    [[nodiscard]] const G& generator() const noexcept { return gen_; }
    [[nodiscard]] bool strict() const { return gen_.strict(); }
    [[nodiscard]] std::string describe() const {
        return gen_.describe() + " copula, dim " + std::to_string(d_);
    }

    /// Leading k-dimensional marginal C^{1:k}.
    [[nodiscard]] ArchimedeanCopula marginal(int k) const { return ArchimedeanCopula(gen_, k); }

    /// Sum of phi over the coordinates; +inf once any phi is infinite.
    [[nodiscard]] double sum_phi(std::span<const double> x) const {
        double s = 0.0;
        for (double v : x) {
            const double p = gen_.phi(v);
            if (p == kInf) return kInf;
            s += p;
        }
        return s;
    }

    [[nodiscard]] double cdf(std::span<const double> x) const {
        detail::require_unit_cube(x, static_cast<std::size_t>(d_), "cdf");
        for (double v : x)
            if (v == 0.0) return 0.0;
        return gen_.psi(sum_phi(x));
    }

    /// log of the density prod |phi'(x_i)| * |psi^(d)(sum phi)|.
    [[nodiscard]] double log_density(std::span<const double> x) const {
        detail::require_unit_cube(x, static_cast<std::size_t>(d_), "density");
        detail::require_open_cube(x, "density");
        if (d_ == 1) return 0.0;
        const double s = sum_phi(x);
        if (!gen_.strict() && s == gen_.phi_zero())
            detail::fail(Errc::NotDifferentiable, "density undefined on the zero-set boundary");
        double acc = gen_.log_abs_deriv(d_, s);
        if (acc == -kInf) return -kInf;
        for (double v : x) acc -= gen_.log_abs_deriv(1, gen_.phi(v));
        return acc;
    }

    [[nodiscard]] double density(std::span<const double> x) const { return std::exp(log_density(x)); }

private:
    G gen_;
    int d_;
};

template <GeneratorLike G>
double cdf(const ArchimedeanCopula<G>& c, std::span<const double> x) {
    return c.cdf(x);
}

template <GeneratorLike G>
double density(const ArchimedeanCopula<G>& c, std::span<const double> x) {
    return c.density(x);
}

enum class ZeroSetMembership { Outside, Boundary, Interior };

constexpr std::string_view to_string(ZeroSetMembership m) noexcept {
    switch (m) {
        case ZeroSetMembership::Outside: return "outside";
        case ZeroSetMembership::Boundary: return "boundary";
        case ZeroSetMembership::Interior: return "interior";
    }
    return "unknown";
}

/// Point plus the size of the leading block it refers to (0 = whole copula).
struct ZeroSetQuery {
    std::vector<double> point;
    int margin = 0;
};

inline constexpr double kZeroSetTieTolerance = 1e-12;

/// Classifies a point against L_0 = {C = 0}: interior iff sum phi > phi(0),
/// boundary iff equal (relative tolerance 1e-12).
template <GeneratorLike G>
ZeroSetMembership in_zero_set(const ArchimedeanCopula<G>& c, const ZeroSetQuery& q) {
    const int k = q.margin == 0 ? c.dim() : q.margin;
    detail::require(k >= 1 && k <= c.dim(), Errc::DimensionMismatch, "zero-set margin out of range");
    detail::require_unit_cube(q.point, static_cast<std::size_t>(k), "in_zero_set");
    const auto& g = c.generator();
    const double s = c.sum_phi(q.point);
    if (g.strict()) return s == kInf ? ZeroSetMembership::Boundary : ZeroSetMembership::Outside;
    const double p0 = g.phi_zero();
    if (std::abs(s - p0) <= kZeroSetTieTolerance * p0) return ZeroSetMembership::Boundary;
    return s > p0 ? ZeroSetMembership::Interior : ZeroSetMembership::Outside;
}

/// V_C((a, b]) as the signed sum over the 2^d vertices; tiny negative
/// rounding residue (>= -1e-12) is reported as 0.
template <CopulaLike C>
double box_volume(const C& c, std::span<const double> a, std::span<const double> b) {
    const auto d = static_cast<std::size_t>(c.dim());
    detail::require(a.size() == d && b.size() == d, Errc::DimensionMismatch, "box corners have wrong size");
    for (std::size_t i = 0; i < d; ++i) {
        detail::require(a[i] >= 0.0 && b[i] <= 1.0, Errc::DomainError, "box outside the unit cube");
        detail::require(a[i] <= b[i], Errc::InvalidBox, "box lower corner exceeds upper corner");
    }
    std::vector<double> v(d);
    double vol = 0.0;
    for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
        int lower = 0;
        for (std::size_t i = 0; i < d; ++i) {
            const bool lo = (mask >> i) & 1u;
            v[i] = lo ? a[i] : b[i];
            lower += lo;
        }
        vol += (lower % 2 == 0 ? 1.0 : -1.0) * c.cdf(v);
    }
    if (vol < 0.0 && vol >= -1e-12) vol = 0.0;
    return vol;
}

/// B(x, y, z) = z * min(x, y): comonotone in the first two coordinates,
/// independent of the third. Its 1-Markov kernel is singular although the
/// bivariate marginal kernel structure looks harmless.
struct FixtureCopulaB {
    [[nodiscard]] static constexpr int dim() noexcept { return 3; }
    [[nodiscard]] static std::string describe() { return "fixture-b copula, dim 3"; }

    [[nodiscard]] double cdf(std::span<const double> x) const {
        detail::require_unit_cube(x, 3, "cdf");
        return x[2] * std::min(x[0], x[1]);
    }

    /// K_B(x, [0,y2] x [0,y3]) = 1{x <= y2} * y3.
    [[nodiscard]] double kernel_first(double x, std::span<const double> y) const {
        detail::require(y.size() == 2, Errc::DimensionMismatch, "fixture kernel needs two targets");
        return (x <= y[0] ? 1.0 : 0.0) * y[1];
    }

    /// K_B((x, y), [0, z]) = z.
    [[nodiscard]] double kernel_second(std::span<const double> /*xy*/, double z) const { return z; }
};

/// Mixed central difference of order x.size() of f around x with step h.
namespace detail {
template <class F>
double mixed_central_difference(F&& f, std::span<const double> x, double h) {
    const std::size_t l = x.size();
    std::vector<double> p(x.begin(), x.end());
    double acc = 0.0;
    for (std::size_t mask = 0; mask < (std::size_t{1} << l); ++mask) {
        int minus = 0;
        for (std::size_t i = 0; i < l; ++i) {
            const bool down = (mask >> i) & 1u;
            p[i] = x[i] + (down ? -h : h);
            minus += down;
        }
        acc += (minus % 2 == 0 ? 1.0 : -1.0) * f(std::span<const double>(p));
    }
    return acc / std::pow(2.0 * h, static_cast<double>(l));
}

template <class F>
double richardson_mixed(F&& f, std::span<const double> x, double h) {
    const double d0 = mixed_central_difference(f, x, h);
    const double d1 = mixed_central_difference(f, x, 0.5 * h);
    const double d2 = mixed_central_difference(f, x, 0.25 * h);
    const double r0 = (4.0 * d1 - d0) / 3.0;
    const double r1 = (4.0 * d2 - d1) / 3.0;
    return (16.0 * r1 - r0) / 15.0;
}
}  // namespace detail

/// Finite-difference kernel: d^l C(x, y) / dx_1..dx_l divided by the same
/// derivative at y = 1 (the marginal density), Richardson-extrapolated over
/// h, h/2, h/4. The step shrinks to keep every stencil inside (0,1)^l.
template <CopulaLike C>
double partial_derivative_kernel_oracle(const C& c, std::span<const double> x, std::span<const double> y,
                                        double h = 1e-2) {
    const std::size_t l = x.size();
    const auto d = static_cast<std::size_t>(c.dim());
    detail::require(l >= 1 && l + y.size() == d && !y.empty(), Errc::DimensionMismatch,
                    "oracle needs x and y splitting the copula dimension");
    detail::require_open_cube(x, "oracle");
    detail::require(h > 0.0, Errc::DomainError, "step must be positive");
    for (double v : x) h = std::min(h, 0.5 * std::min(v, 1.0 - v));
    if (h < 1e-6) detail::fail(Errc::StepTooSmall, "conditioning point too close to the cube boundary");

    std::vector<double> full(d);
    std::copy(y.begin(), y.end(), full.begin() + static_cast<std::ptrdiff_t>(l));
    auto joint = [&](std::span<const double> s) {
        std::copy(s.begin(), s.end(), full.begin());
        return c.cdf(full);
    };
    std::vector<double> ones(d, 1.0);
    auto marg = [&](std::span<const double> s) {
        std::copy(s.begin(), s.end(), ones.begin());
        return c.cdf(ones);
    };
    const double num = detail::richardson_mixed(joint, x, h);
    const double den = detail::richardson_mixed(marg, x, h);
    if (!(den > 1e-8)) detail::fail(Errc::StepTooSmall, "marginal density estimate lost to cancellation");
    return num / den;
}

}  // namespace archkernel
