#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "archkernel/copula.hpp"
#include "archkernel/detail/quadrature.hpp"
#include "archkernel/error.hpp"
#include "archkernel/generator.hpp"
#include "archkernel/kernel.hpp"

namespace archkernel {

/// psi^x(z) = psi^(l)(sum phi(x) + s z) / psi^(l)(sum phi(x)), a generator of
/// dimension d - l. The scale s is 1 unless renormalization to psi^x(1) = 1/2
/// was requested.
template <GeneratorLike G = Generator>
class ConditionalGenerator {
public:
    ConditionalGenerator(G base, int copula_dim, std::span<const double> x, bool renormalize = false)
        : base_(std::move(base)), ell_(static_cast<int>(x.size())), d_(copula_dim - ell_) {
        detail::require(base_.strict(), Errc::NotStrict, "conditional generators need a strict base");
        detail::require(ell_ >= 1 && d_ >= 2 && copula_dim <= base_.dim(), Errc::DomainError,
                        "conditioning block size must lie in [1, d-2]");
        detail::require_open_cube(x, "conditioning point");
        for (double v : x) sx_ += base_.phi(v);
        log_norm_ = base_.log_abs_deriv(ell_, sx_);
        if (renormalize) scale_ = phi(0.5);
        log_scale_ = std::log(scale_);
    }

    [[nodiscard]] const G& base() const noexcept { return base_; }
    [[nodiscard]] int conditioning_size() const noexcept { return ell_; }
    [[nodiscard]] double conditioning_sum() const noexcept { return sx_; }
    [[nodiscard]] double scale() const noexcept { return scale_; }

    [[nodiscard]] int dim() const noexcept { return d_; }
    [[nodiscard]] bool strict() const noexcept { return true; }
    [[nodiscard]] double phi_zero() const noexcept { return kInf; }
    [[nodiscard]] bool top_derivative_continuous() const { return base_.top_derivative_continuous(); }

    [[nodiscard]] std::string describe() const {
        return "conditional[l=" + std::to_string(ell_) + ",sum_phi=" + detail::fmt_double(sx_) + "] of " +
               base_.describe();
    }

    [[nodiscard]] double log_abs_deriv(int m, double z) const {
        if (z == kInf) return -kInf;
        return m * log_scale_ + base_.log_abs_deriv(ell_ + m, sx_ + scale_ * z) - log_norm_;
    }
    [[nodiscard]] double log_abs_deriv_at_zero(int m) const { return log_abs_deriv(m, 0.0); }

    [[nodiscard]] double psi(double z) const {
        if (z == 0.0) return 1.0;
        return std::min(1.0, std::exp(log_abs_deriv(0, z)));
    }
    [[nodiscard]] double deriv(int m, double z) const { return deriv_sign(m) * std::exp(log_abs_deriv(m, z)); }

    [[nodiscard]] double phi(double t) const {
        if (t >= 1.0) return 0.0;
        if (t <= 0.0) return kInf;
        return log_deriv_inverse(0, std::log(t));
    }

    [[nodiscard]] double log_deriv_inverse(int m, double log_abs_v) const {
        const double target = log_abs_v - m * log_scale_ + log_norm_;
        const double z = base_.log_deriv_inverse(ell_ + m, target);
        if (z == kInf) return kInf;
        return std::max(0.0, (z - sx_) / scale_);
    }

private:
    G base_;
    int ell_;
    int d_;
    double sx_ = 0.0;
    double log_norm_ = 0.0;
    double scale_ = 1.0;
    double log_scale_ = 0.0;
};

/// The (d-l)-dimensional copula of K_C(x, .). Evaluates both through the
/// Archimedean form psi^x(sum phi^x(u)) and through the kernel at the
/// conditional quantiles g_x^{-1}(u_j).
template <GeneratorLike G = Generator>
class ConditionalCopula {
public:
    using generator_type = ConditionalGenerator<G>;

    ConditionalCopula(ArchimedeanCopula<G> base, std::span<const double> x, bool renormalize = false)
        : base_(std::move(base)),
          x_(x.begin(), x.end()),
          arch_(ConditionalGenerator<G>(base_.generator(), base_.dim(), x, renormalize)) {}

    [[nodiscard]] int dim() const noexcept { return arch_.dim(); }
    [[nodiscard]] const ArchimedeanCopula<G>& base() const noexcept { return base_; }
    [[nodiscard]] const std::vector<double>& x() const noexcept { return x_; }
    [[nodiscard]] const ArchimedeanCopula<ConditionalGenerator<G>>& archimedean() const noexcept { return arch_; }
    [[nodiscard]] const ConditionalGenerator<G>& generator() const noexcept { return arch_.generator(); }
    [[nodiscard]] std::string describe() const { return arch_.describe(); }

    [[nodiscard]] double cdf(std::span<const double> u) const { return arch_.cdf(u); }

    /// K_C(x, [0, g_x^{-1}(u_1)] x ... x [0, g_x^{-1}(u_{d-l})]).
    [[nodiscard]] double cdf_ratio(std::span<const double> u) const {
        detail::require_unit_cube(u, static_cast<std::size_t>(dim()), "conditional cdf");
        std::vector<double> y(u.size());
        for (std::size_t j = 0; j < u.size(); ++j) {
            if (u[j] == 0.0) return 0.0;
            y[j] = kernel_univariate_quantile(base_, x_, u[j]).value;
        }
        return kernel_cdf(base_, x_, y).value;
    }

private:
    ArchimedeanCopula<G> base_;
    std::vector<double> x_;
    ArchimedeanCopula<ConditionalGenerator<G>> arch_;
};

template <GeneratorLike G>
double conditional_generator(const ArchimedeanCopula<G>& c, std::span<const double> x, double z) {
    detail::require(!std::isnan(z) && z >= 0.0, Errc::DomainError, "z must be non-negative");
    return ConditionalGenerator<G>(c.generator(), c.dim(), x).psi(z);
}

template <GeneratorLike G>
ConditionalCopula<G> conditional_copula(const ArchimedeanCopula<G>& c, std::span<const double> x,
                                        bool renormalize = false) {
    return ConditionalCopula<G>(c, x, renormalize);
}

/// psi^[0,x](z) = psi(z + phi(C^{1:l}(x))) / C^{1:l}(x): generator of the
/// copula of the last coordinates given X <= x.
template <GeneratorLike G>
double box_conditional_generator(const ArchimedeanCopula<G>& c, std::span<const double> x, double z) {
    const auto l = static_cast<int>(x.size());
    detail::require(c.strict(), Errc::NotStrict, "box conditioning needs a strict generator");
    detail::require(l >= 1 && l <= c.dim() - 1, Errc::DomainError, "conditioning block size must lie in [1, d-1]");
    detail::require(!std::isnan(z) && z >= 0.0, Errc::DomainError, "z must be non-negative");
    const double mass = c.marginal(l).cdf(x);
    detail::require(mass > 0.0, Errc::ZeroMass, "conditioning box has zero mass");
    const auto& g = c.generator();
    return g.psi(z + g.phi(mass)) / mass;
}

struct MixtureReport {
    std::vector<double> z;
    std::vector<double> expected;
    std::vector<double> integrated;
    double max_abs_error = 0.0;
};

namespace detail {

// Integrates f(s) against mu_{C^{1:l}} over the box [0, upper] by tensor
// Gauss-Legendre with the marginal density (uniform when l = 1).
template <GeneratorLike G, class F>
double integrate_marginal_box(const ArchimedeanCopula<G>& c, int l, std::span<const double> upper, F&& f,
                              std::size_t nodes_per_axis) {
    const auto marg = c.marginal(l);
    std::vector<Rule> rules;
    for (int i = 0; i < l; ++i) {
        const auto pts = graded_breakpoints(0.0, upper[static_cast<std::size_t>(i)],
                                            std::max(1, static_cast<int>(nodes_per_axis) / 4), 10);
        rules.push_back(composite(pts, 4));
    }
    std::vector<std::size_t> idx(static_cast<std::size_t>(l), 0);
    std::vector<double> s(static_cast<std::size_t>(l));
    double total = 0.0;
    while (true) {
        double w = 1.0;
        for (int i = 0; i < l; ++i) {
            const auto k = static_cast<std::size_t>(i);
            s[k] = rules[k].nodes[idx[k]];
            w *= rules[k].weights[idx[k]];
        }
        const double dens = l == 1 ? 1.0 : marg.density(s);
        total += w * dens * f(std::span<const double>(s));
        int i = 0;
        for (; i < l; ++i) {
            const auto k = static_cast<std::size_t>(i);
            if (++idx[k] < rules[k].size()) break;
            idx[k] = 0;
        }
        if (i == l) break;
    }
    return total;
}

}  // namespace detail

/// psi(z) = integral of psi^s(z) against mu_{C^{1:l}}, checked on a z-grid.
template <GeneratorLike G>
MixtureReport mixture_identity_check(const ArchimedeanCopula<G>& c, int l, std::span<const double> zs,
                                     std::size_t nodes_per_axis = 64) {
    detail::require(c.strict(), Errc::NotStrict, "mixture identity needs a strict generator");
    MixtureReport rep;
    const std::vector<double> ones(static_cast<std::size_t>(l), 1.0);
    for (double z : zs) {
        const double want = c.generator().psi(z);
        const double got = detail::integrate_marginal_box(
            c, l, ones, [&](std::span<const double> s) { return conditional_generator(c, s, z); }, nodes_per_axis);
        rep.z.push_back(z);
        rep.expected.push_back(want);
        rep.integrated.push_back(got);
        rep.max_abs_error = std::max(rep.max_abs_error, std::abs(want - got));
    }
    return rep;
}

/// psi^[0,x](z) C^{1:l}(x) = integral over [0,x] of psi^s(z) d mu_{C^{1:l}}(s).
template <GeneratorLike G>
MixtureReport box_mixture_check(const ArchimedeanCopula<G>& c, std::span<const double> x, std::span<const double> zs,
                                std::size_t nodes_per_axis = 64) {
    const int l = static_cast<int>(x.size());
    MixtureReport rep;
    const double mass = c.marginal(l).cdf(x);
    for (double z : zs) {
        const double want = box_conditional_generator(c, x, z) * mass;
        const double got = detail::integrate_marginal_box(
            c, l, x, [&](std::span<const double> s) { return conditional_generator(c, s, z); }, nodes_per_axis);
        rep.z.push_back(z);
        rep.expected.push_back(want);
        rep.integrated.push_back(got);
        rep.max_abs_error = std::max(rep.max_abs_error, std::abs(want - got));
    }
    return rep;
}

enum class CheckStatus { Pass, Fail, NotApplicable };

constexpr std::string_view to_string(CheckStatus s) noexcept {
    switch (s) {
        case CheckStatus::Pass: return "pass";
        case CheckStatus::Fail: return "fail";
        case CheckStatus::NotApplicable: return "not-applicable";
    }
    return "unknown";
}

struct LogConvexityReport {
    CheckStatus status = CheckStatus::NotApplicable;
    double min_second_difference = 0.0;
    double worst_z = 0.0;
    /// Same check on the conditional generator at x = 1/2 (l = 1), which
    /// carries conditional increasingness over to C^x.
    CheckStatus transfer = CheckStatus::NotApplicable;
};

namespace detail {
template <GeneratorLike G>
std::pair<double, double> min_log_second_difference(const G& g, int order, std::span<const double> zs) {
    double worst = kInf;
    double where = 0.0;
    for (std::size_t i = 1; i + 1 < zs.size(); ++i) {
        const double a = g.log_abs_deriv(order, zs[i - 1]);
        const double b = g.log_abs_deriv(order, zs[i]);
        const double e = g.log_abs_deriv(order, zs[i + 1]);
        const double s1 = (b - a) / (zs[i] - zs[i - 1]);
        const double s2 = (e - b) / (zs[i + 1] - zs[i]);
        const double dd = (s2 - s1) / (0.5 * (zs[i + 1] - zs[i - 1]));
        // Rounding floor of log values, amplified by the divided difference.
        const double noise = 1e-12 * (std::abs(a) + std::abs(b) + std::abs(e) + 1.0) /
                             ((zs[i] - zs[i - 1]) * (zs[i + 1] - zs[i]));
        if (dd + noise < worst) {
            worst = dd + noise;
            where = zs[i];
        }
    }
    return {worst, where};
}
}  // namespace detail

/// Log-convexity of (-1)^(d-1) D^- psi^(d-2) for the d-dimensional copula,
/// via second divided differences of its logarithm on a sorted grid.
template <GeneratorLike G>
LogConvexityReport log_convexity_check(const ArchimedeanCopula<G>& c, std::span<const double> grid) {
    LogConvexityReport rep;
    if (!c.strict()) return rep;
    std::vector<double> zs(grid.begin(), grid.end());
    std::sort(zs.begin(), zs.end());
    const int d = c.dim();
    const auto [worst, where] = detail::min_log_second_difference(c.generator(), d - 1, zs);
    rep.min_second_difference = worst;
    rep.worst_z = where;
    rep.status = worst >= 0.0 ? CheckStatus::Pass : CheckStatus::Fail;
    if (rep.status == CheckStatus::Pass && d >= 3) {
        const double half[1] = {0.5};
        const ConditionalGenerator<G> cg(c.generator(), d, half);
        rep.transfer = detail::min_log_second_difference(cg, d - 2, zs).first >= 0.0 ? CheckStatus::Pass
                                                                                     : CheckStatus::Fail;
    }
    return rep;
}

}  // namespace archkernel
