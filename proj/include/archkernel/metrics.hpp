#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "archkernel/conditional.hpp"
#include "archkernel/copula.hpp"
#include "archkernel/detail/parallel.hpp"
#include "archkernel/detail/quadrature.hpp"
#include "archkernel/detail/roots.hpp"
#include "archkernel/error.hpp"
#include "archkernel/kernel.hpp"
#include "archkernel/rng.hpp"
#include "archkernel/sampling.hpp"

namespace archkernel {

enum class IntegrationMethod { TensorGauss, MonteCarlo };

constexpr std::string_view to_string(IntegrationMethod m) noexcept {
    return m == IntegrationMethod::TensorGauss ? "tensor-gauss" : "monte-carlo";
}

inline IntegrationMethod parse_integration_method(std::string_view s) {
    if (s == "tensor-gauss" || s == "tensor") return IntegrationMethod::TensorGauss;
    if (s == "monte-carlo" || s == "mc") return IntegrationMethod::MonteCarlo;
    detail::fail(Errc::InvalidConfig, "unknown integration method '" + std::string(s) + "'");
}

/// How an integral is computed. For tensor-gauss, nodes_or_samples is the
/// approximate node count per axis; for monte-carlo, the number of draws.
struct IntegrationSpec {
    IntegrationMethod method = IntegrationMethod::TensorGauss;
    std::size_t nodes_or_samples = 128;
    std::uint64_t seed = 0;
    double reported_tolerance = 1e-3;

    static IntegrationSpec tensor(std::size_t nodes, double tol = 1e-3) {
        return {IntegrationMethod::TensorGauss, nodes, 0, tol};
    }
    static IntegrationSpec monte_carlo(std::size_t samples, std::uint64_t seed, double tol = 1e-3) {
        return {IntegrationMethod::MonteCarlo, samples, seed, tol};
    }
};

/// Value with an error indication: the Monte Carlo standard error, or the
/// difference to the half-resolution rule for quadrature.
struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
};

namespace detail {

// Pairwise summation keeps reductions deterministic and accurate.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 16) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t h = v.size() / 2;
    return pairwise_sum(v.first(h)) + pairwise_sum(v.subspan(h));
}

// Mean of per-draw values and its standard error. The mean is not clamped, so
// estimates of quantities at a bound keep their sampling noise.
inline Estimate mean_with_error(std::span<const double> per) {
    const double n = static_cast<double>(per.size());
    const double mean = pairwise_sum(per) / n;
    std::vector<double> sq(per.size());
    for (std::size_t i = 0; i < per.size(); ++i) sq[i] = (per[i] - mean) * (per[i] - mean);
    const double var = pairwise_sum(sq) / (n - 1.0);
    return {mean, std::sqrt(var / n)};
}

inline std::vector<double> uniform_grid(std::size_t points) {
    std::vector<double> g(points);
    for (std::size_t i = 0; i < points; ++i) g[i] = static_cast<double>(i) / static_cast<double>(points - 1);
    g.back() = 1.0;
    return g;
}

// Visits every point of the tensor grid axis^dim.
template <class F>
void for_each_grid_point(std::span<const double> axis, std::size_t dim, F&& f) {
    std::vector<std::size_t> idx(dim, 0);
    std::vector<double> p(dim, axis.empty() ? 0.0 : axis[0]);
    if (dim == 0) {
        f(std::span<const double>(p));
        return;
    }
    while (true) {
        for (std::size_t k = 0; k < dim; ++k) p[k] = axis[idx[k]];
        f(std::span<const double>(p));
        std::size_t k = 0;
        for (; k < dim; ++k) {
            if (++idx[k] < axis.size()) break;
            idx[k] = 0;
        }
        if (k == dim) return;
    }
}

// Regular-branch kernel ratio with precomputed log normalizer.
template <GeneratorLike G>
double kernel_ratio(const G& g, int l, double sx, double log_norm, double phi_y) {
    if (phi_y == kInf) return 0.0;
    double total = sx + phi_y;
    if (!g.strict()) {
        if (total > g.phi_zero() * (1.0 + kZeroSetTieTolerance)) return 0.0;
        total = std::min(total, g.phi_zero());
    }
    const double num = g.log_abs_deriv(l, total);
    if (num == -kInf) return 0.0;
    return std::clamp(std::exp(num - log_norm), 0.0, 1.0);
}

}  // namespace detail

/// max |A - B| over the tensor grid with `resolution` points per axis.
template <CopulaLike A, CopulaLike B>
double d_uniform(const A& a, const B& b, std::size_t resolution = 21) {
    detail::require(a.dim() == b.dim(), Errc::DimensionMismatch, "copulas differ in dimension");
    detail::require(resolution >= 2, Errc::DomainError, "grid needs at least two points per axis");
    const auto axis = detail::uniform_grid(resolution);
    double worst = 0.0;
    detail::for_each_grid_point(axis, static_cast<std::size_t>(a.dim()), [&](std::span<const double> p) {
        worst = std::max(worst, std::abs(a.cdf(p) - b.cdf(p)));
    });
    return worst;
}

enum class KernelMetric { D1, D2, Dinf };

constexpr std::string_view to_string(KernelMetric m) noexcept {
    switch (m) {
        case KernelMetric::D1: return "D1";
        case KernelMetric::D2: return "D2";
        case KernelMetric::Dinf: return "Dinf";
    }
    return "unknown";
}

inline KernelMetric parse_kernel_metric(std::string_view s) {
    if (s == "D1" || s == "d1") return KernelMetric::D1;
    if (s == "D2" || s == "d2") return KernelMetric::D2;
    if (s == "Dinf" || s == "dinf" || s == "Dinfty") return KernelMetric::Dinf;
    detail::fail(Errc::InvalidConfig, "unknown kernel metric '" + std::string(s) + "'");
}

inline constexpr std::size_t kDinfGridPoints = 51;

namespace detail {
// Kernel differences are bounded, so two levels of end refinement suffice.
inline Rule metric_rule(std::size_t nodes) { return unit_rule(nodes, 4, 2); }
}  // namespace detail

/// 1-Markov-kernel distances. D1 and D2 integrate over I^d; Dinf takes the
/// max over a 51^(d-1) y-grid of the x-integral, hence a lower bound of the sup.
template <class A, class B>
double kernel_metric(const A& a, const B& b, KernelMetric which, const IntegrationSpec& spec) {
    detail::require(a.dim() == b.dim(), Errc::DimensionMismatch, "copulas differ in dimension");
    const auto ny = static_cast<std::size_t>(a.dim() - 1);
    auto diff = [&](double x, std::span<const double> y) { return kernel_one(a, x, y) - kernel_one(b, x, y); };

    if (which == KernelMetric::Dinf) {
        const auto xr = detail::metric_rule(spec.nodes_or_samples);
        const auto axis = detail::uniform_grid(kDinfGridPoints);
        std::vector<std::vector<double>> ys;
        detail::for_each_grid_point(axis, ny, [&](std::span<const double> y) { ys.emplace_back(y.begin(), y.end()); });
        std::vector<double> vals(ys.size());
        detail::parallel_for(ys.size(), [&](std::size_t k) {
            double acc = 0.0;
            for (std::size_t i = 0; i < xr.size(); ++i) acc += xr.weights[i] * std::abs(diff(xr.nodes[i], ys[k]));
            vals[k] = acc;
        });
        return *std::max_element(vals.begin(), vals.end());
    }

    const bool squared = which == KernelMetric::D2;
    double integral = 0.0;
    if (spec.method == IntegrationMethod::MonteCarlo) {
        const std::size_t n = spec.nodes_or_samples;
        std::vector<double> vals(n);
        detail::parallel_for(n, [&](std::size_t i) {
            StreamRng rng(spec.seed, streams::kIntegration + i);
            const double x = rng.uniform();
            std::vector<double> y(ny);
            for (auto& v : y) v = rng.uniform();
            const double e = diff(x, y);
            vals[i] = squared ? e * e : std::abs(e);
        });
        integral = detail::pairwise_sum(vals) / static_cast<double>(n);
    } else {
        const auto rule = detail::metric_rule(spec.nodes_or_samples);
        std::vector<double> vals(rule.size());
        detail::parallel_for(rule.size(), [&](std::size_t i) {
            double acc = 0.0;
            std::vector<std::size_t> idx(ny, 0);
            std::vector<double> y(ny);
            while (true) {
                double w = 1.0;
                for (std::size_t k = 0; k < ny; ++k) {
                    y[k] = rule.nodes[idx[k]];
                    w *= rule.weights[idx[k]];
                }
                const double e = diff(rule.nodes[i], y);
                acc += w * (squared ? e * e : std::abs(e));
                std::size_t k = 0;
                for (; k < ny; ++k) {
                    if (++idx[k] < rule.size()) break;
                    idx[k] = 0;
                }
                if (k == ny) break;
            }
            vals[i] = rule.weights[i] * acc;
        });
        integral = detail::pairwise_sum(vals);
    }
    return squared ? std::sqrt(integral) : integral;
}

inline constexpr int kZetaGridPoints = 201;

/// 3 * mean over leading points s of the trapezoid integral of |K(s,[0,y]) - y|
/// on a 201-point y-grid. `kernel(s, y)` is any (k-1)-Markov kernel CDF.
inline Estimate zeta1_monte_carlo(const SampleMatrix& leading,
                                  const std::function<double(std::span<const double>, double)>& kernel,
                                  int y_points = kZetaGridPoints) {
    detail::require(leading.n >= 2, Errc::DomainError, "need at least two leading points");
    const auto yr = detail::trapezoid_unit(y_points);
    std::vector<double> per(leading.n);
    detail::parallel_for(leading.n, [&](std::size_t i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < yr.size(); ++j) acc += yr.weights[j] * std::abs(kernel(leading.row(i), yr.nodes[j]) - yr.nodes[j]);
        per[i] = 3.0 * acc;
    });
    return detail::mean_with_error(per);
}

namespace detail {

// Sample from the leading (k-1)-marginal; uniforms when k = 2.
template <GeneratorLike G>
SampleMatrix leading_sample(const ArchimedeanCopula<G>& c, std::size_t n, std::uint64_t seed) {
    const int l = c.dim() - 1;
    if (l == 1) {
        SampleMatrix s(n, 1, seed, "uniform");
        for (std::size_t i = 0; i < n; ++i) s.values[i] = StreamRng(seed, streams::kIntegration + i).uniform();
        return s;
    }
    auto s = sample(c.marginal(l), n, seed ^ 0x5bd1e995ull);
    return s;
}

template <GeneratorLike G>
Estimate zeta1_mc(const ArchimedeanCopula<G>& c, std::size_t n, std::uint64_t seed) {
    const auto& g = c.generator();
    const int l = c.dim() - 1;
    const auto yr = trapezoid_unit(kZetaGridPoints);
    std::vector<double> phi_y(yr.size());
    for (std::size_t j = 0; j < yr.size(); ++j) phi_y[j] = g.phi(yr.nodes[j]);
    const auto lead = leading_sample(c, n, seed);
    std::vector<double> per(n);
    parallel_for(n, [&](std::size_t i) {
        const auto sx = conditioning_sum(c, lead.row(i));
        double acc = 0.0;
        if (!sx) {
            for (std::size_t j = 0; j < yr.size(); ++j) acc += yr.weights[j] * (1.0 - yr.nodes[j]);
        } else {
            const double log_norm = g.log_abs_deriv(l, *sx);
            for (std::size_t j = 0; j < yr.size(); ++j)
                acc += yr.weights[j] * std::abs(kernel_ratio(g, l, *sx, log_norm, phi_y[j]) - yr.nodes[j]);
        }
        per[i] = 3.0 * acc;
    });
    return mean_with_error(per);
}

// Survival function of the radial part R = sum phi(U_i) of an l-dimensional
// Archimedean copula: P(R > r) = sum_{k<l} r^k |psi^(k)(r)| / k!.
template <GeneratorLike G>
double radial_survival(const G& g, int l, double r) {
    if (r <= 0.0) return 1.0;
    if (!g.strict() && r >= g.phi_zero()) return 0.0;
    const double log_r = std::log(r);
    double acc = 0.0;
    for (int k = 0; k < l; ++k) acc += std::exp(k * log_r + g.log_abs_deriv(k, r) - std::lgamma(k + 1.0));
    return std::min(acc, 1.0);
}

// Quantile of R at upper-tail probability w, solved in log r.
template <GeneratorLike G>
double radial_quantile(const G& g, int l, double w) {
    if (l == 1) return g.phi(w);
    const double target = std::log(w);
    const double max_hi = g.strict() ? 700.0 : std::log(g.phi_zero());
    auto f = [&](double u) {
        const double s = radial_survival(g, l, std::exp(u));
        return std::log(std::max(s, 1e-300)) - target;
    };
    return std::exp(decreasing_root(f, std::min(0.0, max_hi - 1.0), std::min(1.0, max_hi), -700.0, max_hi));
}

// The kernel depends on s only through r = sum phi(s_i), so the s-integral
// collapses to one dimension over the law of R. Graded Gauss-Legendre on the
// probability scale of R, times graded Gauss-Legendre in y.
template <GeneratorLike G>
double zeta1_tensor(const ArchimedeanCopula<G>& c, std::size_t nodes) {
    const auto& g = c.generator();
    const int l = c.dim() - 1;
    const auto rule = unit_rule(nodes);
    std::vector<double> phi_n(rule.size());
    for (std::size_t j = 0; j < rule.size(); ++j) phi_n[j] = g.phi(rule.nodes[j]);
    auto inner = [&](double sx) {
        if (!g.strict() && sx >= g.phi_zero() * (1.0 - kZeroSetTieTolerance)) {
            double acc = 0.0;
            for (std::size_t j = 0; j < rule.size(); ++j) acc += rule.weights[j] * (1.0 - rule.nodes[j]);
            return acc;
        }
        const double log_norm = g.log_abs_deriv(l, sx);
        double acc = 0.0;
        for (std::size_t j = 0; j < rule.size(); ++j)
            acc += rule.weights[j] * std::abs(kernel_ratio(g, l, sx, log_norm, phi_n[j]) - rule.nodes[j]);
        return acc;
    };
    std::vector<double> vals(rule.size());
    parallel_for(rule.size(), [&](std::size_t i) {
        vals[i] = rule.weights[i] * inner(radial_quantile(g, l, rule.nodes[i]));
    });
    return 3.0 * pairwise_sum(vals);
}

}  // namespace detail

/// zeta_1 of a k-dimensional Archimedean copula, 3 * integral of
/// |K(s,[0,y]) - y| over mu_{C^{1:k-1}} x lambda. Monte Carlo samples s from the
/// leading marginal; the quadrature path integrates over the law of
/// sum phi(s_i). Both methods compare the full run with a half-size run and
/// raise IntegrationFailure when the two differ by more than the reported
/// tolerance (plus five standard errors for Monte Carlo).
template <GeneratorLike G>
Estimate zeta1(const ArchimedeanCopula<G>& c, const IntegrationSpec& spec) {
    detail::require(c.dim() >= 2, Errc::DimensionMismatch, "zeta1 needs dimension >= 2");
    detail::require(spec.nodes_or_samples >= 8, Errc::DomainError, "integration size too small");
    if (spec.method == IntegrationMethod::MonteCarlo) {
        const auto full = detail::zeta1_mc(c, spec.nodes_or_samples, spec.seed);
        const auto half = detail::zeta1_mc(c, spec.nodes_or_samples / 2, spec.seed);
        if (std::abs(full.value - half.value) > spec.reported_tolerance + 5.0 * half.std_error)
            detail::fail(Errc::IntegrationFailure, "Monte Carlo zeta1 unstable under halving");
        return full;
    }
    const double full = detail::zeta1_tensor(c, spec.nodes_or_samples);
    const double half = detail::zeta1_tensor(c, spec.nodes_or_samples / 2);
    const double err = std::abs(full - half);
    if (err > spec.reported_tolerance)
        detail::fail(Errc::IntegrationFailure, "zeta1 quadrature did not settle under refinement");
    return {std::clamp(full, 0.0, 1.0), err};
}

/// zeta_1^x(C) = zeta_1 of the conditional copula C^x.
template <GeneratorLike G>
Estimate zeta1_conditional(const ArchimedeanCopula<G>& c, std::span<const double> x, const IntegrationSpec& spec) {
    return zeta1(conditional_copula(c, x).archimedean(), spec);
}

/// Values of one convergence criterion along a sequence.
struct CriterionTrend {
    std::string name;
    std::vector<double> values;
    bool non_increasing = true;
    bool strictly_decreasing = true;
    [[nodiscard]] double last() const { return values.empty() ? 0.0 : values.back(); }
};

struct ConvergenceReport {
    std::vector<CriterionTrend> criteria;
    bool all_decreasing = true;

    [[nodiscard]] const CriterionTrend* find(std::string_view name) const {
        for (const auto& c : criteria)
            if (c.name == name) return &c;
        return nullptr;
    }
};

namespace detail {
inline void finish_trend(CriterionTrend& t) {
    for (std::size_t i = 1; i < t.values.size(); ++i) {
        if (t.values[i] > t.values[i - 1]) t.non_increasing = false;
        if (!(t.values[i] < t.values[i - 1])) t.strictly_decreasing = false;
    }
}

inline std::vector<std::vector<double>> probe_points(std::size_t dim) {
    static constexpr double probes[3] = {0.25, 0.5, 0.75};
    std::vector<std::vector<double>> out;
    for_each_grid_point(probes, dim, [&](std::span<const double> p) { out.emplace_back(p.begin(), p.end()); });
    return out;
}
}  // namespace detail

/// Distances of each sequence member to the limit: uniform distance on a 21^d
/// grid, generator sup on [0,50], derivative differences on [0.05,20] for
/// orders 1..d-2, kernel deviations at probes {0.25,0.5,0.75} for every l in
/// 1..d-1, and D1/D2/Dinf. Monte Carlo parts reuse spec.seed for every member
/// (common random numbers).
template <GeneratorLike G>
ConvergenceReport convergence_report(std::span<const ArchimedeanCopula<G>> sequence,
                                     const ArchimedeanCopula<G>& limit, const IntegrationSpec& spec) {
    const int d = limit.dim();
    for (const auto& c : sequence)
        detail::require(c.dim() == d, Errc::DimensionMismatch, "sequence members differ in dimension");
    CriterionTrend uni{"d_uniform", {}}, gen{"generator_sup", {}}, der{"derivative_max", {}},
        ker{"kernel_probe", {}}, d1{"D1", {}}, d2{"D2", {}}, dinf{"Dinf", {}};
    std::vector<double> zgen;
    for (int i = 0; i <= 500; ++i) zgen.push_back(50.0 * i / 500.0);
    std::vector<double> zder;
    for (int i = 0; i < 200; ++i) zder.push_back(0.05 * std::pow(400.0, i / 199.0));

    for (const auto& c : sequence) {
        uni.values.push_back(d_uniform(c, limit, 21));
        double gs = 0.0;
        for (double z : zgen) gs = std::max(gs, std::abs(c.generator().psi(z) - limit.generator().psi(z)));
        gen.values.push_back(gs);
        double ds = 0.0;
        for (int m = 1; m <= d - 2; ++m)
            for (double z : zder) ds = std::max(ds, std::abs(c.generator().deriv(m, z) - limit.generator().deriv(m, z)));
        der.values.push_back(ds);
        double ks = 0.0;
        for (int l = 1; l <= d - 1; ++l) {
            const auto xs = detail::probe_points(static_cast<std::size_t>(l));
            const auto ys = detail::probe_points(static_cast<std::size_t>(d - l));
            for (const auto& x : xs)
                for (const auto& y : ys)
                    ks = std::max(ks, std::abs(kernel_cdf(c, x, y).value - kernel_cdf(limit, x, y).value));
        }
        ker.values.push_back(ks);
        d1.values.push_back(kernel_metric(c, limit, KernelMetric::D1, spec));
        d2.values.push_back(kernel_metric(c, limit, KernelMetric::D2, spec));
        dinf.values.push_back(kernel_metric(c, limit, KernelMetric::Dinf, spec));
    }
    ConvergenceReport rep;
    for (auto* t : {&uni, &gen, &der, &ker, &d1, &d2, &dinf}) {
        detail::finish_trend(*t);
        rep.all_decreasing = rep.all_decreasing && t->strictly_decreasing;
        rep.criteria.push_back(std::move(*t));
    }
    return rep;
}

struct ZetaContinuityReport {
    double limit_value = 0.0;
    double limit_std_error = 0.0;
    std::vector<double> values;
    std::vector<double> std_errors;
    std::vector<double> deviations;
    /// Every deviation is at most its predecessor plus two combined standard errors.
    bool decreasing_within_noise = true;
};

/// |zeta_1(C_n) - zeta_1(C)| along a sequence, or of zeta_1^x when x is given.
template <GeneratorLike G>
ZetaContinuityReport zeta1_continuity_check(std::span<const ArchimedeanCopula<G>> sequence,
                                            const ArchimedeanCopula<G>& limit, const IntegrationSpec& spec,
                                            std::span<const double> x = {}) {
    auto eval = [&](const ArchimedeanCopula<G>& c) {
        return x.empty() ? zeta1(c, spec) : zeta1_conditional(c, x, spec);
    };
    ZetaContinuityReport rep;
    const auto lim = eval(limit);
    rep.limit_value = lim.value;
    rep.limit_std_error = lim.std_error;
    for (const auto& c : sequence) {
        const auto e = eval(c);
        rep.values.push_back(e.value);
        rep.std_errors.push_back(e.std_error);
        rep.deviations.push_back(std::abs(e.value - lim.value));
    }
    for (std::size_t i = 1; i < rep.deviations.size(); ++i) {
        const double se = std::hypot(rep.std_errors[i], rep.std_errors[i - 1]) + lim.std_error;
        if (rep.deviations[i] > rep.deviations[i - 1] + 2.0 * se) rep.decreasing_within_noise = false;
    }
    return rep;
}

}  // namespace archkernel
