#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdio>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "archkernel/detail/roots.hpp"
#include "archkernel/error.hpp"

namespace archkernel {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Largest dimension any shipped family is constructed for. The derivative
/// recurrences are exact, but the kernel and density formulas use orders up
/// to d, and we only validate those up to this bound.
inline constexpr int kMaxDimension = 8;

enum class Family { Independence, Gumbel, Clayton, Frank, ClaytonBoundary };

constexpr std::string_view family_name(Family f) noexcept {
    switch (f) {
        case Family::Independence: return "independence";
        case Family::Gumbel: return "gumbel";
        case Family::Clayton: return "clayton";
        case Family::Frank: return "frank";
        case Family::ClaytonBoundary: return "clayton-boundary";
    }
    return "unknown";
}

inline Family parse_family(std::string_view name) {
    for (Family f : {Family::Independence, Family::Gumbel, Family::Clayton, Family::Frank,
                     Family::ClaytonBoundary}) {
        if (family_name(f) == name) return f;
    }
    if (name == "clayton_boundary" || name == "claytonboundary") return Family::ClaytonBoundary;
    detail::fail(Errc::InvalidConfig, "unknown generator family '" + std::string(name) + "'");
}

/// Family id plus its parameter. Independence carries no parameter (NaN);
/// the boundary Clayton member has theta = -1/(d-1), tied to its dimension.
struct GeneratorFamily {
    Family id = Family::Independence;
    double theta = std::numeric_limits<double>::quiet_NaN();

    static GeneratorFamily independence() { return {Family::Independence, std::numeric_limits<double>::quiet_NaN()}; }
    static GeneratorFamily gumbel(double theta) { return {Family::Gumbel, theta}; }
    static GeneratorFamily clayton(double theta) { return {Family::Clayton, theta}; }
    static GeneratorFamily frank(double theta) { return {Family::Frank, theta}; }
    static GeneratorFamily clayton_boundary(int d) { return {Family::ClaytonBoundary, -1.0 / (d - 1)}; }

    /// Maximum dimension for which the family is d-monotone at theta.
    [[nodiscard]] int admissible_dim() const {
        if (id == Family::ClaytonBoundary) {
            if (!(theta < 0.0)) return 0;
            return static_cast<int>(std::lround(1.0 - 1.0 / theta));
        }
        return kMaxDimension;
    }

    [[nodiscard]] bool has_parameter() const { return id != Family::Independence; }
};

/// Minimal interface the monotonicity validator needs: signed derivatives.
template <class G>
concept DerivativeProvider = requires(const G& g, int m, double z) {
    { g.dim() } -> std::convertible_to<int>;
    { g.deriv(m, z) } -> std::convertible_to<double>;
};

/// Interface of a normalized Archimedean generator. Derivatives are exposed in
/// log-magnitude form; the sign of psi^(m) is always (-1)^m.
///
/// log_abs_deriv(m, z) accepts m in [0, dim()]: m <= dim()-2 are classical
/// derivatives, m = dim()-1 is the left derivative D^- psi^(dim-2) and
/// m = dim() is the almost-everywhere derivative of that left derivative.
template <class G>
concept GeneratorLike = DerivativeProvider<G> && requires(const G& g, int m, double z) {
    { g.strict() } -> std::convertible_to<bool>;
    { g.phi_zero() } -> std::convertible_to<double>;
    { g.psi(z) } -> std::convertible_to<double>;
    { g.phi(z) } -> std::convertible_to<double>;
    { g.log_abs_deriv(m, z) } -> std::convertible_to<double>;
    { g.log_abs_deriv_at_zero(m) } -> std::convertible_to<double>;
    { g.log_deriv_inverse(m, z) } -> std::convertible_to<double>;
    { g.top_derivative_continuous() } -> std::convertible_to<bool>;
    { g.describe() } -> std::convertible_to<std::string>;
};

constexpr double deriv_sign(int m) noexcept { return (m % 2 == 0) ? 1.0 : -1.0; }

namespace detail {

/// log(sum_k c_k w^k) for non-negative coefficients, scaled to avoid overflow.
inline double log_poly_abs(const std::vector<double>& coeff, double w) {
    int lo = -1;
    int hi = -1;
    for (int k = 0; k < static_cast<int>(coeff.size()); ++k) {
        if (coeff[static_cast<std::size_t>(k)] != 0.0) {
            if (lo < 0) lo = k;
            hi = k;
        }
    }
    if (lo < 0) return -kInf;
    if (w == 0.0) return lo == 0 ? std::log(coeff[0]) : -kInf;
    const double lw = std::log(w);
    if (w <= 1.0) {
        double sum = 0.0;
        double p = 1.0;
        for (int k = lo; k <= hi; ++k) {
            sum += coeff[static_cast<std::size_t>(k)] * p;
            p *= w;
        }
        return lo * lw + std::log(sum);
    }
    const double inv = 1.0 / w;
    double sum = 0.0;
    double p = 1.0;
    for (int k = hi; k >= lo; --k) {
        sum += coeff[static_cast<std::size_t>(k)] * p;
        p *= inv;
    }
    return hi * lw + std::log(sum);
}

/// log(1 - e^{-x}) for x > 0 without cancellation at either end.
inline double log1mexp(double x) {
    return x > std::numbers::ln2 ? std::log1p(-std::exp(-x)) : std::log(-std::expm1(-x));
}

inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

}  // namespace detail

/// Normalized generator psi(z) = psi_raw(scale * z) with psi(1) = 1/2.
///
/// Immutable after construction; concurrent evaluation needs no locking.
class Generator {
public:
    Generator(GeneratorFamily family, int d) : family_(family), d_(d) {
        using detail::require;
        require(d >= 2, Errc::InadmissibleParameter, "dimension must be at least 2");
        const double theta = family.theta;
        switch (family.id) {
            case Family::Independence:
                break;
            case Family::Gumbel:
                require(std::isfinite(theta) && theta >= 1.0, Errc::InadmissibleParameter,
                        "gumbel requires theta >= 1");
                break;
            case Family::Clayton:
                require(std::isfinite(theta) && theta > 0.0, Errc::InadmissibleParameter,
                        "clayton requires theta > 0");
                break;
            case Family::Frank:
                require(std::isfinite(theta) && theta > 0.0, Errc::InadmissibleParameter,
                        "frank requires theta > 0");
                break;
            case Family::ClaytonBoundary:
                require(std::isfinite(theta) && std::abs(theta + 1.0 / (d - 1)) <= 1e-12,
                        Errc::InadmissibleParameter,
                        "boundary clayton requires theta = -1/(d-1)");
                break;
        }
        require(d <= family_.admissible_dim(), Errc::InadmissibleParameter,
                "dimension " + std::to_string(d) + " exceeds admissible dimension " +
                    std::to_string(family_.admissible_dim()));
        init();
    }

    [[nodiscard]] const GeneratorFamily& family() const noexcept { return family_; }
    [[nodiscard]] int dim() const noexcept { return d_; }
    [[nodiscard]] bool strict() const noexcept { return family_.id != Family::ClaytonBoundary; }
    [[nodiscard]] double scale() const noexcept { return scale_; }
    [[nodiscard]] double phi_zero() const noexcept { return phi_zero_; }
    [[nodiscard]] bool top_derivative_continuous() const noexcept { return strict(); }

    [[nodiscard]] std::string describe() const {
        std::string s(family_name(family_.id));
        if (family_.has_parameter()) s += "(theta=" + detail::fmt_double(family_.theta) + ")";
        return s + "[d=" + std::to_string(d_) + "]";
    }

    [[nodiscard]] double psi(double z) const {
        if (z == kInf) return 0.0;
        switch (family_.id) {
            case Family::Independence: return std::exp(-z * std::numbers::ln2);
            case Family::Gumbel: return std::exp(-gumbel_w(z));
            case Family::Clayton: return std::exp(-alpha_ * std::log1p(scale_ * z));
            case Family::Frank: return -frank_log1mq(scale_ * z) / family_.theta;
            case Family::ClaytonBoundary: {
                const double r = 1.0 - scale_ * z / k_;
                return r > 0.0 ? std::pow(r, k_) : 0.0;
            }
        }
        return 0.0;
    }

    [[nodiscard]] double phi(double t) const {
        if (t >= 1.0) return 0.0;
        if (t <= 0.0) return phi_zero_;
        switch (family_.id) {
            case Family::Independence: return -std::log(t) / std::numbers::ln2;
            case Family::Gumbel: return std::pow(-std::log(t) / std::numbers::ln2, family_.theta);
            case Family::Clayton: return std::expm1(-family_.theta * std::log(t)) / scale_;
            case Family::Frank: {
                const double th = family_.theta;
                return (log_c_ - detail::log1mexp(th * t)) / scale_;
            }
            case Family::ClaytonBoundary: return k_ * (1.0 - std::pow(t, 1.0 / k_)) / scale_;
        }
        return 0.0;
    }

    /// log |psi^(m)(z)| for z in [0, inf]; m in [0, dim()].
    [[nodiscard]] double log_abs_deriv(int m, double z) const {
        if (z == kInf) return -kInf;
        if (z == 0.0) return log_abs_deriv_at_zero(m);
        switch (family_.id) {
            case Family::Independence:
                return m * log_ln2_ - z * std::numbers::ln2;
            case Family::Gumbel: {
                const double w = gumbel_w(z);
                if (m == 0) return -w;
                return detail::log_poly_abs(gumbel_poly_[static_cast<std::size_t>(m)], w) -
                       m * std::log(z) - w;
            }
            case Family::Clayton:
                return m * log_scale_ + log_rise_[static_cast<std::size_t>(m)] -
                       (alpha_ + m) * std::log1p(scale_ * z);
            case Family::Frank: {
                const double t = scale_ * z;
                const double log1mq = frank_log1mq(t);
                if (m == 0) return std::log(-log1mq) - std::log(family_.theta);
                const double log_q = log_c_ - t;
                const double q = std::exp(log_q);
                return m * log_scale_ - std::log(family_.theta) + log_q +
                       std::log(eulerian_eval(m - 1, q)) - m * log1mq;
            }
            case Family::ClaytonBoundary: {
                if (m > k_) return -kInf;
                if (m == k_) return z <= phi_zero_ ? m * log_s_over_k_ + log_fall_[static_cast<std::size_t>(m)] : -kInf;
                if (z >= phi_zero_) return -kInf;
                const double r = 1.0 - scale_ * z / k_;
                return m * log_s_over_k_ + log_fall_[static_cast<std::size_t>(m)] + (k_ - m) * std::log(r);
            }
        }
        return -kInf;
    }

    /// Limit of log |psi^(m)(z)| as z -> 0+ (may be +inf).
    [[nodiscard]] double log_abs_deriv_at_zero(int m) const {
        switch (family_.id) {
            case Family::Independence: return m * log_ln2_;
            case Family::Gumbel:
                if (m == 0) return 0.0;
                return family_.theta == 1.0 ? m * log_ln2_ : kInf;
            case Family::Clayton: return m * log_scale_ + log_rise_[static_cast<std::size_t>(m)];
            case Family::Frank: {
                if (m == 0) return 0.0;
                const double q = c_;
                return m * log_scale_ - std::log(family_.theta) + log_c_ +
                       std::log(eulerian_eval(m - 1, q)) + m * family_.theta;
            }
            case Family::ClaytonBoundary:
                if (m > k_) return -kInf;
                return m * log_s_over_k_ + log_fall_[static_cast<std::size_t>(m)];
        }
        return -kInf;
    }

    /// Signed derivative psi^(m)(z).
    [[nodiscard]] double deriv(int m, double z) const {
        if (m == 0) return psi(z);
        return deriv_sign(m) * std::exp(log_abs_deriv(m, z));
    }

    /// z >= 0 with log |psi^(m)(z)| = log_abs_v. Closed form where available,
    /// bracketed root finding otherwise. For the non-strict member the smallest
    /// such z is returned (phi_zero for a zero target).
    [[nodiscard]] double log_deriv_inverse(int m, double log_abs_v) const {
        if (m == 0) return phi(std::exp(log_abs_v));
        const double at_zero = log_abs_deriv_at_zero(m);
        detail::require(!(log_abs_v > at_zero * (1.0 + 1e-15) + 1e-15), Errc::RangeError,
                        "value outside the range of the derivative");
        if (log_abs_v >= at_zero) return 0.0;
        switch (family_.id) {
            case Family::Independence:
                if (log_abs_v == -kInf) return kInf;
                return (m * log_ln2_ - log_abs_v) / std::numbers::ln2;
            case Family::Clayton: {
                if (log_abs_v == -kInf) return kInf;
                const double l = (at_zero - log_abs_v) / (alpha_ + m);
                return std::expm1(l) / scale_;
            }
            case Family::ClaytonBoundary: {
                detail::require(m < k_, Errc::NonInvertible,
                                "top left derivative of the boundary generator is a step");
                if (log_abs_v == -kInf) return phi_zero_;
                const double log_r = (log_abs_v - at_zero) / (k_ - m);
                return k_ * (-std::expm1(log_r)) / scale_;
            }
            case Family::Gumbel:
            case Family::Frank: {
                if (log_abs_v == -kInf) return kInf;
                auto f = [&](double u) { return log_abs_deriv(m, std::exp(u)) - log_abs_v; };
                return std::exp(detail::decreasing_root(f, -1.0, 1.0, -700.0, 700.0));
            }
        }
        return 0.0;
    }

private:
    void init() {
        const double theta = family_.theta;
        log_ln2_ = std::log(std::numbers::ln2);
        const int orders = d_ + 1;
        switch (family_.id) {
            case Family::Independence:
                scale_ = std::numbers::ln2;
                phi_zero_ = kInf;
                break;
            case Family::Gumbel: {
                scale_ = std::pow(std::numbers::ln2, theta);
                phi_zero_ = kInf;
                // psi^(m)(z) = z^-m P_m(w) e^-w with w = ln2 z^(1/theta) and
                // P_{m+1}(w) = -m P_m + a w (P_m' - P_m); all coefficients of
                // P_m share the sign (-1)^m, so magnitudes are stored.
                const double a = 1.0 / theta;
                std::vector<std::vector<double>> p(static_cast<std::size_t>(orders + 1));
                p[0] = {1.0};
                for (int m = 0; m < orders; ++m) {
                    const auto& cur = p[static_cast<std::size_t>(m)];
                    std::vector<double> next(cur.size() + 1, 0.0);
                    for (std::size_t k = 0; k < cur.size(); ++k) {
                        next[k] += (-static_cast<double>(m) + a * static_cast<double>(k)) * cur[k];
                        next[k + 1] += -a * cur[k];
                    }
                    p[static_cast<std::size_t>(m + 1)] = std::move(next);
                }
                gumbel_poly_.resize(p.size());
                for (std::size_t m = 0; m < p.size(); ++m) {
                    gumbel_poly_[m].resize(p[m].size());
                    for (std::size_t k = 0; k < p[m].size(); ++k) gumbel_poly_[m][k] = std::abs(p[m][k]);
                }
                break;
            }
            case Family::Clayton: {
                alpha_ = 1.0 / theta;
                scale_ = std::expm1(theta * std::numbers::ln2);
                detail::require(std::isfinite(scale_), Errc::InadmissibleParameter,
                                "clayton theta too large to normalize");
                phi_zero_ = kInf;
                log_rise_.assign(static_cast<std::size_t>(orders + 1), 0.0);
                for (int m = 1; m <= orders; ++m)
                    log_rise_[static_cast<std::size_t>(m)] =
                        log_rise_[static_cast<std::size_t>(m - 1)] + std::log(alpha_ + m - 1);
                break;
            }
            case Family::Frank: {
                c_ = -std::expm1(-theta);
                log_c_ = detail::log1mexp(theta);
                scale_ = log_c_ - detail::log1mexp(0.5 * theta);
                phi_zero_ = kInf;
                // Eulerian numbers A(n, k): Li_{-n}(q) = q A_n(q) / (1-q)^(n+1).
                eulerian_.assign(static_cast<std::size_t>(orders + 1), {});
                eulerian_[0] = {1.0};
                for (int n = 1; n <= orders; ++n) {
                    std::vector<double> row(static_cast<std::size_t>(n), 0.0);
                    const auto& prev = eulerian_[static_cast<std::size_t>(n - 1)];
                    for (int k = 0; k < n; ++k) {
                        double v = 0.0;
                        if (n == 1) {
                            v = 1.0;
                        } else {
                            if (k < n - 1) v += (k + 1.0) * prev[static_cast<std::size_t>(k)];
                            if (k >= 1) v += (n - static_cast<double>(k)) * prev[static_cast<std::size_t>(k - 1)];
                        }
                        row[static_cast<std::size_t>(k)] = v;
                    }
                    eulerian_[static_cast<std::size_t>(n)] = std::move(row);
                }
                break;
            }
            case Family::ClaytonBoundary: {
                k_ = d_ - 1;
                scale_ = k_ * (-std::expm1(-std::numbers::ln2 / k_));
                phi_zero_ = k_ / scale_;
                log_s_over_k_ = std::log(scale_ / k_);
                log_fall_.assign(static_cast<std::size_t>(k_ + 1), 0.0);
                for (int m = 1; m <= k_; ++m)
                    log_fall_[static_cast<std::size_t>(m)] =
                        log_fall_[static_cast<std::size_t>(m - 1)] + std::log(static_cast<double>(k_ - m + 1));
                break;
            }
        }
        log_scale_ = std::log(scale_);
    }

    double gumbel_w(double z) const { return std::numbers::ln2 * std::pow(z, 1.0 / family_.theta); }

    // log(1 - q) with q = c e^{-t}, stable for tiny t and large theta.
    double frank_log1mq(double t) const {
        const double q = std::exp(log_c_ - t);
        if (q < 0.5) return std::log1p(-q);
        return std::log(-std::expm1(-t) + std::exp(-family_.theta - t));
    }

    double eulerian_eval(int n, double q) const {
        const auto& coeff = eulerian_[static_cast<std::size_t>(n)];
        double acc = 0.0;
        for (auto it = coeff.rbegin(); it != coeff.rend(); ++it) acc = acc * q + *it;
        return acc;
    }

    GeneratorFamily family_;
    int d_;
    double scale_ = 1.0;
    double log_scale_ = 0.0;
    double phi_zero_ = kInf;
    double log_ln2_ = 0.0;
    // Clayton
    double alpha_ = 0.0;
    std::vector<double> log_rise_;
    // Gumbel
    std::vector<std::vector<double>> gumbel_poly_;
    // Frank
    double c_ = 0.0;
    double log_c_ = 0.0;
    std::vector<std::vector<double>> eulerian_;
    // Boundary Clayton
    int k_ = 0;
    double log_s_over_k_ = 0.0;
    std::vector<double> log_fall_;
};

static_assert(GeneratorLike<Generator>);

inline Generator make_generator(const GeneratorFamily& family, int d) { return Generator(family, d); }

/// psi(z) for z in [0, inf].
template <GeneratorLike G>
double psi(const G& g, double z) {
    detail::require(!std::isnan(z) && z >= 0.0, Errc::DomainError, "psi needs z >= 0");
    return g.psi(z);
}

/// Pseudo-inverse phi(t) for t in [0, 1]; phi(0) is +inf iff g is strict.
template <GeneratorLike G>
double phi(const G& g, double t) {
    detail::require(!std::isnan(t) && t >= 0.0 && t <= 1.0, Errc::DomainError, "phi needs t in [0,1]");
    return g.phi(t);
}

/// psi^(m)(z) for m in [0, d-1] and z > 0; m = d-1 is the left derivative of psi^(d-2).
template <GeneratorLike G>
double psi_deriv(const G& g, int m, double z) {
    detail::require(m >= 0 && m <= g.dim() - 1, Errc::DomainError, "derivative order out of range");
    detail::require(!std::isnan(z) && z > 0.0, Errc::DomainError, "psi_deriv needs z > 0");
    return g.deriv(m, z);
}

/// Inverse of psi^(m) on (0, inf), m in [1, d-1].
template <GeneratorLike G>
double psi_deriv_inverse(const G& g, int m, double v) {
    detail::require(m >= 1 && m <= g.dim() - 1, Errc::DomainError, "derivative order out of range");
    detail::require(!std::isnan(v), Errc::DomainError, "value is NaN");
    if (m == g.dim() - 1 && !g.top_derivative_continuous())
        detail::fail(Errc::NonInvertible, "left derivative of psi^(d-2) is discontinuous");
    detail::require(v == 0.0 || (v > 0.0) == (deriv_sign(m) > 0.0), Errc::RangeError,
                    "value has the wrong sign for this derivative order");
    return g.log_deriv_inverse(m, std::log(std::abs(v)));
}

struct MonotonicityViolation {
    std::string criterion;  // "sign", "non-increasing" or "convexity"
    int order = 0;
    double z = 0.0;
    double value = 0.0;
};

struct MonotonicityReport {
    bool pass = true;
    std::optional<MonotonicityViolation> first_violation;
};

/// Checks d-monotonicity on a grid: (-1)^m psi^(m) >= 0 for m <= d-2, and
/// (-1)^(d-2) psi^(d-2) non-increasing and convex (divided differences).
template <DerivativeProvider G>
MonotonicityReport validate_d_monotone(const G& g, std::span<const double> grid) {
    detail::require(!grid.empty(), Errc::DomainError, "grid must be nonempty");
    std::vector<double> zs(grid.begin(), grid.end());
    std::sort(zs.begin(), zs.end());
    zs.erase(std::unique(zs.begin(), zs.end()), zs.end());
    MonotonicityReport report;
    auto violate = [&](std::string what, int m, double z, double v) {
        report.pass = false;
        report.first_violation = MonotonicityViolation{std::move(what), m, z, v};
        return report;
    };
    const int d = g.dim();
    constexpr double tol = 1e-12;
    for (int m = 0; m <= d - 2; ++m) {
        for (double z : zs) {
            const double v = deriv_sign(m) * g.deriv(m, z);
            if (v < -tol) return violate("sign", m, z, v);
        }
    }
    const int top = d - 2;
    std::vector<double> f(zs.size());
    for (std::size_t i = 0; i < zs.size(); ++i) f[i] = deriv_sign(top) * g.deriv(top, zs[i]);
    for (std::size_t i = 0; i + 1 < zs.size(); ++i) {
        const double inc = f[i + 1] - f[i];
        if (inc > tol * std::max(1.0, std::abs(f[i]))) return violate("non-increasing", top, zs[i + 1], inc);
    }
    for (std::size_t i = 1; i + 1 < zs.size(); ++i) {
        const double s1 = (f[i] - f[i - 1]) / (zs[i] - zs[i - 1]);
        const double s2 = (f[i + 1] - f[i]) / (zs[i + 1] - zs[i]);
        const double scale = std::max({1.0, std::abs(s1), std::abs(s2)});
        if (s2 - s1 < -1e-9 * scale) return violate("convexity", top, zs[i], s2 - s1);
    }
    return report;
}

}  // namespace archkernel
