#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "archkernel/conditional.hpp"
#include "archkernel/copula.hpp"
#include "archkernel/error.hpp"
#include "archkernel/generator.hpp"
#include "archkernel/detail/parallel.hpp"
#include "archkernel/metrics.hpp"
#include "archkernel/rng.hpp"
#include "archkernel/sampling.hpp"

namespace archkernel {

enum class FitStatus { Converged, AtBoundary };

constexpr std::string_view to_string(FitStatus s) noexcept {
    return s == FitStatus::Converged ? "converged" : "at-boundary";
}

struct FitResult {
    Family family = Family::Gumbel;
    double theta_hat = 0.0;
    double log_likelihood = 0.0;
    std::size_t n = 0;
    FitStatus status = FitStatus::Converged;
    std::optional<double> stderr_estimate;
};

namespace detail {

struct ThetaRange {
    double lo;
    double hi;
};

inline ThetaRange mle_range(Family f) {
    switch (f) {
        case Family::Gumbel: return {1.0, 60.0};
        case Family::Clayton: return {1e-4, 60.0};
        case Family::Frank: return {1e-4, 80.0};
        default: fail(Errc::InadmissibleParameter, "family has no free parameter to fit");
    }
}

inline void require_fit_sample(const SampleMatrix& s, int d) {
    require(s.n >= 10, Errc::DegenerateSample, "need at least 10 observations");
    require(static_cast<int>(s.d) == d, Errc::DimensionMismatch, "sample dimension differs from d");
    for (double v : s.values)
        require(v > 0.0 && v < 1.0, Errc::DegenerateSample, "observations must lie in (0,1)");
    for (std::size_t j = 0; j < s.d; ++j) {
        auto col = s.column(j);
        std::sort(col.begin(), col.end());
        require(std::adjacent_find(col.begin(), col.end()) == col.end(), Errc::DegenerateSample,
                "tied observations in a margin");
    }
}

}  // namespace detail

/// Sum of log densities of the rows under (family, theta, d).
inline double log_likelihood(Family family, double theta, int d, const SampleMatrix& s) {
    const ArchimedeanCopula<Generator> c(make_generator({family, theta}, d));
    std::vector<double> per(s.n);
    for (std::size_t i = 0; i < s.n; ++i) per[i] = c.log_density(s.row(i));
    return detail::pairwise_sum(per);
}

/// One-parameter maximum likelihood: a log-spaced scan brackets the maximum,
/// golden-section search narrows it to 1e-8 and a parabolic step through the
/// final triple polishes it.
inline FitResult fit_mle(Family family, int d, const SampleMatrix& s) {
    detail::require_fit_sample(s, d);
    const auto range = detail::mle_range(family);
    auto ll = [&](double t) {
        const double v = log_likelihood(family, t, d, s);
        return std::isfinite(v) ? v : -kInf;
    };

    constexpr int scan = 48;
    std::vector<double> grid(scan), vals(scan);
    const double span_log = std::log(range.hi / range.lo);
    for (int i = 0; i < scan; ++i) {
        grid[static_cast<std::size_t>(i)] = range.lo * std::exp(span_log * i / (scan - 1));
        vals[static_cast<std::size_t>(i)] = ll(grid[static_cast<std::size_t>(i)]);
    }
    const auto best = static_cast<std::size_t>(std::max_element(vals.begin(), vals.end()) - vals.begin());
    double a = grid[best == 0 ? 0 : best - 1];
    double b = grid[std::min<std::size_t>(best + 1, scan - 1)];

    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = ll(x1);
    double f2 = ll(x2);
    while (b - a > 1e-8) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = ll(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = ll(x1);
        }
    }
    double theta = f1 > f2 ? x1 : x2;
    double fbest = std::max(f1, f2);
    {
        const double h = std::max(1e-6, 1e-5 * theta);
        const double lo = std::max(range.lo, theta - h);
        const double hi = std::min(range.hi, theta + h);
        const double fl = ll(lo), fh = ll(hi);
        const double denom = (lo - theta) * (fh - fbest) - (hi - theta) * (fl - fbest);
        if (denom != 0.0 && hi > lo) {
            const double num = (lo - theta) * (lo - theta) * (fh - fbest) - (hi - theta) * (hi - theta) * (fl - fbest);
            const double cand = std::clamp(theta + 0.5 * num / denom, lo, hi);
            const double fc = ll(cand);
            if (fc > fbest) {
                theta = cand;
                fbest = fc;
            }
        }
    }

    FitResult r{family, theta, fbest, s.n, FitStatus::Converged, std::nullopt};
    const double tol_edge = 1e-6 * std::max(1.0, range.lo);
    if (theta - range.lo < tol_edge || range.hi - theta < 1e-6 * range.hi) r.status = FitStatus::AtBoundary;
    if (r.status == FitStatus::Converged) {
        const double h = 1e-4 * std::max(1.0, theta);
        const double curv = (ll(theta + h) - 2.0 * fbest + ll(theta - h)) / (h * h);
        if (curv < 0.0 && std::isfinite(curv)) r.stderr_estimate = 1.0 / std::sqrt(-curv);
    }
    return r;
}

/// Kendall's tau of two columns (tau-a; ties were rejected upstream).
inline double kendall_tau(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size();
    long long conc = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double p = (a[i] - a[j]) * (b[i] - b[j]);
            conc += p > 0.0 ? 1 : (p < 0.0 ? -1 : 0);
        }
    return 2.0 * static_cast<double>(conc) / (static_cast<double>(n) * static_cast<double>(n - 1));
}

/// theta solving tau(theta) = tau: Gumbel tau = 1 - 1/theta, Clayton tau = theta/(theta+2).
inline double theta_from_tau(Family family, double tau) {
    switch (family) {
        case Family::Gumbel:
            detail::require(tau >= 0.0 && tau < 1.0, Errc::OutOfRangeTau, "gumbel needs tau in [0,1)");
            return 1.0 / (1.0 - tau);
        case Family::Clayton:
            detail::require(tau > 0.0 && tau < 1.0, Errc::OutOfRangeTau, "clayton needs tau in (0,1)");
            return 2.0 * tau / (1.0 - tau);
        default:
            detail::fail(Errc::InadmissibleParameter, "tau inversion supports gumbel and clayton only");
    }
}

/// Moment-type fit from the average pairwise Kendall's tau.
inline FitResult fit_tau_inversion(Family family, int d, const SampleMatrix& s) {
    detail::require_fit_sample(s, d);
    double tau = 0.0;
    int pairs = 0;
    for (std::size_t i = 0; i < s.d; ++i)
        for (std::size_t j = i + 1; j < s.d; ++j) {
            const auto ci = s.column(i), cj = s.column(j);
            tau += kendall_tau(ci, cj);
            ++pairs;
        }
    tau /= pairs;
    const double theta = theta_from_tau(family, tau);
    FitResult r{family, theta, log_likelihood(family, theta, d, s), s.n, FitStatus::Converged, std::nullopt};
    if (family == Family::Gumbel && theta == 1.0) r.status = FitStatus::AtBoundary;
    return r;
}

struct ZetaRow {
    std::vector<double> x;
    double zeta = 0.0;
    double std_error = 0.0;
};

struct ConditionalZetaTable {
    FitResult fit;
    std::vector<ZetaRow> rows;
};

/// Fit theta by maximum likelihood, then evaluate zeta_1^x of the fitted
/// copula at every conditioning point.
inline ConditionalZetaTable estimate_conditional_zeta(const SampleMatrix& sample, Family family,
                                                      std::span<const std::vector<double>> x_grid,
                                                      const IntegrationSpec& spec) {
    const int d = static_cast<int>(sample.d);
    ConditionalZetaTable out{fit_mle(family, d, sample), {}};
    const ArchimedeanCopula<Generator> fitted(make_generator({family, out.fit.theta_hat}, d));
    for (const auto& x : x_grid) {
        const auto e = zeta1_conditional(fitted, x, spec);
        out.rows.push_back({x, e.value, e.std_error});
    }
    return out;
}

/// Replicated simulation of the plug-in estimator of zeta_1^x: for every
/// sample size draw `replicates` samples from the true copula, fit theta by
/// maximum likelihood and evaluate zeta_1^x of the fitted copula.
struct ZetaStudyConfig {
    GeneratorFamily family = GeneratorFamily::gumbel(5.0);
    int dim = 3;
    std::vector<std::vector<double>> x_grid;
    std::vector<std::size_t> n_list{50, 100, 500, 1000};
    std::size_t replicates = 30;
    std::uint64_t seed = 1;
    IntegrationSpec spec = IntegrationSpec::tensor(64);
};

struct ZetaStudyCell {
    std::vector<double> x;
    std::size_t n = 0;
    double zeta_true = 0.0;
    double zeta_hat_mean = 0.0;
    double zeta_hat_sd = 0.0;
};

struct ZetaStudyReplicate {
    std::size_t n = 0;
    std::size_t replicate = 0;
    std::uint64_t seed = 0;
    FitResult fit;
    std::vector<double> zeta_hat;
};

struct ZetaStudy {
    std::vector<double> zeta_true;
    std::vector<ZetaStudyCell> cells;
    std::vector<ZetaStudyReplicate> replicates;
};

/// Replicate r at the k-th sample size uses seed derive_seed(seed, k * R + r),
/// so results do not depend on the worker count.
inline ZetaStudy zeta_estimation_study(const ZetaStudyConfig& cfg) {
    detail::require(cfg.replicates >= 2, Errc::InvalidConfig, "need at least two replicates");
    detail::require(!cfg.x_grid.empty() && !cfg.n_list.empty(), Errc::InvalidConfig, "empty x grid or n list");
    const ArchimedeanCopula<Generator> truth(make_generator(cfg.family, cfg.dim));
    ZetaStudy out;
    for (const auto& x : cfg.x_grid) out.zeta_true.push_back(zeta1_conditional(truth, x, cfg.spec).value);

    const std::size_t runs = cfg.n_list.size() * cfg.replicates;
    out.replicates.resize(runs);
    detail::parallel_for(runs, [&](std::size_t k) {
        auto& rep = out.replicates[k];
        rep.n = cfg.n_list[k / cfg.replicates];
        rep.replicate = k % cfg.replicates;
        rep.seed = derive_seed(cfg.seed, k);
        const auto table = estimate_conditional_zeta(sample(truth, rep.n, rep.seed), cfg.family.id, cfg.x_grid, cfg.spec);
        rep.fit = table.fit;
        for (const auto& row : table.rows) rep.zeta_hat.push_back(row.zeta);
    });

    for (std::size_t ni = 0; ni < cfg.n_list.size(); ++ni) {
        for (std::size_t xi = 0; xi < cfg.x_grid.size(); ++xi) {
            std::vector<double> v;
            for (std::size_t r = 0; r < cfg.replicates; ++r)
                v.push_back(out.replicates[ni * cfg.replicates + r].zeta_hat[xi]);
            const double m = detail::pairwise_sum(v) / static_cast<double>(v.size());
            double ss = 0.0;
            for (double e : v) ss += (e - m) * (e - m);
            out.cells.push_back({cfg.x_grid[xi], cfg.n_list[ni], out.zeta_true[xi], m,
                                 std::sqrt(ss / static_cast<double>(v.size() - 1))});
        }
    }
    return out;
}

}  // namespace archkernel
