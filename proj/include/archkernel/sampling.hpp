#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "archkernel/conditional.hpp"
#include "archkernel/copula.hpp"
#include "archkernel/detail/parallel.hpp"
#include "archkernel/error.hpp"
#include "archkernel/kernel.hpp"
#include "archkernel/rng.hpp"

namespace archkernel {

/// Row-major n x d matrix of points in the unit cube plus its origin.
struct SampleMatrix {
    std::size_t n = 0;
    std::size_t d = 0;
    std::vector<double> values;
    std::uint64_t seed = 0;
    std::string provenance;

    SampleMatrix() = default;
    SampleMatrix(std::size_t rows, std::size_t cols, std::uint64_t seed_, std::string prov)
        : n(rows), d(cols), values(rows * cols, 0.0), seed(seed_), provenance(std::move(prov)) {}

    [[nodiscard]] double at(std::size_t i, std::size_t j) const { return values[i * d + j]; }
    double& at(std::size_t i, std::size_t j) { return values[i * d + j]; }
    [[nodiscard]] std::span<const double> row(std::size_t i) const { return {values.data() + i * d, d}; }
    std::span<double> row(std::size_t i) { return {values.data() + i * d, d}; }

    [[nodiscard]] std::vector<double> column(std::size_t j) const {
        std::vector<double> c(n);
        for (std::size_t i = 0; i < n; ++i) c[i] = at(i, j);
        return c;
    }
};

/// CSV with a leading "# copula=... seed=..." comment and a u1..ud header.
inline void write_csv(std::ostream& os, const SampleMatrix& s) {
    os << "# copula=" << s.provenance << " seed=" << s.seed << " n=" << s.n << '\n';
    for (std::size_t j = 0; j < s.d; ++j) os << (j ? "," : "") << 'u' << j + 1;
    os << '\n';
    char buf[32];
    for (std::size_t i = 0; i < s.n; ++i) {
        for (std::size_t j = 0; j < s.d; ++j) {
            std::snprintf(buf, sizeof buf, "%.12g", s.at(i, j));
            if (j) os << ',';
            os << buf;
        }
        os << '\n';
    }
}

inline SampleMatrix read_csv(std::istream& is) {
    SampleMatrix s;
    std::string line;
    bool header = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto cp = line.find("copula=");
            const auto sp = line.find(" seed=");
            if (cp != std::string::npos && sp != std::string::npos && sp > cp) {
                s.provenance = line.substr(cp + 7, sp - cp - 7);
                s.seed = std::stoull(line.substr(sp + 6));
            }
            continue;
        }
        if (!header) {
            header = true;
            s.d = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',') + 1);
            continue;
        }
        std::stringstream ss(line);
        std::string cell;
        std::size_t cols = 0;
        while (std::getline(ss, cell, ',')) {
            try {
                s.values.push_back(std::stod(cell));
            } catch (const std::exception&) {
                detail::fail(Errc::DomainError, "non-numeric sample entry '" + cell + "'");
            }
            ++cols;
        }
        detail::require(cols == s.d, Errc::DimensionMismatch, "ragged sample row");
        ++s.n;
    }
    detail::require(header && s.d >= 1, Errc::DomainError, "sample file has no header");
    return s;
}

namespace detail {
// Keeps generated coordinates strictly inside (0,1) so the next conditional
// quantile has an admissible conditioning point.
inline double interior(double u) {
    constexpr double lo = 1e-300;
    const double hi = std::nextafter(1.0, 0.0);
    return std::clamp(u, lo, hi);
}
}  // namespace detail

/// Conditional-distribution sampler: u_1 uniform, then u_j = g^{-1}_{(u_1..u_{j-1})}(v_j)
/// under the j-dimensional marginal. Row i uses Philox stream i of `seed`, so
/// output does not depend on the thread count.
template <GeneratorLike G>
SampleMatrix sample(const ArchimedeanCopula<G>& c, std::size_t n, std::uint64_t seed) {
    detail::require(c.strict(), Errc::NotStrict, "sampler needs a strict generator");
    detail::require(n >= 1, Errc::DomainError, "sample size must be positive");
    const auto d = static_cast<std::size_t>(c.dim());
    SampleMatrix out(n, d, seed, c.describe());
    std::vector<ArchimedeanCopula<G>> margins;
    for (int j = 2; j <= c.dim(); ++j) margins.push_back(c.marginal(j));
    detail::parallel_for(n, [&](std::size_t i) {
        StreamRng rng(seed, streams::kSampleRows + i);
        auto row = out.row(i);
        row[0] = detail::interior(rng.uniform());
        for (std::size_t j = 1; j < d; ++j) {
            const double v = rng.uniform();
            try {
                row[j] = detail::interior(kernel_univariate_quantile(margins[j - 1], row.first(j), v).value);
            } catch (const Error& e) {
                detail::fail(Errc::NumericalFailure, std::string("quantile inversion failed: ") + e.what());
            }
        }
    });
    return out;
}

template <GeneratorLike G>
SampleMatrix sample_conditional(const ConditionalCopula<G>& cc, std::size_t n, std::uint64_t seed) {
    return sample(cc.archimedean(), n, seed);
}

/// Rows (x, x, z) with x, z independent uniforms: a draw from B = z min(x, y).
inline SampleMatrix sample_fixture_b(std::size_t n, std::uint64_t seed) {
    detail::require(n >= 1, Errc::DomainError, "sample size must be positive");
    SampleMatrix out(n, 3, seed, FixtureCopulaB::describe());
    for (std::size_t i = 0; i < n; ++i) {
        StreamRng rng(seed, streams::kSampleRows + i);
        const double x = rng.uniform();
        out.at(i, 0) = x;
        out.at(i, 1) = x;
        out.at(i, 2) = rng.uniform();
    }
    return out;
}

/// Empirical copula-style CDF of the sample at point u (fraction of rows <= u).
inline double empirical_cdf(const SampleMatrix& s, std::span<const double> u) {
    detail::require(u.size() == s.d, Errc::DimensionMismatch, "probe has wrong dimension");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < s.n; ++i) {
        bool in = true;
        for (std::size_t j = 0; j < s.d && in; ++j) in = s.at(i, j) <= u[j];
        hits += in;
    }
    return static_cast<double>(hits) / static_cast<double>(s.n);
}

}  // namespace archkernel
