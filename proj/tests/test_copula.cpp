#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "archkernel/copula.hpp"
#include "archkernel/rng.hpp"
#include "oracles.hpp"

using namespace archkernel;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ArchimedeanCopula<> make(GeneratorFamily f, int d) { return ArchimedeanCopula<>(make_generator(f, d)); }

std::vector<GeneratorFamily> strict_families() {
    return {GeneratorFamily::independence(), GeneratorFamily::gumbel(1.5), GeneratorFamily::gumbel(3.0),
            GeneratorFamily::clayton(0.5),   GeneratorFamily::clayton(2.0), GeneratorFamily::frank(4.0)};
}

auto code_is(Errc c) {
    return Catch::Matchers::Predicate<Error>([c](const Error& e) { return e.code() == c; });
}

}  // namespace

TEST_CASE("cdf examples", "[copula]") {
    const auto ind = make(GeneratorFamily::independence(), 3);
    CHECK_THAT(cdf(ind, std::vector{0.5, 0.5, 0.5}), WithinAbs(0.125, 1e-15));
    const auto gum = make(GeneratorFamily::gumbel(3.0), 3);
    CHECK_THAT(cdf(gum, std::vector{0.5, 0.5, 0.5}), WithinRel(std::pow(2.0, -std::cbrt(3.0)), 1e-14));
    CHECK_THAT(cdf(gum, std::vector{0.5, 0.5, 0.5}), WithinAbs(0.367993, 1e-6));
    for (const auto& f : strict_families()) {
        const auto c = make(f, 3);
        CHECK(cdf(c, std::vector{1.0, 1.0, 1.0}) == 1.0);
        CHECK(cdf(c, std::vector{0.3, 0.0, 0.9}) == 0.0);
    }
    CHECK_THROWS_MATCHES(cdf(gum, std::vector{0.5, 1.2, 0.5}), Error, code_is(Errc::DomainError));
    CHECK_THROWS_MATCHES(cdf(gum, std::vector{0.5, 0.5}), Error, code_is(Errc::DimensionMismatch));
}

TEST_CASE("uniform margins, marginal consistency and Lipschitz bound", "[copula]") {
    StreamRng rng(3, 0);
    std::vector<GeneratorFamily> fams = strict_families();
    fams.push_back(GeneratorFamily::clayton_boundary(3));
    for (const auto& f : fams) {
        const auto c = make(f, 3);
        INFO(c.describe());
        for (int i = 0; i < 200; ++i) {
            const double u = rng.uniform();
            for (int k = 0; k < 3; ++k) {
                std::vector<double> x(3, 1.0);
                x[static_cast<std::size_t>(k)] = u;
                CHECK_THAT(c.cdf(x), WithinAbs(u, 1e-12));
            }
            const std::vector<double> a{rng.uniform(), rng.uniform(), rng.uniform()};
            const std::vector<double> b{rng.uniform(), rng.uniform(), rng.uniform()};
            double l1 = 0.0;
            for (int k = 0; k < 3; ++k) l1 += std::abs(a[static_cast<std::size_t>(k)] - b[static_cast<std::size_t>(k)]);
            CHECK(std::abs(c.cdf(a) - c.cdf(b)) <= l1 + 1e-14);
            CHECK(c.marginal(2).cdf(std::vector{a[0], a[1]}) == c.cdf(std::vector{a[0], a[1], 1.0}));
            // Frechet bounds.
            CHECK(c.cdf(a) <= std::min({a[0], a[1], a[2]}) + 1e-15);
            CHECK(c.cdf(a) >= std::max(0.0, a[0] + a[1] + a[2] - 2.0) - 1e-15);
        }
    }
}

TEST_CASE("density agrees with mixed finite differences of the cdf", "[copula]") {
    const auto ind = make(GeneratorFamily::independence(), 3);
    CHECK_THAT(density(ind, std::vector{0.2, 0.7, 0.4}), WithinAbs(1.0, 1e-13));

    const auto cla = make(GeneratorFamily::clayton(1.0), 2);
    auto closed = [](const std::vector<double>& p) { return p[0] * p[1] / (p[0] + p[1] - p[0] * p[1]); };
    const double fd = oracle::mixed_partial(closed, {0.5, 0.5}, 1e-3);
    CHECK_THAT(fd, WithinRel(2.0 * 0.25 / std::pow(0.75, 3), 1e-6));
    CHECK_THAT(density(cla, std::vector{0.5, 0.5}), WithinRel(fd, 1e-6));
    CHECK_THAT(density(cla, std::vector{0.5, 0.5}), WithinAbs(1.18519, 1e-5));

    for (const auto& f : strict_families()) {
        const auto c = make(f, 3);
        INFO(c.describe());
        for (const auto& x : {std::vector{0.3, 0.5, 0.7}, std::vector{0.6, 0.6, 0.2}, std::vector{0.85, 0.4, 0.55}}) {
            const double num = oracle::mixed_partial([&](const std::vector<double>& p) { return c.cdf(p); }, x, 1e-3);
            CHECK_THAT(c.density(x), WithinRel(num, 1e-4));
        }
    }
}

TEST_CASE("density integrates to one for strict families and to zero at the boundary", "[copula]") {
    const std::size_t n = 1'000'000;
    auto mc_mass = [&](const ArchimedeanCopula<>& c) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            StreamRng rng(99, i);
            const double x[3] = {rng.uniform(), rng.uniform(), rng.uniform()};
            acc += c.density(x);
        }
        return acc / static_cast<double>(n);
    };
    CHECK_THAT(mc_mass(make(GeneratorFamily::gumbel(1.5), 3)), WithinAbs(1.0, 5e-3));
    CHECK_THAT(mc_mass(make(GeneratorFamily::frank(4.0), 3)), WithinAbs(1.0, 5e-3));
    const auto boundary = make(GeneratorFamily::clayton_boundary(3), 3);
    CHECK(boundary.density(std::vector{0.6, 0.7, 0.8}) == 0.0);
    CHECK(mc_mass(boundary) <= 5e-3);
}

TEST_CASE("zero set classification", "[copula]") {
    const auto gum = make(GeneratorFamily::gumbel(3.0), 3);
    CHECK(in_zero_set(gum, {{0.0, 0.4, 0.9}}) == ZeroSetMembership::Boundary);
    CHECK(in_zero_set(gum, {{0.2, 0.4, 0.9}}) == ZeroSetMembership::Outside);
    CHECK(in_zero_set(gum, {{0.0, 0.4}, 2}) == ZeroSetMembership::Boundary);

    // Boundary Clayton d=3: phi(t) = 2(1 - sqrt t)/s with s = 2(1 - 2^{-1/2}).
    const auto bc = make(GeneratorFamily::clayton_boundary(3), 3);
    const double s = 2.0 * (1.0 - std::pow(2.0, -0.5));
    auto phi_ref = [&](double t) { return 2.0 * (1.0 - std::sqrt(t)) / s; };
    const double phi0 = 2.0 / s;
    REQUIRE(3.0 * phi_ref(0.1) > phi0);
    CHECK(in_zero_set(bc, {{0.1, 0.1, 0.1}}) == ZeroSetMembership::Interior);
    REQUIRE(3.0 * phi_ref(0.5) < phi0);
    CHECK(in_zero_set(bc, {{0.5, 0.5, 0.5}}) == ZeroSetMembership::Outside);
    CHECK(in_zero_set(bc, {{0.0, 1.0, 1.0}}) == ZeroSetMembership::Boundary);
    REQUIRE(2.0 * phi_ref(0.1) > phi0);
    CHECK(in_zero_set(bc, {{0.1, 0.1}, 2}) == ZeroSetMembership::Interior);
    REQUIRE(2.0 * phi_ref(0.6) < phi0);
    CHECK(in_zero_set(bc, {{0.6, 0.6}, 2}) == ZeroSetMembership::Outside);
    CHECK(cdf(bc, std::vector{0.1, 0.1, 0.1}) == 0.0);
}

TEST_CASE("box volumes", "[copula]") {
    const std::vector<double> zero(3, 0.0), one(3, 1.0);
    const auto ind = make(GeneratorFamily::independence(), 3);
    CHECK_THAT(box_volume(ind, zero, one), WithinAbs(1.0, 1e-15));
    CHECK_THAT(box_volume(ind, std::vector(3, 0.2), std::vector(3, 0.5)), WithinAbs(0.027, 1e-15));
    CHECK_THROWS_MATCHES(box_volume(ind, std::vector{0.5, 0.1, 0.1}, std::vector{0.4, 0.9, 0.9}), Error,
                         code_is(Errc::InvalidBox));

    // FixtureB against its explicit construction (X, X, Z).
    const FixtureCopulaB fb;
    CHECK(box_volume(fb, std::vector{0.0, 0.5, 0.0}, std::vector{0.4, 1.0, 1.0}) == 0.0);
    const std::vector<double> a{0.2, 0.1, 0.3}, b{0.6, 0.5, 0.9};
    std::size_t hits = 0;
    const std::size_t n = 200000;
    for (std::size_t i = 0; i < n; ++i) {
        StreamRng rng(5, i);
        const double x = rng.uniform(), z = rng.uniform();
        hits += (x > a[0] && x <= b[0] && x > a[1] && x <= b[1] && z > a[2] && z <= b[2]);
    }
    const double mc = static_cast<double>(hits) / n;
    CHECK_THAT(box_volume(fb, a, b), WithinAbs(mc, 4e-3));
    CHECK_THAT(box_volume(fb, a, b), WithinAbs(0.18, 1e-15));

    StreamRng rng(8, 0);
    std::vector<GeneratorFamily> fams = strict_families();
    fams.push_back(GeneratorFamily::clayton_boundary(3));
    for (const auto& f : fams) {
        const auto c = make(f, 3);
        for (int i = 0; i < 1000; ++i) {
            std::vector<double> lo(3), hi(3);
            for (int k = 0; k < 3; ++k) {
                const double u = rng.uniform(), v = rng.uniform();
                lo[static_cast<std::size_t>(k)] = std::min(u, v);
                hi[static_cast<std::size_t>(k)] = std::max(u, v);
            }
            CHECK(box_volume(c, lo, hi) >= 0.0);
        }
    }
}

TEST_CASE("finite-difference kernel oracle", "[copula]") {
    const auto ind = make(GeneratorFamily::independence(), 3);
    const double x[1] = {0.4};
    const double y[2] = {0.3, 0.8};
    CHECK_THAT(partial_derivative_kernel_oracle(ind, x, y), WithinAbs(0.24, 1e-8));

    // The oracle kernel is a distribution function in y: non-negative box volumes.
    const auto gum = make(GeneratorFamily::gumbel(2.0), 3);
    const double xs[1] = {0.35};
    for (double a = 0.1; a < 0.8; a += 0.2)
        for (double b = 0.1; b < 0.8; b += 0.2) {
            auto k = [&](double u, double v) {
                const double yy[2] = {u, v};
                return partial_derivative_kernel_oracle(gum, xs, yy);
            };
            const double vol = k(a + 0.15, b + 0.15) - k(a, b + 0.15) - k(a + 0.15, b) + k(a, b);
            CHECK(vol >= -1e-7);
        }

    const double edge[1] = {1e-8};
    CHECK_THROWS_MATCHES(partial_derivative_kernel_oracle(gum, edge, y), Error, code_is(Errc::StepTooSmall));
}
