#include <catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "archkernel/generator.hpp"
#include "archkernel/rng.hpp"
#include "oracles.hpp"

using namespace archkernel;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<GeneratorFamily> strict_families() {
    return {GeneratorFamily::independence(), GeneratorFamily::gumbel(1.5), GeneratorFamily::gumbel(3.0),
            GeneratorFamily::clayton(0.5),   GeneratorFamily::clayton(2.0), GeneratorFamily::frank(4.0)};
}

// Unnormalized generators written from their textbook formulas.
std::function<double(double)> raw_generator(const GeneratorFamily& f, int d) {
    const double th = f.theta;
    switch (f.id) {
        case Family::Independence: return [](double t) { return std::exp(-t); };
        case Family::Gumbel: return [th](double t) { return std::exp(-std::pow(t, 1.0 / th)); };
        case Family::Clayton: return [th](double t) { return std::pow(1.0 + t, -1.0 / th); };
        case Family::Frank:
            // Extended precision: for large theta the scale is tiny and 1 - q cancels.
            return [th](double t) {
                const long double q = (1.0L - std::exp(-static_cast<long double>(th))) * std::exp(-static_cast<long double>(t));
                return static_cast<double>(-std::log(1.0L - q) / th);
            };
        case Family::ClaytonBoundary: {
            const double k = d - 1.0;
            return [k](double t) { return std::pow(std::max(0.0, 1.0 - t / k), k); };
        }
    }
    return {};
}

}  // namespace

TEST_CASE("closed-form normalized generators", "[generator]") {
    const auto ind = make_generator(GeneratorFamily::independence(), 3);
    CHECK_THAT(psi(ind, 2.0), WithinAbs(0.25, 1e-15));
    CHECK_THAT(phi(ind, 0.25), WithinAbs(2.0, 1e-14));

    const auto gum = make_generator(GeneratorFamily::gumbel(3.0), 3);
    CHECK_THAT(psi(gum, 1.0), WithinAbs(0.5, 1e-15));
    CHECK_THAT(phi(gum, 0.5), WithinAbs(1.0, 1e-14));
    for (double z : {0.01, 0.3, 2.0, 17.0}) CHECK_THAT(psi(gum, z), WithinRel(std::pow(2.0, -std::cbrt(z)), 1e-13));

    const auto cla = make_generator(GeneratorFamily::clayton(1.0), 3);
    CHECK_THAT(cla.scale(), WithinAbs(1.0, 1e-15));
    CHECK_THAT(psi(cla, 3.0), WithinAbs(0.25, 1e-15));
}

TEST_CASE("normalization scale agrees with a bisection oracle", "[generator]") {
    std::vector<std::pair<GeneratorFamily, int>> cases;
    for (const auto& f : strict_families()) cases.emplace_back(f, 3);
    cases.emplace_back(GeneratorFamily::frank(30.0), 3);
    cases.emplace_back(GeneratorFamily::clayton(7.0), 4);
    cases.emplace_back(GeneratorFamily::clayton_boundary(3), 3);
    cases.emplace_back(GeneratorFamily::clayton_boundary(5), 5);
    for (const auto& [fam, d] : cases) {
        const auto g = make_generator(fam, d);
        const auto raw = raw_generator(fam, d);
        const double s = oracle::bisect_decreasing([&](double t) { return raw(t) - 0.5; }, 1e-12, 1e3);
        INFO(g.describe());
        CHECK_THAT(g.scale(), WithinRel(s, 1e-12));
        CHECK_THAT(g.psi(1.0), WithinAbs(0.5, 1e-12));
        CHECK_THAT(g.phi(0.5), WithinAbs(1.0, 1e-12));
        for (double z : {0.2, 1.7, 5.0}) CHECK_THAT(g.psi(z), WithinAbs(raw(s * z), 1e-14));
    }
}

TEST_CASE("derivatives match Richardson finite differences", "[generator]") {
    std::vector<std::pair<GeneratorFamily, int>> cases;
    for (const auto& f : strict_families()) cases.emplace_back(f, 5);
    cases.emplace_back(GeneratorFamily::frank(40.0), 4);
    cases.emplace_back(GeneratorFamily::gumbel(1.0), 4);
    for (const auto& [fam, d] : cases) {
        const auto g = make_generator(fam, d);
        INFO(g.describe());
        for (int m = 1; m <= d - 2; ++m) {
            for (double z = 0.05; z <= 20.0; z *= 1.37) {
                const double fd = oracle::richardson_derivative([&](double t) { return g.deriv(m - 1, t); }, z,
                                                                std::min(1e-2, z / 8.0));
                INFO("m=" << m << " z=" << z);
                CHECK_THAT(psi_deriv(g, m, z), WithinRel(fd, 1e-6));
            }
        }
    }
}

TEST_CASE("boundary Clayton derivatives on the smooth piece", "[generator]") {
    const auto g = make_generator(GeneratorFamily::clayton_boundary(4), 4);
    for (int m = 1; m <= 3; ++m)
        for (double z = 0.05; z < 0.9 * g.phi_zero(); z += 0.21) {
            const double fd = oracle::richardson_derivative([&](double t) { return g.deriv(m - 1, t); }, z, 1e-3);
            CHECK_THAT(g.deriv(m, z), WithinRel(fd, 1e-6));
        }
    // Left derivative of psi^(d-2) is a constant up to phi(0) and 0 beyond.
    const double top = g.deriv(3, 0.5 * g.phi_zero());
    CHECK_THAT(g.deriv(3, g.phi_zero()), WithinRel(top, 1e-14));
    CHECK(g.deriv(3, g.phi_zero() * 1.001) == 0.0);
    CHECK(g.deriv(4, 0.3) == 0.0);
}

TEST_CASE("derivative examples", "[generator]") {
    const auto ind = make_generator(GeneratorFamily::independence(), 3);
    CHECK_THAT(psi_deriv(ind, 1, 1.0), WithinAbs(-std::numbers::ln2 / 2.0, 1e-15));
    CHECK_THAT(psi_deriv_inverse(ind, 1, -std::numbers::ln2 / 2.0), WithinAbs(1.0, 1e-14));

    const auto cla = make_generator(GeneratorFamily::clayton(1.0), 4);
    const double z0 = 1e-9;
    CHECK_THAT(psi_deriv(cla, 2, z0), WithinRel(2.0 * std::pow(1.0 + z0, -3.0), 1e-13));
    const double fd = oracle::richardson_derivative([&](double t) { return psi(cla, t); }, 0.5, 1e-2);
    const double fd2 = oracle::richardson_derivative([&](double t) { return psi_deriv(cla, 1, t); }, 0.5, 1e-2);
    CHECK_THAT(psi_deriv(cla, 1, 0.5), WithinRel(fd, 1e-8));
    CHECK_THAT(psi_deriv(cla, 2, 0.5), WithinRel(fd2, 1e-8));

    const double v = 2.0 * std::pow(4.0, -3.0);
    const double bis = oracle::bisect_decreasing([&](double t) { return psi_deriv(cla, 2, t) - v; }, 1e-9, 1e3);
    CHECK_THAT(psi_deriv_inverse(cla, 2, v), WithinRel(3.0, 1e-13));
    CHECK_THAT(psi_deriv_inverse(cla, 2, v), WithinRel(bis, 1e-10));
}

TEST_CASE("derivative inverse round trip", "[generator]") {
    StreamRng rng(11, 0);
    for (const auto& fam : strict_families()) {
        const auto g = make_generator(fam, 4);
        INFO(g.describe());
        for (int m = 1; m <= 3; ++m)
            for (int i = 0; i < 25; ++i) {
                const double z = 0.01 * std::pow(5000.0, rng.uniform());
                CHECK_THAT(psi_deriv_inverse(g, m, psi_deriv(g, m, z)), WithinRel(z, 1e-12));
            }
    }
}

TEST_CASE("pseudo-inverse round trip and limits", "[generator]") {
    for (const auto& fam : strict_families()) {
        const auto g = make_generator(fam, 3);
        INFO(g.describe());
        CHECK(g.strict());
        CHECK(phi(g, 0.0) == kInf);
        CHECK(phi(g, 1.0) == 0.0);
        CHECK(psi(g, kInf) == 0.0);
        CHECK(psi(g, 0.0) == 1.0);
        for (double z = 0.0; z <= 50.0; z += 0.37) CHECK_THAT(phi(g, psi(g, z)), WithinAbs(z, 1e-10 * std::max(1.0, z)));
        CHECK(std::abs(psi_deriv(g, 2, 1e6)) <= 1e-6);
        for (int m = 0; m <= 1; ++m)
            for (double z = 0.01; z < 100.0; z *= 1.9) CHECK(deriv_sign(m) * psi_deriv(g, m, z) >= 0.0);
    }
}

TEST_CASE("non-strict boundary member", "[generator]") {
    const auto g = make_generator(GeneratorFamily::clayton_boundary(3), 3);
    CHECK_FALSE(g.strict());
    CHECK(std::isfinite(g.phi_zero()));
    CHECK_THAT(g.phi_zero(), WithinRel(2.0 / (2.0 * (1.0 - std::pow(2.0, -0.5))), 1e-14));
    CHECK(psi(g, g.phi_zero()) == 0.0);
    CHECK(psi(g, 10.0 * g.phi_zero()) == 0.0);
    CHECK(phi(g, 0.0) == g.phi_zero());
    for (double z = 0.0; z < g.phi_zero(); z += 0.1) CHECK_THAT(phi(g, psi(g, z)), WithinAbs(z, 1e-10));
    CHECK_THROWS_MATCHES(psi_deriv_inverse(g, 2, 0.1), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) { return e.code() == Errc::NonInvertible; }));
    CHECK_THAT(psi_deriv_inverse(g, 1, psi_deriv(g, 1, 0.8)), WithinRel(0.8, 1e-12));
}

TEST_CASE("large Frank parameter stays finite in log space", "[generator]") {
    const auto g = make_generator(GeneratorFamily::frank(45.0), 6);
    for (int m = 0; m <= 6; ++m)
        for (double z = 1e-3; z < 1e3; z *= 3.1) CHECK(std::isfinite(g.log_abs_deriv(m, z)));
}

TEST_CASE("Gumbel at theta 1 is the independence generator", "[generator]") {
    const auto a = make_generator(GeneratorFamily::gumbel(1.0), 4);
    const auto b = make_generator(GeneratorFamily::independence(), 4);
    for (int m = 0; m <= 3; ++m)
        for (double z : {0.0, 0.1, 1.0, 7.0}) CHECK_THAT(a.log_abs_deriv(m, z), WithinAbs(b.log_abs_deriv(m, z), 1e-13));
}

TEST_CASE("parameter admissibility", "[generator]") {
    auto code_is = [](Errc c) {
        return Catch::Matchers::Predicate<Error>([c](const Error& e) { return e.code() == c; });
    };
    CHECK_THROWS_MATCHES(make_generator(GeneratorFamily::gumbel(0.5), 3), Error, code_is(Errc::InadmissibleParameter));
    CHECK_THROWS_MATCHES(make_generator(GeneratorFamily::clayton(0.0), 3), Error, code_is(Errc::InadmissibleParameter));
    CHECK_THROWS_MATCHES(make_generator(GeneratorFamily::frank(-1.0), 3), Error, code_is(Errc::InadmissibleParameter));
    CHECK_THROWS_MATCHES(make_generator(GeneratorFamily::gumbel(1.2), 10), Error, code_is(Errc::InadmissibleParameter));
    CHECK_THROWS_MATCHES(make_generator({Family::ClaytonBoundary, -0.25}, 3), Error,
                         code_is(Errc::InadmissibleParameter));
    CHECK_THROWS_MATCHES(make_generator(GeneratorFamily::independence(), 1), Error,
                         code_is(Errc::InadmissibleParameter));
    CHECK(GeneratorFamily::clayton_boundary(4).admissible_dim() == 4);

    const auto g = make_generator(GeneratorFamily::gumbel(2.0), 3);
    CHECK_THROWS_MATCHES(psi(g, -1.0), Error, code_is(Errc::DomainError));
    CHECK_THROWS_MATCHES(psi(g, std::nan("")), Error, code_is(Errc::DomainError));
    CHECK_THROWS_MATCHES(phi(g, 1.5), Error, code_is(Errc::DomainError));
    CHECK_THROWS_MATCHES(psi_deriv(g, 3, 1.0), Error, code_is(Errc::DomainError));
    CHECK_THROWS_MATCHES(psi_deriv(g, 1, 0.0), Error, code_is(Errc::DomainError));
    CHECK_THROWS_MATCHES(psi_deriv_inverse(g, 1, 0.1), Error, code_is(Errc::RangeError));
    const auto c = make_generator(GeneratorFamily::clayton(1.0), 3);
    CHECK_THROWS_MATCHES(psi_deriv_inverse(c, 1, -2.0), Error, code_is(Errc::RangeError));
}

namespace {
// (1 - z)_+ : 2-monotone but not 3-monotone.
struct HingeGenerator {
    int dim() const { return 3; }
    double deriv(int m, double z) const {
        if (m == 0) return std::max(0.0, 1.0 - z);
        if (m == 1) return z <= 1.0 ? -1.0 : 0.0;
        return 0.0;
    }
};
}  // namespace

TEST_CASE("d-monotonicity validator", "[generator]") {
    std::vector<double> grid;
    for (double z = 0.01; z <= 20.0; z *= 1.1) grid.push_back(z);
    const auto rep = validate_d_monotone(make_generator(GeneratorFamily::gumbel(3.0), 3), grid);
    CHECK(rep.pass);
    CHECK_FALSE(rep.first_violation.has_value());
    for (const auto& fam : strict_families()) CHECK(validate_d_monotone(make_generator(fam, 5), grid).pass);
    CHECK(validate_d_monotone(make_generator(GeneratorFamily::clayton_boundary(4), 4), grid).pass);

    std::vector<double> fine;
    for (int i = 1; i <= 400; ++i) fine.push_back(i * 0.005);
    const auto bad = validate_d_monotone(HingeGenerator{}, fine);
    CHECK_FALSE(bad.pass);
    REQUIRE(bad.first_violation.has_value());
    CHECK(bad.first_violation->order == 1);
    CHECK(bad.first_violation->criterion == "convexity");
    CHECK_THAT(bad.first_violation->z, WithinAbs(1.0, 0.01));

    CHECK_THROWS_AS(validate_d_monotone(HingeGenerator{}, std::vector<double>{}), Error);
}
