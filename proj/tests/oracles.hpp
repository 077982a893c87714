#pragma once

// Independent numerical oracles for the test suites. Nothing here calls the
// closed forms under test.

#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace oracle {

/// Root of a decreasing f on [lo, hi] by plain bisection.
inline double bisect_decreasing(const std::function<double(double)>& f, double lo, double hi, int iters = 200) {
    for (int i = 0; i < iters; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// Central difference of f at z with one Richardson step (error O(h^4)).
inline double richardson_derivative(const std::function<double(double)>& f, double z, double h) {
    auto central = [&](double s) { return (f(z + s) - f(z - s)) / (2.0 * s); };
    const double d1 = central(h);
    const double d2 = central(0.5 * h);
    const double d3 = central(0.25 * h);
    const double r1 = (4.0 * d2 - d1) / 3.0;
    const double r2 = (4.0 * d3 - d2) / 3.0;
    return (16.0 * r2 - r1) / 15.0;
}

/// Composite Simpson rule on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
    if (n % 2) ++n;
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

/// Mixed partial derivative d^k f / dx_1..dx_k at x by a 2^k-point central
/// stencil, Richardson-extrapolated once over h and h/2.
inline double mixed_partial(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
                            double h) {
    const std::size_t k = x.size();
    auto stencil = [&](double s) {
        std::vector<double> p(k);
        double acc = 0.0;
        for (std::size_t mask = 0; mask < (std::size_t{1} << k); ++mask) {
            int sign = 1;
            for (std::size_t i = 0; i < k; ++i) {
                const bool down = (mask >> i) & 1u;
                p[i] = x[i] + (down ? -s : s);
                if (down) sign = -sign;
            }
            acc += sign * f(p);
        }
        return acc / std::pow(2.0 * s, static_cast<double>(k));
    };
    return (4.0 * stencil(0.5 * h) - stencil(h)) / 3.0;
}

}  // namespace oracle
