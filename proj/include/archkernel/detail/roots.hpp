#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>

#include <boost/math/tools/toms748_solve.hpp>

#include "archkernel/error.hpp"

namespace archkernel::detail {

/// Root of a continuous strictly decreasing f on the real line, searched by
/// bracket expansion from [lo, hi] and refined with TOMS 748. The bracket may
/// not grow beyond [min_lo, max_hi].
template <class F>
double decreasing_root(F&& f, double lo, double hi, double min_lo, double max_hi) {
    double flo = f(lo);
    while (flo < 0.0) {
        if (lo <= min_lo) fail(Errc::RangeError, "target above the range of the function");
        hi = lo;
        lo = std::max(min_lo, lo - 2.0 * (1.0 + std::abs(lo)));
        flo = f(lo);
    }
    double fhi = f(hi);
    while (fhi > 0.0) {
        if (hi >= max_hi) fail(Errc::RangeError, "target below the range of the function");
        lo = hi;
        flo = fhi;
        hi = std::min(max_hi, hi + 2.0 * (1.0 + std::abs(hi)));
        fhi = f(hi);
    }
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    std::uintmax_t max_iter = 200;
    const auto [a, b] = boost::math::tools::toms748_solve(
        f, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(52), max_iter);
    if (max_iter >= 200) fail(Errc::NumericalFailure, "root bracket did not converge");
    return 0.5 * (a + b);
}

}  // namespace archkernel::detail
