#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "fanopdc/error.hpp"

// Building blocks for the Fourier-type spectral integrals of the Fano
// solutions: panelled Gauss-Kronrod on finite ranges, and contour-rotated
// exp-sinh for oscillatory semi-infinite tails.
namespace fanopdc::quad {

using cplx = std::complex<double>;

struct Estimate {
    cplx value{0, 0};
    double error = 0;
    // int |f|, as far as the rule resolves it
    double l1 = 0;

    Estimate& operator+=(const Estimate& o) {
        value += o.value;
        error += o.error;
        l1 += o.l1;
        return *this;
    }
};

// Absolute error target per panel. Relative-to-L1 termination never triggers
// on whole oscillation periods, where the value cancels far below the L1 norm.
inline constexpr double default_tol = 1e-14;

namespace detail {

template <class F>
Estimate gk_single(F& f, double a, double b) {
    double err = 0, l1 = 0;
    cplx v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 0, 0.0, &err, &l1);
    // Boost reports the single-panel error on the reference interval [-1, 1]
    // while value and L1 are mapped to [a, b].
    return {v, err * 0.5 * (b - a), l1};
}

// Bisects until the error is below tol. A split that fails to shrink an
// error already near rounding level relative to int |f| marks a noise floor;
// the split estimate is kept there. Splitting stops once `budget` panels have
// been evaluated, leaving the error estimate to report the shortfall.
template <class F>
Estimate gk_recurse(F& f, double a, double b, const Estimate& whole, double tol, unsigned depth, long& budget) {
    if (whole.error <= tol || depth == 0 || budget <= 0) return whole;
    double m = 0.5 * (a + b);
    if (!(m > a && m < b)) return whole;
    Estimate left = gk_single(f, a, m);
    Estimate right = gk_single(f, m, b);
    budget -= 2;
    if (left.error + right.error > 0.9 * whole.error && whole.error <= 1e-10 * whole.l1) {
        Estimate both = left;
        both += right;
        return both;
    }
    Estimate out = gk_recurse(f, a, m, left, 0.5 * tol, depth - 1, budget);
    out += gk_recurse(f, m, b, right, 0.5 * tol, depth - 1, budget);
    return out;
}

}  // namespace detail

// 31-point Gauss-Kronrod on [a, b] with bisection until the error estimate is below tol
// or max_panels sub-panels have been spent.
template <class F>
Estimate gk(F&& f, double a, double b, double tol = default_tol, unsigned max_depth = 30, long max_panels = 20000) {
    if (b <= a) return {};
    auto g = [&](double x) -> cplx { return f(x); };
    return detail::gk_recurse(g, a, b, detail::gk_single(g, a, b), tol, max_depth, max_panels);
}

// tanh-sinh on [a, b]; tolerates integrable endpoint singularities.
template <class F>
Estimate endpoint_singular(F&& f, double a, double b, double tol = 1e-11) {
    if (b <= a) return {};
    static thread_local boost::math::quadrature::tanh_sinh<double> ts;
    double err = 0, l1 = 0;
    cplx v = ts.integrate([&](double x) -> cplx { return f(x); }, a, b, tol, &err, &l1);
    return {v, err, l1};
}

// Largest number of pieces panels() will cut one call into.
inline constexpr double max_pieces = 1e6;

// Sum of gk over [pts_k, pts_{k+1}], each interval cut into pieces no longer than max_len.
template <class F>
Estimate panels(F&& f, std::vector<double> pts, double max_len, double tol = default_tol) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() >= 2 && (pts.back() - pts.front()) / max_len > max_pieces)
        throw NumericalError("quadrature: integrand oscillates too fast for the range",
                             std::numeric_limits<double>::infinity());
    Estimate total;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        double a = pts[k], b = pts[k + 1];
        if (!(b > a)) continue;
        auto n = static_cast<std::size_t>(std::ceil((b - a) / max_len));
        n = std::max<std::size_t>(n, 1);
        double h = (b - a) / static_cast<double>(n);
        for (std::size_t j = 0; j < n; ++j) {
            double lo = a + h * static_cast<double>(j);
            double hi = (j + 1 == n) ? b : lo + h;
            total += gk(f, lo, hi, tol);
        }
    }
    return total;
}

// int_a^inf f(x) dx for f analytic in the quadrant swept by the ray
// x = a + dir i y (dir = -1 lower, +1 upper), continued along that ray.
// Picking the half plane where f's oscillation decays turns a Fourier tail
// into a smooth, exponentially damped integrand. f takes std::complex<double>.
template <class F>
Estimate ray_tail(F&& f, double a, int dir) {
    static thread_local boost::math::quadrature::exp_sinh<double> es;
    const cplx step(0, dir >= 0 ? 1.0 : -1.0);
    double err = 0, l1 = 0;
    cplx v = es.integrate([&](double y) -> cplx { return f(cplx(a, 0) + step * y) * step; }, 0.0,
                          std::numeric_limits<double>::infinity(), 1e-12, &err, &l1);
    return {v, err, l1};
}

// Throws if the accumulated estimate exceeds the bound.
inline cplx checked(const Estimate& e, double bound, const char* what) {
    if (!(e.error <= bound) || !std::isfinite(e.value.real()) || !std::isfinite(e.value.imag()))
        throw NumericalError(std::string(what) + ": quadrature did not converge", e.error);
    return e.value;
}

}  // namespace fanopdc::quad
