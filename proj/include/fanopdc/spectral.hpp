#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "fanopdc/quadrature.hpp"

namespace fanopdc::detail {

// Largest x in [lo, hi] with f(x) >= 0, for f strictly decreasing with
// f(lo) >= 0 >= f(hi). Runs to adjacent doubles.
template <class F>
double bisect_decreasing(F&& f, double lo, double hi) {
    for (int it = 0; it < 2000; ++it) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (f(mid) >= 0)
            lo = mid;
        else
            hi = mid;
    }
    return std::abs(f(lo)) <= std::abs(f(hi)) ? lo : hi;
}

inline double panel_length(double tau) {
    return tau != 0 ? std::min(8.0, 2 * std::numbers::pi / std::abs(tau)) : 8.0;
}

// Start of the contour-rotated tail: past every feature and far enough out
// that the weights have no poles in the swept quadrant.
inline double tail_start(const std::vector<double>& features, double from = 0) {
    double peak = from;
    for (double x : features) peak = std::max(peak, x);
    return 2 * peak + 64;
}

// int_a^inf f(lambda) e^{-i lambda tau} dlambda for a smooth weight f that
// decays at least like lambda^{-3/2}. `features` are resonance locations
// folded into breakpoints. f must accept std::complex<double> and be analytic
// beyond tail_start(features, a), where the integral continues along a ray
// into the half plane in which e^{-i lambda tau} decays.
template <class F>
quad::Estimate fourier_from(F&& f, double tau, double a, const std::vector<double>& features) {
    using quad::cplx;
    double cut = tail_start(features, a);
    std::vector<double> pts{a, cut};
    for (double x : features)
        if (x > a && x < cut) pts.push_back(x);
    quad::Estimate total = quad::panels(
        [&](double lam) { return cplx(f(lam)) * std::polar(1.0, -lam * tau); }, pts, panel_length(tau));
    total += quad::ray_tail([&](cplx lam) { return cplx(f(lam)) * std::exp(cplx(0, -tau) * lam); }, cut,
                            tau >= 0 ? -1 : 1);
    return total;
}

// Lower end of the u = sqrt(lambda) head panel that absorbs a sqrt(lambda)
// branch point at the band bottom.
inline double head_end(const std::vector<double>& features) {
    double head = 0.25;
    for (double x : features)
        if (x > 0) head = std::min(head, 0.5 * x);
    return head;
}

// int_0^head f(lambda) e^{-i lambda tau} dlambda through lambda = u^2.
template <class F>
quad::Estimate fourier_head(F&& f, double tau, double head) {
    using quad::cplx;
    return quad::gk(
        [&](double u) {
            double lam = u * u;
            return cplx(f(lam)) * (2 * u) * std::polar(1.0, -lam * tau);
        },
        0.0, std::sqrt(head));
}

// int_0^inf f(lambda) e^{-i lambda tau} dlambda for a spectral weight that
// behaves like sqrt(lambda) at the band bottom.
template <class F>
quad::Estimate spectral_fourier(F&& f, double tau, const std::vector<double>& features) {
    double head = head_end(features);
    quad::Estimate total = fourier_head(f, tau, head);
    total += fourier_from(f, tau, head, features);
    return total;
}

}  // namespace fanopdc::detail
