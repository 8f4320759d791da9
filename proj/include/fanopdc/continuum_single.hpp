#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <utility>
#include <vector>

#include "fanopdc/error.hpp"
#include "fanopdc/spectral.hpp"

// Fano solution of the single-photon PDC problem on the infinite line.
// Energies in units of hbar kappa; the bound state sits at -lambda_M.
namespace fanopdc::continuum {

using cplx = std::complex<double>;
inline constexpr double pi = std::numbers::pi;

struct MesonState {
    double lambda_M = 0;
    double c_M_sq = 0;
    double xi = 0;
};

struct ContinuumWeight {
    double lambda = 0;
    double w = 0;
    double c_lambda_sq = 0;
    double delta_phase = 0;
};

// pi/(2 sqrt(l)) - l - xi
inline double meson_residual(double xi, double lambda) {
    return pi / (2 * std::sqrt(lambda)) - lambda - xi;
}

inline MesonState meson_solution(double xi) {
    require(std::isfinite(xi), "meson_solution: xi must be finite");
    // f(lo) >= 0: for xi < 0, lo = -xi gives pi/(2 sqrt(lo)) > 0;
    // for xi >= 0, lo = (pi/(2(xi+2)))^2 gives 2 - lo > 0.
    double lo = xi < 0 ? -xi : std::pow(pi / (2 * (xi + 2)), 2);
    double hi = std::abs(xi) + pi;
    double lam = detail::bisect_decreasing([&](double l) { return meson_residual(xi, l); }, lo, hi);
    return {lam, 1.0 / (1.0 + pi / (4 * lam * std::sqrt(lam))), xi};
}

// Real on lambda >= 0; complex arguments serve the contour-rotated tails.
template <class T>
T fano_shift(double xi, T lambda) {
    return 2.0 * std::sqrt(lambda) * (lambda - xi);
}

template <class T>
T continuum_weight_sq(double xi, T lambda) {
    T w = fano_shift(xi, lambda);
    return 2.0 * std::sqrt(lambda) / (w * w + pi * pi);
}

inline ContinuumWeight continuum_weight(double xi, double lambda) {
    require(lambda >= 0, "continuum_weight: lambda must be >= 0");
    ContinuumWeight c;
    c.lambda = lambda;
    c.w = fano_shift(xi, lambda);
    c.c_lambda_sq = 2 * std::sqrt(lambda) / (c.w * c.w + pi * pi);
    // atan2 keeps the phase continuous through w = 0, where it equals -pi/2.
    c.delta_phase = -std::atan2(pi, c.w);
    return c;
}

// Resonance breakpoints for the spectral quadratures.
inline std::vector<double> resonance_features(double xi) {
    if (xi <= 0) return {};
    double hw = 3 * pi / std::sqrt(xi);
    return {xi - hw, xi - hw / 3, xi, xi + hw / 3, xi + hw};
}

// int_0^inf c_lambda^2 e^{-i lambda tau} dlambda
inline quad::Estimate continuum_fourier(double xi, double tau) {
    return detail::spectral_fourier([xi](auto l) { return continuum_weight_sq(xi, l); }, tau,
                                    resonance_features(xi));
}

inline constexpr double amplitude_tol = 1e-8;

// C(tau) = c_M^2 + int c_lambda^2 e^{-i(lambda + lambda_M) tau}; a global phase
// e^{-i lambda_M tau} away from the lab-frame pump amplitude.
inline cplx pump_amplitude(const MesonState& m, double tau) {
    cplx integral = quad::checked(continuum_fourier(m.xi, tau), amplitude_tol, "pump_amplitude");
    return m.c_M_sq + std::polar(1.0, -m.lambda_M * tau) * integral;
}

inline cplx pump_amplitude(double xi, double tau) { return pump_amplitude(meson_solution(xi), tau); }

inline std::vector<double> pump_population_series(double xi, const std::vector<double>& tau_grid) {
    MesonState m = meson_solution(xi);
    std::vector<double> out;
    out.reserve(tau_grid.size());
    for (double t : tau_grid) out.push_back(std::norm(pump_amplitude(m, t)));
    return out;
}

enum class Regime { dissipative, dispersive };

inline double asymptotic_population(double xi, double tau, Regime regime) {
    if (regime == Regime::dissipative) {
        require(xi > 0, "asymptotic_population: dissipative regime needs xi > 0");
        double tau_d = std::sqrt(xi) / pi;
        return std::exp(-tau / tau_d);
    }
    require(xi < 0, "asymptotic_population: dispersive regime needs xi < 0");
    require(tau > 0, "asymptotic_population: dispersive form is singular at tau = 0");
    double a = 1 - pi / (4 * std::pow(-xi, 1.5));
    cplx osc = std::sqrt(pi) / (2 * xi * xi * std::sqrt(tau)) * std::polar(1.0, xi * tau - pi / 4);
    return std::norm(a + osc);
}

struct DepletionPoint {
    double xi_f = 0;
    double tau_f = 0;
    double population = 0;
};

namespace detail {

// Newton on (Re C, Im C) with a central-difference Jacobian.
inline DepletionPoint newton_zero(double x, double t) {
    const double h = 1e-6;
    for (int it = 0; it < 50; ++it) {
        cplx c0 = pump_amplitude(x, t);
        if (std::norm(c0) < 1e-26) break;
        cplx cx = (pump_amplitude(x + h, t) - pump_amplitude(x - h, t)) / (2 * h);
        cplx ct = (pump_amplitude(x, t + h) - pump_amplitude(x, t - h)) / (2 * h);
        double det = cx.real() * ct.imag() - ct.real() * cx.imag();
        if (det == 0) break;
        double dx = -(ct.imag() * c0.real() - ct.real() * c0.imag()) / det;
        double dt = -(-cx.imag() * c0.real() + cx.real() * c0.imag()) / det;
        x += dx;
        t += dt;
        if (!(x > 0) || !(t > 0) || std::abs(dx) + std::abs(dt) < 1e-13) break;
    }
    double n = (x > 0 && t > 0) ? std::norm(pump_amplitude(x, t)) : 1.0;
    return {x, t, n};
}

}  // namespace detail

// Earliest zero of C(xi, tau) in xi in [0.5, 4], tau in [0.5, 3]. The box
// holds more than one zero, so every local minimum of a coarse scan is
// refined and the zero with the smallest tau wins.
inline DepletionPoint find_depletion_point() {
    constexpr int nx = 36, nt = 51;
    std::vector<double> grid(nx * nt);
    auto xi_at = [](int i) { return 0.5 + 0.1 * i; };
    auto tau_at = [](int j) { return 0.5 + 0.05 * j; };
    for (int i = 0; i < nx; ++i) {
        MesonState m = meson_solution(xi_at(i));
        for (int j = 0; j < nt; ++j) grid[i * nt + j] = std::norm(pump_amplitude(m, tau_at(j)));
    }
    DepletionPoint best{0, 0, 1.0};
    bool found = false;
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < nt; ++j) {
            double v = grid[i * nt + j];
            bool local_min = v < 0.05;
            for (int di = -1; di <= 1 && local_min; ++di)
                for (int dj = -1; dj <= 1; ++dj) {
                    int a = i + di, b = j + dj;
                    if ((di || dj) && a >= 0 && a < nx && b >= 0 && b < nt && grid[a * nt + b] < v)
                        local_min = false;
                }
            if (!local_min) continue;
            DepletionPoint z = detail::newton_zero(xi_at(i), tau_at(j));
            bool inside = z.xi_f >= 0.5 && z.xi_f <= 4 && z.tau_f >= 0.5 && z.tau_f <= 3;
            if (inside && z.population < 1e-6 && (!found || z.tau_f < best.tau_f)) {
                best = z;
                found = true;
            } else if (!found && z.population < best.population) {
                best = z;
            }
        }
    }
    if (!found)
        throw NumericalError("find_depletion_point: no zero of C found in the search box", best.population);
    return best;
}

}  // namespace fanopdc::continuum
