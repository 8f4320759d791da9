#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "fanopdc/continuum_single.hpp"
#include "fanopdc/error.hpp"
#include "fanopdc/quadrature.hpp"
#include "fanopdc/spectral.hpp"

// Biphoton correlations of the downconverted pair. Lengths are in units of
// zeta = eps L and s is the pair non-degeneracy, lambda = s^2.
namespace fanopdc::biphoton {

using cplx = std::complex<double>;
using continuum::MesonState;
inline constexpr double pi = std::numbers::pi;

inline constexpr double amplitude_tol = 1e-8;

struct CorrelationField {
    double xi = 0;
    double zeta = 1;
    double tau = 0;
    std::vector<double> dz_grid;
    std::vector<cplx> values;
};

// Q(tau, s) = -c_M^2 e^{i lambda_M tau}/(lambda_M + s^2)
//           + PV int c_l^2 e^{-i l tau}/(l - s^2) dl + c^2(s^2) w(s^2) e^{-i s^2 tau}
inline cplx spectral_correlation(const MesonState& m, double tau, double s) {
    require(s >= 0, "spectral_correlation: s must be >= 0");
    const double xi = m.xi;
    const double ls = s * s;
    auto c2 = [xi](auto l) { return continuum::continuum_weight_sq(xi, l); };
    auto g = [&](double l) { return c2(l) * std::polar(1.0, -l * tau); };
    std::vector<double> features = continuum::resonance_features(xi);

    quad::Estimate pv;
    double head = detail::head_end(features);
    if (ls == 0) {
        pv = detail::fourier_head([&](double l) { return c2(l) / l; }, tau, head);
        pv += detail::fourier_from([&](auto l) { return c2(l) / l; }, tau, head, features);
    } else {
        // Detour below the pole on a semicircle of radius r:
        // PV int = int_{0}^{s^2 - r} + int_{s^2 + r}^{inf} + int_{arc} - i pi g(s^2).
        // r stays clear of the band bottom and of the weight's complex poles
        // at lambda ~ xi -+ i pi/(2 sqrt(xi)).
        double r = std::min({0.5 * ls, 0.25, 0.4 / std::sqrt(std::max(xi, 1.0))});
        double lo = ls - r;
        if (lo <= head) {
            pv = detail::fourier_head([&](double l) { return c2(l) / (l - ls); }, tau, lo);
        } else {
            pv = detail::fourier_head([&](double l) { return c2(l) / (l - ls); }, tau, head);
            std::vector<double> pts{head, lo};
            for (double x : features)
                if (x > head && x < lo) pts.push_back(x);
            pv += quad::panels([&](double l) { return g(l) / (l - ls); }, pts, detail::panel_length(tau));
        }
        pv += detail::fourier_from([&](auto l) { return c2(l) / (l - ls); }, tau, ls + r, features);
        // lambda = s^2 + r e^{i theta}, theta from pi to 2 pi: dlambda/(lambda - s^2) = i dtheta.
        pv += quad::gk(
            [&](double th) {
                cplx l = ls + r * std::polar(1.0, th);
                return cplx(0, 1) * c2(l) * std::exp(cplx(0, -tau) * l);
            },
            pi, 2 * pi);
        pv.value -= cplx(0, pi) * g(ls);
    }
    cplx value = quad::checked(pv, amplitude_tol, "spectral_correlation");
    value += -m.c_M_sq * std::polar(1.0, m.lambda_M * tau) / (m.lambda_M + ls);
    value += c2(ls) * continuum::fano_shift(xi, ls) * std::polar(1.0, -ls * tau);
    return value;
}

inline cplx spectral_correlation(double xi, double tau, double s) {
    return spectral_correlation(continuum::meson_solution(xi), tau, s);
}

// Bound-state part of R: a static exponential envelope in |dz|.
inline cplx meson_term(const MesonState& m, double tau, double dz) {
    double l = m.lambda_M;
    return -2 * pi * l * std::exp(-2 * pi * std::sqrt(l) * std::abs(dz)) * std::polar(1.0, l * tau) /
           (pi + 4 * l * std::sqrt(l));
}

// Continuum part of R: int cos(2 pi sqrt(l) dz + Delta(l)) e^{-i l tau}/sqrt(w^2 + pi^2) dl,
// written as (w cos phi + pi sin phi)/(w^2 + pi^2) with Delta = -atan2(pi, w).
inline quad::Estimate continuum_term(double xi, double tau, double dz) {
    dz = std::abs(dz);
    auto real_form = [&](double l) {
        double w = continuum::fano_shift(xi, l);
        double phi = 2 * pi * std::sqrt(l) * dz;
        return (w * std::cos(phi) + pi * std::sin(phi)) / (w * w + pi * pi);
    };
    std::vector<double> features = continuum::resonance_features(xi);
    double head = detail::head_end(features);
    // Past 4 (pi dz/tau)^2 the stationary point of sqrt(l) dz - l tau is behind us.
    double cut = detail::tail_start(features);
    if (tau != 0) cut = std::max(cut, 4 * std::pow(pi * dz / tau, 2));
    std::vector<double> pts{head, cut};
    for (double x : features)
        if (x > head && x < cut) pts.push_back(x);
    for (double x = 2 * head; x < cut; x *= 2) pts.push_back(x);

    quad::Estimate total = detail::fourier_head(real_form, tau, head);
    total += quad::panels([&](double l) { return cplx(real_form(l)) * std::polar(1.0, -l * tau); }, pts,
                          detail::panel_length(tau));

    // Tail: split into e^{+i phi} and e^{-i phi} and rotate each into the half
    // plane where its total phase decays.
    for (int sgn : {+1, -1}) {
        double slope = sgn * pi * dz / std::sqrt(cut) - tau;
        int dir = slope < 0 ? -1 : +1;
        total += quad::ray_tail(
            [&](cplx l) {
                cplx w = continuum::fano_shift(xi, l);
                cplx phase = cplx(0, sgn * 2 * pi * dz) * std::sqrt(l) - cplx(0, tau) * l;
                return 0.5 * std::exp(phase) / (w + cplx(0, sgn * pi));
            },
            cut, dir);
    }
    return total;
}

inline cplx spatial_correlation(const MesonState& m, double tau, double dz) {
    require(dz >= 0, "spatial_correlation: dz must be >= 0");
    return meson_term(m, tau, dz) +
           quad::checked(continuum_term(m.xi, tau, dz), amplitude_tol, "spatial_correlation");
}

// R(|z - z'|) on a grid of separations in units of zeta; values carry the 1/sqrt(zeta) factor.
inline CorrelationField spatial_correlation(double xi, double tau, const std::vector<double>& dz_grid,
                                            double zeta = 1) {
    require(zeta > 0, "spatial_correlation: zeta must be positive");
    MesonState m = continuum::meson_solution(xi);
    CorrelationField f{xi, zeta, tau, dz_grid, {}};
    f.values.reserve(dz_grid.size());
    for (double dz : dz_grid) f.values.push_back(spatial_correlation(m, tau, dz) / std::sqrt(zeta));
    return f;
}

// Magnitude of the group velocity +-sqrt(xi) zeta/pi of the two wavepackets.
inline double wavepacket_velocity(double xi, double zeta = 1) {
    require(xi > 0, "wavepacket_velocity: needs xi > 0 for propagating wavepackets");
    return std::sqrt(xi) * zeta / pi;
}

// e-folds of the meson envelope counted as its extent.
inline constexpr double meson_extent_efolds = 5;

// xi > 0: separation 2 v |tau| of the counter-propagating wavepackets.
// Otherwise a fixed number of e-folds of the static meson envelope.
inline double correlation_length(double xi, double zeta, double tau) {
    if (xi > 0) return 2 * wavepacket_velocity(xi, zeta) * std::abs(tau);
    MesonState m = continuum::meson_solution(xi);
    return meson_extent_efolds * zeta / (2 * pi * std::sqrt(m.lambda_M));
}

}  // namespace fanopdc::biphoton
