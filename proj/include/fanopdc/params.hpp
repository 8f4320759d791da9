#pragma once

#include <cmath>
#include <complex>
#include <utility>

#include "fanopdc/error.hpp"

namespace fanopdc::params {

// CODATA 2018, exact in SI.
inline constexpr double hbar = 1.054571817e-34;  // J s
inline constexpr double c_light = 299792458.0;   // m/s

struct PhysicalParams {
    double g = 0;      // nonlinear coupling rate, 1/s
    double d_a = 0;    // signal dispersion rate, 1/s
    double d_b = 0;    // pump dispersion rate, 1/s
    double delta = 0;  // phase mismatch, 1/s
    double mu = 0;     // group-velocity mismatch, 1/s
    double L = 1;      // quantization window, m
};

struct NormalizedParams {
    double kappa = 0;
    double xi = 0;
    double epsilon = 0;
    double zeta = 0;
    double gamma = 0;
    double beta = 0;
    // Set when d_a < 0 was mapped onto d_a > 0 via delta -> -delta, t -> -t.
    // Physical times are -tau / kappa in that case.
    bool time_reversed = false;

    double physical_time(double tau) const { return (time_reversed ? -tau : tau) / kappa; }
};

struct ExperimentParams {
    double eta = 0;             // SHG slope efficiency, 1/(W m^2)
    double lambda_carrier = 0;  // m
    double gvd = 0;             // |k''|, s^2/m
    double v = 0;               // group velocity, m/s; unused by l_pdc
};

inline NormalizedParams normalize(const PhysicalParams& p) {
    require(std::isfinite(p.g) && std::isfinite(p.d_a) && std::isfinite(p.d_b) &&
                std::isfinite(p.delta) && std::isfinite(p.mu) && std::isfinite(p.L),
            "normalize: non-finite parameter");
    require(p.d_a != 0, "normalize: d_a = 0 makes the normalization singular");
    require(p.g != 0, "normalize: g = 0, no nonlinearity");
    require(p.L > 0, "normalize: L must be positive");

    double da = p.d_a, delta = p.delta, mu = p.mu, db = p.d_b;
    NormalizedParams n;
    if (da < 0) {
        // Time reversal plus conjugation flips the sign of every rate in the
        // diagonal, which keeps the relative dispersion ratio intact.
        da = -da;
        delta = -delta;
        mu = -mu;
        db = -db;
        n.time_reversed = true;
    }
    double g2 = p.g * p.g;
    n.kappa = std::cbrt(g2 * g2 / (2 * da));
    n.epsilon = std::cbrt((2 * da / p.g) * (2 * da / p.g));
    n.zeta = n.epsilon * p.L;
    n.xi = delta / n.kappa;
    n.beta = db / da;
    n.gamma = mu / std::cbrt(2 * da * g2);
    return n;
}

// (lambda^2 |k''| / (4 hbar^2 c^2 eta^2))^{1/3}
inline double l_pdc(const ExperimentParams& e) {
    require(e.eta > 0 && e.lambda_carrier > 0 && e.gvd > 0, "l_pdc: eta, lambda and gvd must be positive");
    double num = e.lambda_carrier * e.lambda_carrier * e.gvd;
    double den = 4 * hbar * hbar * c_light * c_light * e.eta * e.eta;
    return std::cbrt(num / den);
}

// 1 %/W/cm^2 = 1e-2 / (W 1e-4 m^2) = 100 /(W m^2)
inline double eta_from_percent_per_w_cm2(double v) { return v * 100.0; }
// fs^2/mm -> s^2/m
inline double gvd_from_fs2_per_mm(double v) { return v * 1e-30 / 1e-3; }

struct ShgState {
    std::complex<double> alpha;
    std::complex<double> beta;
};

// SHG from an empty second harmonic: |alpha|^2 + 2|beta|^2 = alpha0^2.
inline ShgState shg_mean_field(double alpha0, double g, double t) {
    require(alpha0 >= 0, "shg_mean_field: alpha0 must be non-negative");
    double x = alpha0 * g * t / std::sqrt(2.0);
    return {std::complex<double>(alpha0 / std::cosh(x), 0),
            std::complex<double>(0, -alpha0 / std::sqrt(2.0) * std::tanh(x))};
}

}  // namespace fanopdc::params
