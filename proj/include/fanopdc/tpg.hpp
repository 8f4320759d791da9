#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "fanopdc/error.hpp"
#include "fanopdc/hamiltonian.hpp"
#include "fanopdc/propagate.hpp"
#include "fanopdc/quadrature.hpp"
#include "fanopdc/spectral.hpp"

// Single-photon three-photon generation: a dc third-harmonic pump photon
// |c_0> coupled to signal triplets a_{p1} a_{p2} a_{p3} with p1 + p2 + p3 = 0.
namespace fanopdc::tpg {

using cplx = std::complex<double>;
inline constexpr double pi = std::numbers::pi;
// Spectral density of the triplet continuum per unit energy, pi/(3 sqrt 3).
inline constexpr double rho = pi / (3 * std::numbers::sqrt3);
inline constexpr double amplitude_tol = 1e-8;

struct TpgParams {
    double xi = 0;
    double epsilon = 0;
    double r_max = 5;

    void validate() const {
        require(std::isfinite(xi), "TpgParams: xi must be finite");
        require(epsilon > 0, "TpgParams: epsilon must be positive");
        require(r_max > 0, "TpgParams: r_max must be positive");
    }
};

struct TpgBoundState {
    double lambda_T = 0;
    double c_T_sq = 0;
    double xi = 0;
    double band_edge = 0;
};

// Top of the triplet band, r_max^2.
inline double default_band_edge(double r_max) { return r_max * r_max; }

// rho log(1 + B/l) - l - xi, strictly decreasing in l > 0.
inline double bound_residual(double xi, double lambda_T, double band_edge) {
    return rho * std::log1p(band_edge / lambda_T) - lambda_T - xi;
}

inline TpgBoundState tpg_bound_state(double xi, double r_max, double band_edge = 0) {
    require(std::isfinite(xi), "tpg_bound_state: xi must be finite");
    require(r_max > 0, "tpg_bound_state: r_max must be positive");
    double b = band_edge > 0 ? band_edge : default_band_edge(r_max);
    // Bisect in log(l); the residual runs from +inf at l -> 0 to -inf.
    double lo = std::log(1e-300), hi = std::log(std::abs(xi) + rho * std::log1p(b) + 1);
    double x = detail::bisect_decreasing([&](double t) { return bound_residual(xi, std::exp(t), b); }, lo, hi);
    TpgBoundState s;
    s.lambda_T = std::exp(x);
    s.c_T_sq = 1 / (1 + rho * b / (s.lambda_T * (s.lambda_T + b)));
    s.xi = xi;
    s.band_edge = b;
    return s;
}

struct TpgContinuum {
    double lambda = 0;
    double w = 0;
    double c_lambda_sq = 0;
};

// w = (l - xi)/rho + log(B/l - 1), c^2 = (1/rho)/(pi^2 + w^2) on 0 < l < B.
inline TpgContinuum tpg_continuum(double xi, double r_max, double lambda, double band_edge = 0) {
    require(r_max > 0, "tpg_continuum: r_max must be positive");
    double b = band_edge > 0 ? band_edge : default_band_edge(r_max);
    require(lambda > 0 && lambda < b, "tpg_continuum: lambda must lie inside the band (0, B)");
    TpgContinuum c;
    c.lambda = lambda;
    c.w = (lambda - xi) / rho + std::log(b / lambda - 1);
    c.c_lambda_sq = (1 / rho) / (pi * pi + c.w * c.w);
    return c;
}

namespace detail {

// Breakpoints for (0, B): geometric toward both edges, where c^2 vanishes
// only logarithmically, plus the resonance.
inline std::vector<double> band_points(double xi, double b) {
    std::vector<double> pts{0.0, b};
    double h = std::min(0.25 * b, 1.0);
    for (double g = h; g > 1e-300 && g > 1e-18 * h; g *= 0.25) {
        pts.push_back(g);
        pts.push_back(b - g);
    }
    if (xi > 0 && xi < b) pts.push_back(xi);
    return pts;
}

}  // namespace detail

// int_0^B c^2 e^{-i l tau} dl
inline quad::Estimate continuum_fourier(double xi, double tau, double band_edge) {
    auto c2 = [&](double l) {
        if (!(l > 0 && l < band_edge)) return 0.0;
        double w = (l - xi) / rho + std::log(band_edge / l - 1);
        return (1 / rho) / (pi * pi + w * w);
    };
    std::vector<double> pts = detail::band_points(xi, band_edge);
    // Drop breakpoints that round onto the band edge.
    std::erase_if(pts, [&](double x) { return x < 0 || x > band_edge; });
    return quad::panels([&](double l) { return cplx(c2(l)) * std::polar(1.0, -l * tau); }, pts,
                        fanopdc::detail::panel_length(tau));
}

// c_T^2 + int c^2 e^{-i (l + l_T) tau} dl
inline cplx tpg_pump_amplitude(const TpgBoundState& s, double tau) {
    cplx band = quad::checked(continuum_fourier(s.xi, tau, s.band_edge), amplitude_tol, "tpg_pump_population");
    return s.c_T_sq + band * std::polar(1.0, -s.lambda_T * tau);
}

inline std::vector<double> tpg_pump_population(double xi, double r_max, const std::vector<double>& tau_grid,
                                               double band_edge = 0) {
    TpgBoundState s = tpg_bound_state(xi, r_max, band_edge);
    std::vector<double> out;
    out.reserve(tau_grid.size());
    for (double t : tau_grid) out.push_back(std::norm(tpg_pump_amplitude(s, t)));
    return out;
}

// Momentum cutoff P_max = sqrt(2) r_max/eps in units of 2 pi/L.
inline double p_max(const TpgParams& p) { return std::numbers::sqrt2 * p.r_max / p.epsilon; }

// Coupling of |c_0> to a normalized triplet, in units of eps: 1 for distinct
// momenta, 1/sqrt(2) with one repeated pair, 1/sqrt(6) for p1 = p2 = p3.
inline double triplet_coupling(int p1, int p2) {
    int p3 = -p1 - p2;
    if (p1 == p2 && p2 == p3) return 1 / std::sqrt(6.0);
    if (p1 == p2 || p2 == p3) return 1 / std::sqrt(2.0);
    return 1;
}

struct Triplet3 {
    int p1 = 0, p2 = 0;
};

// Triplets p3 = -p1 - p2 <= p2 <= p1 with p1^2 + p2^2 + p3^2 <= P_max^2.
inline std::vector<Triplet3> enumerate_triplets(const TpgParams& p) {
    p.validate();
    double pm = p_max(p);
    require(pm >= 1, "build_tpg_hamiltonian: cutoff r_max sqrt(2)/eps is below one momentum step");
    // Squared norms are integers; the slack absorbs rounding in P_max^2.
    double lim = pm * pm * (1 + 1e-12);
    std::vector<Triplet3> out;
    for (int p1 = 0; p1 <= static_cast<int>(pm); ++p1)
        for (int p2 = -(p1 / 2); p2 <= p1; ++p2) {
            long p3 = -static_cast<long>(p1) - p2;
            if (p3 > p2) continue;
            double norm = static_cast<double>(p1) * p1 + static_cast<double>(p2) * p2 + static_cast<double>(p3 * p3);
            if (norm <= lim) out.push_back({p1, p2});
        }
    return out;
}

// Row 0 is the pump; rows 1.. follow enumerate_triplets.
inline DiscreteHamiltonian build_tpg_hamiltonian(const TpgParams& p) {
    std::vector<Triplet3> trip = enumerate_triplets(p);
    std::size_t dim = trip.size() + 1;
    std::vector<Triplet> upper;
    upper.reserve(2 * dim);
    upper.emplace_back(0, 0, p.xi);
    DiscreteHamiltonian h;
    h.labels.reserve(dim);
    h.labels.push_back("c0");
    double e2 = p.epsilon * p.epsilon;
    for (std::size_t k = 0; k < trip.size(); ++k) {
        auto i = static_cast<std::ptrdiff_t>(k + 1);
        double a = trip[k].p1, b = trip[k].p2;
        upper.emplace_back(i, i, e2 * (a * a + b * b + a * b));
        upper.emplace_back(0, i, p.epsilon * triplet_coupling(trip[k].p1, trip[k].p2));
        h.labels.push_back("a_p1=" + std::to_string(trip[k].p1) + ",p2=" + std::to_string(trip[k].p2));
    }
    h.matrix = symmetric_from_upper(dim, upper);
    return h;
}

inline std::vector<double> discrete_pump_population(const DiscreteHamiltonian& h, const std::vector<double>& tau_grid) {
    EvolveOptions o;
    o.keep_states = false;
    std::vector<double> out(tau_grid.size());
    o.observer = [&](std::size_t k, const cvec& psi) { out[k] = std::norm(psi[0]); };
    evolve(h, basis_vector(h.dim(), 0), tau_grid, o);
    return out;
}

}  // namespace fanopdc::tpg
