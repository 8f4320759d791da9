#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "fanopdc/continuum_single.hpp"
#include "fanopdc/discrete_single.hpp"
#include "fanopdc/error.hpp"
#include "fanopdc/hamiltonian.hpp"
#include "fanopdc/propagate.hpp"
#include "fanopdc/quadrature.hpp"
#include "fanopdc/spectral.hpp"

// Two pump modes b_1, b_2 sharing the symmetric signal continuum of a pair of
// linearly coupled waveguides. Energies in units of hbar kappa.
namespace fanopdc::coupled {

using cplx = std::complex<double>;
inline constexpr double pi = std::numbers::pi;

inline constexpr double bic_tol = 1e-9;
inline constexpr double amplitude_tol = 1e-8;

struct CoupledParams {
    double xi1 = 0;
    double xi2 = 0;
    double theta = 0;
    double phi = 0;

    double lambda_star() const { return 0.5 * (xi1 + xi2); }
    double delta_xi() const { return xi2 - xi1; }
    // Initial pump amplitudes (cos theta, e^{i phi} sin theta).
    std::array<cplx, 2> initial() const { return {std::cos(theta), std::polar(std::sin(theta), phi)}; }

    void validate() const {
        require(std::isfinite(xi1) && std::isfinite(xi2), "CoupledParams: detunings must be finite");
        require(theta >= 0 && theta <= pi / 2, "CoupledParams: theta must lie in [0, pi/2]");
        require(phi >= 0 && phi < 2 * pi, "CoupledParams: phi must lie in [0, 2 pi)");
    }
};

// Energy -lambda_B below the band.
struct CoupledBoundState {
    double lambda_B = 0;
    double c1_B = 0;
    double c2_B = 0;
    // (lambda_B + xi1)^2 + (lambda_B + xi2)^2 + pi/(16 lambda_B^{3/2}) (2 lambda_B + xi1 + xi2)^2
    double S_B = 0;
};

struct CoupledContinuum {
    double lambda = 0;
    double w_plus = 0;
    double c1_lambda = 0;
    double c2_lambda = 0;
    double S_lambda = 0;
};

struct BicReport {
    bool exists = false;
    double lambda_star = 0;
    std::array<double, 2> protected_state{0, 0};
};

// pi (xi1 + xi2)/(8 sqrt(l)) + pi sqrt(l)/4 - (l + xi1)(l + xi2)
inline double secular_residual(double xi1, double xi2, double lambda_B) {
    double r = std::sqrt(lambda_B);
    return pi * (xi1 + xi2) / (8 * r) + pi * r / 4 - (lambda_B + xi1) * (lambda_B + xi2);
}

// Left side of the bound-state normalization condition.
inline double bound_normalization(double c1, double c2, double lambda_B) {
    return c1 * c1 + c2 * c2 + pi / (16 * lambda_B * std::sqrt(lambda_B)) * (c1 + c2) * (c1 + c2);
}

inline BicReport detect_bic(double xi1, double xi2) {
    BicReport r;
    r.lambda_star = 0.5 * (xi1 + xi2);
    r.exists = std::abs(xi1 - xi2) < bic_tol && r.lambda_star >= 0;
    if (r.exists) r.protected_state = {1 / std::sqrt(2.0), -1 / std::sqrt(2.0)};
    return r;
}

namespace detail {

// With u = sqrt(l) the secular equation times -u is the monic quintic
// u^5 + (xi1 + xi2) u^3 - (pi/4) u^2 + xi1 xi2 u - pi (xi1 + xi2)/8.
inline std::vector<double> secular_roots_u(double xi1, double xi2) {
    const double sum = xi1 + xi2;
    const std::array<double, 6> coeff{-pi * sum / 8, xi1 * xi2, -pi / 4, sum, 0, 1};
    Eigen::Matrix<double, 5, 5> companion = Eigen::Matrix<double, 5, 5>::Zero();
    for (int i = 1; i < 5; ++i) companion(i, i - 1) = 1;
    for (int i = 0; i < 5; ++i) companion(i, 4) = -coeff[static_cast<std::size_t>(i)];
    Eigen::EigenSolver<Eigen::Matrix<double, 5, 5>> es(companion, false);
    auto poly = [&](double u) {
        double p = 0, dp = 0;
        for (int k = 5; k >= 0; --k) {
            dp = dp * u + p;
            p = p * u + coeff[static_cast<std::size_t>(k)];
        }
        return std::pair{p, dp};
    };
    std::vector<double> roots;
    for (int i = 0; i < 5; ++i) {
        std::complex<double> z = es.eigenvalues()[i];
        double scale = 1 + std::abs(z);
        if (std::abs(z.imag()) > 1e-6 * scale || z.real() <= 1e-8 * scale) continue;
        double u = z.real();
        for (int it = 0; it < 50; ++it) {
            auto [p, dp] = poly(u);
            if (dp == 0) break;
            double step = p / dp;
            u -= step;
            if (std::abs(step) <= 4e-16 * u) break;
        }
        if (u <= 0) continue;
        bool dup = std::any_of(roots.begin(), roots.end(), [&](double r) { return std::abs(r - u) <= 1e-9 * scale; });
        if (!dup) roots.push_back(u);
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

// c_i c_j on lambda >= 0 in a form regular at lambda*:
// c1 c1 = d2^2 n/D, c2 c2 = d1^2 n/D, c1 c2 = d1 d2 n/D with d_i = l - xi_i,
// d = 2 l - xi1 - xi2, n = 8 sqrt(l), D = pi^2 d^2 + 64 l d1^2 d2^2.
// The offsets are passed separately so they keep full precision near lambda*.
template <class T>
std::array<T, 3> weight_products(T l, T d1, T d2, T d) {
    T n = 8.0 * std::sqrt(l);
    T den = pi * pi * d * d + 64.0 * l * d1 * d1 * d2 * d2;
    return {d2 * d2 * n / den, d1 * d1 * n / den, d1 * d2 * n / den};
}

// Half-width of the Lorentzian that the continuum weights form around
// lambda* > 0 when xi1 != xi2.
inline double resonance_half_width(double xi1, double xi2) {
    double ls = 0.5 * (xi1 + xi2), dx = xi2 - xi1;
    return std::sqrt(ls) * dx * dx / pi;
}

inline std::vector<double> features(double xi1, double xi2) {
    std::vector<double> f;
    for (double xi : {xi1, xi2}) {
        auto r = continuum::resonance_features(xi);
        f.insert(f.end(), r.begin(), r.end());
    }
    double ls = 0.5 * (xi1 + xi2);
    if (ls > 0) f.push_back(ls);
    f.erase(std::remove_if(f.begin(), f.end(), [](double x) { return !(x > 0); }), f.end());
    return f;
}

// int_0^inf k(l, l - xi1, l - xi2, 2 l - xi1 - xi2) e^{-i l tau} dl. Around a
// sharp resonance at lambda* the integral runs over delta = l - lambda* on
// panels growing geometrically away from the peak.
template <class K>
quad::Estimate spectral_integral(double xi1, double xi2, K&& k, double tau) {
    const double ls = 0.5 * (xi1 + xi2);
    const double dx = xi2 - xi1;
    auto plain = [&](auto l) { return k(l, l - xi1, l - xi2, 2.0 * l - (xi1 + xi2)); };
    std::vector<double> feats = features(xi1, xi2);
    if (!(ls > 0) || dx == 0) return fanopdc::detail::spectral_fourier(plain, tau, feats);

    const double half = std::min(0.5 * ls, 1.0);
    const double lo = ls - half, hi = ls + half;
    const double head = std::min(fanopdc::detail::head_end(feats), lo);
    const double max_len = fanopdc::detail::panel_length(tau);

    quad::Estimate total = fanopdc::detail::fourier_head(plain, tau, head);
    std::vector<double> pts{head, lo};
    for (double x : feats)
        if (x > head && x < lo) pts.push_back(x);
    total += quad::panels([&](double l) { return cplx(plain(l)) * std::polar(1.0, -l * tau); }, pts, max_len);

    std::vector<double> dpts{-half, 0.0, half};
    for (double x : {0.5 * dx, -0.5 * dx})
        if (std::abs(x) < half) dpts.push_back(x);
    for (double g = std::max(resonance_half_width(xi1, xi2), 1e-300); g < half; g *= 4) {
        dpts.push_back(g);
        dpts.push_back(-g);
    }
    const cplx carrier = std::polar(1.0, -ls * tau);
    total += quad::panels(
        [&](double dl) {
            double l = ls + dl;
            return cplx(k(l, dl + 0.5 * dx, dl - 0.5 * dx, 2.0 * dl)) * carrier * std::polar(1.0, -dl * tau);
        },
        dpts, max_len);

    total += fanopdc::detail::fourier_from(plain, tau, hi, feats);
    return total;
}

}  // namespace detail

// All positive roots of the secular equation. Their count is 2 for
// xi1 + xi2 < 0 and 1 otherwise.
inline std::vector<CoupledBoundState> bound_states(double xi1, double xi2) {
    require(std::isfinite(xi1) && std::isfinite(xi2), "bound_states: detunings must be finite");
    std::vector<double> us = detail::secular_roots_u(xi1, xi2);
    std::size_t expected = xi1 + xi2 < 0 ? 2 : 1;
    if (us.size() != expected)
        throw NumericalError("bound_states: found " + std::to_string(us.size()) + " roots, expected " +
                                 std::to_string(expected),
                             0);
    std::vector<CoupledBoundState> out;
    for (double u : us) {
        double l = u * u;
        double a = pi / (8 * u);
        // Null vectors of the 2x2 secular matrix; the longest one is the best
        // conditioned (the first degenerates when xi1 = xi2 = -lambda_B).
        std::array<std::array<double, 2>, 3> cand{{{l + xi2, l + xi1}, {a, xi1 + l - a}, {xi2 + l - a, a}}};
        auto best = *std::max_element(cand.begin(), cand.end(), [](const auto& x, const auto& y) {
            return std::hypot(x[0], x[1]) < std::hypot(y[0], y[1]);
        });
        double norm = std::sqrt(bound_normalization(best[0], best[1], l));
        CoupledBoundState b;
        b.lambda_B = l;
        b.c1_B = best[0] / norm;
        b.c2_B = best[1] / norm;
        b.S_B = (l + xi1) * (l + xi1) + (l + xi2) * (l + xi2) +
                pi / (16 * l * u) * (2 * l + xi1 + xi2) * (2 * l + xi1 + xi2);
        out.push_back(b);
    }
    return out;
}

inline CoupledContinuum coupled_continuum(double xi1, double xi2, double lambda) {
    require(lambda >= 0, "coupled_continuum: lambda must be >= 0");
    double d = 2 * lambda - (xi1 + xi2);
    require(d != 0, "coupled_continuum: lambda = (xi1 + xi2)/2 is the continuum hole");
    CoupledContinuum c;
    c.lambda = lambda;
    double n = 8 * std::sqrt(lambda);
    c.w_plus = n * (lambda - xi1) * (lambda - xi2) / d;
    c.S_lambda = (pi * pi + c.w_plus * c.w_plus) / n * d * d;
    c.c1_lambda = (lambda - xi2) / std::sqrt(c.S_lambda);
    c.c2_lambda = (lambda - xi1) / std::sqrt(c.S_lambda);
    return c;
}

struct ExcitationSpectrum {
    std::vector<double> lambda_grid;
    // |F_lambda|^2 on the grid
    std::vector<double> values;
    // |<bound_k|psi(0)>|^2, bound states ordered by lambda_B
    std::vector<double> bound_weights;
    // |<BIC|psi(0)>|^2, zero when there is no BIC
    double bic_weight = 0;
};

// |cos(theta) c1 + e^{i phi} sin(theta) c2|^2 for real c1, c2.
inline double projection_sq(const CoupledParams& p, double c1, double c2) {
    auto in = p.initial();
    return std::norm(in[0] * c1 + in[1] * c2);
}

inline ExcitationSpectrum excitation_spectrum(const CoupledParams& p, const std::vector<double>& lambda_grid) {
    p.validate();
    ExcitationSpectrum s;
    s.lambda_grid = lambda_grid;
    s.values.reserve(lambda_grid.size());
    for (double l : lambda_grid) {
        CoupledContinuum c = coupled_continuum(p.xi1, p.xi2, l);
        s.values.push_back(projection_sq(p, c.c1_lambda, c.c2_lambda));
    }
    for (const auto& b : bound_states(p.xi1, p.xi2)) s.bound_weights.push_back(projection_sq(p, b.c1_B, b.c2_B));
    BicReport bic = detect_bic(p.xi1, p.xi2);
    if (bic.exists) s.bic_weight = projection_sq(p, bic.protected_state[0], bic.protected_state[1]);
    return s;
}

// Evenly spaced grid on [lo, hi] with points inside a symmetric window of
// half-width `gap` around lambda* dropped.
inline std::vector<double> spectrum_grid(const CoupledParams& p, double lo, double hi, std::size_t n,
                                         double gap = 1e-9) {
    require(lo >= 0 && hi > lo && n >= 2, "spectrum_grid: need 0 <= lo < hi and n >= 2");
    std::vector<double> g;
    double ls = p.lambda_star();
    for (std::size_t k = 0; k < n; ++k) {
        double l = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
        if (std::abs(l - ls) > gap) g.push_back(l);
    }
    return g;
}

// (C_1, C_2): pump amplitudes of the evolved state.
inline std::array<cplx, 2> pump_amplitudes(const CoupledParams& p, double tau) {
    p.validate();
    auto in = p.initial();
    std::array<cplx, 2> c{0, 0};
    for (const auto& b : bound_states(p.xi1, p.xi2)) {
        cplx proj = (in[0] * b.c1_B + in[1] * b.c2_B) * std::polar(1.0, b.lambda_B * tau);
        c[0] += b.c1_B * proj;
        c[1] += b.c2_B * proj;
    }
    double xi1 = p.xi1, xi2 = p.xi2;
    BicReport bic = detect_bic(xi1, xi2);
    if (bic.exists) {
        const auto& v = bic.protected_state;
        cplx proj = (in[0] * v[0] + in[1] * v[1]) * std::polar(1.0, -bic.lambda_star * tau);
        c[0] += v[0] * proj;
        c[1] += v[1] * proj;
        // Within bic_tol the resonance has collapsed into the BIC itself.
        xi1 = xi2 = bic.lambda_star;
    }
    quad::Estimate ints[3];
    for (int k = 0; k < 3; ++k)
        ints[k] = detail::spectral_integral(
            xi1, xi2, [k](auto l, auto d1, auto d2, auto d) { return detail::weight_products(l, d1, d2, d)[k]; },
            tau);
    cplx i11 = quad::checked(ints[0], amplitude_tol, "coupled_pump_population");
    cplx i22 = quad::checked(ints[1], amplitude_tol, "coupled_pump_population");
    cplx i12 = quad::checked(ints[2], amplitude_tol, "coupled_pump_population");
    c[0] += in[0] * i11 + in[1] * i12;
    c[1] += in[0] * i12 + in[1] * i22;
    return c;
}

// N_+ = |C_1|^2 + |C_2|^2
inline std::vector<double> coupled_pump_population(const CoupledParams& p, const std::vector<double>& tau_grid) {
    std::vector<double> out;
    out.reserve(tau_grid.size());
    for (double t : tau_grid) {
        auto c = pump_amplitudes(p, t);
        out.push_back(std::norm(c[0]) + std::norm(c[1]));
    }
    return out;
}

// Rows b1, b2 then a_p for p = 0..p_max; each pump couples to every pair with eps^{1/2}/2.
inline DiscreteHamiltonian build_coupled_discrete(double xi1, double xi2, double epsilon, std::size_t p_max) {
    require(epsilon > 0, "build_coupled_discrete: epsilon must be positive");
    require(p_max >= 1, "build_coupled_discrete: p_max must be >= 1");
    double edge = epsilon * epsilon * static_cast<double>(p_max) * static_cast<double>(p_max);
    double xi_max = std::max(std::abs(xi1), std::abs(xi2));
    require(edge >= discrete::minimum_band_edge(xi_max),
            "build_coupled_discrete: band edge eps^2 p_max^2 = " + std::to_string(edge) +
                " is below max(4 max|xi_i|, 16)");
    std::size_t dim = p_max + 3;
    double g = 0.5 * std::sqrt(epsilon);
    std::vector<Triplet> upper;
    upper.reserve(3 * dim);
    upper.emplace_back(0, 0, xi1);
    upper.emplace_back(1, 1, xi2);
    DiscreteHamiltonian h;
    h.labels = {"b1", "b2"};
    for (std::size_t p = 0; p <= p_max; ++p) {
        auto i = static_cast<std::ptrdiff_t>(p + 2);
        double pd = static_cast<double>(p);
        if (p > 0) upper.emplace_back(i, i, epsilon * epsilon * pd * pd);
        upper.emplace_back(0, i, g);
        upper.emplace_back(1, i, g);
        h.labels.push_back("a_p=" + std::to_string(p));
    }
    h.matrix = symmetric_from_upper(dim, upper);
    return h;
}

inline cvec initial_state(const DiscreteHamiltonian& h, const CoupledParams& p) {
    p.validate();
    cvec v = cvec::Zero(static_cast<Eigen::Index>(h.dim()));
    auto in = p.initial();
    v[0] = in[0];
    v[1] = in[1];
    return v;
}

// |psi_b1|^2 + |psi_b2|^2 on the grid.
inline std::vector<double> discrete_pump_population(const DiscreteHamiltonian& h, const CoupledParams& p,
                                                    const std::vector<double>& tau_grid) {
    EvolveOptions o;
    o.keep_states = false;
    std::vector<double> out(tau_grid.size());
    o.observer = [&](std::size_t k, const cvec& psi) { out[k] = std::norm(psi[0]) + std::norm(psi[1]); };
    evolve(h, initial_state(h, p), tau_grid, o);
    return out;
}

}  // namespace fanopdc::coupled
