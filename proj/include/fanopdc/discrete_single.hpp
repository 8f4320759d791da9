#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "fanopdc/error.hpp"
#include "fanopdc/hamiltonian.hpp"
#include "fanopdc/propagate.hpp"

// Finite-window single-photon PDC: the dc pump state |b0> hopping onto
// signal pairs |a_p> (p = 0..p_max) with energies eps^2 p^2.
namespace fanopdc::discrete {

struct SingleOptions {
    // false: uniform coupling eps^{1/2} to every pair, as in the displayed
    // matrix. true: the degenerate pair a_0^2 couples with eps^{1/2}/sqrt(2),
    // as the bosonic operator algebra gives.
    bool exact_degenerate_pair = false;
};

// Truncating the band at s_max = eps p_max shifts the pump self-energy by
// about +1/s_max, so the population error decays only like 1/p_max. Require
// s_max >= 10 sqrt(max(|xi|, 16)), i.e. eps^2 p_max^2 >= 100 max(|xi|, 16).
inline std::size_t default_p_max(double xi, double epsilon) {
    require(epsilon > 0, "default_p_max: epsilon must be positive");
    double s_max = 10 * std::sqrt(std::max(std::abs(xi), 16.0));
    return static_cast<std::size_t>(std::ceil(s_max / epsilon - 1e-9));
}

// Smallest admissible band edge eps^2 p_max^2.
inline double minimum_band_edge(double xi) { return std::max(4 * std::abs(xi), 16.0); }

inline DiscreteHamiltonian build_single_photon_hamiltonian(double xi, double epsilon, std::size_t p_max,
                                                           const SingleOptions& opts = {}) {
    require(epsilon > 0, "build_single_photon_hamiltonian: epsilon must be positive");
    require(p_max >= 1, "build_single_photon_hamiltonian: p_max must be >= 1");
    double edge = epsilon * epsilon * static_cast<double>(p_max) * static_cast<double>(p_max);
    require(edge >= minimum_band_edge(xi),
            "build_single_photon_hamiltonian: band edge eps^2 p_max^2 = " + std::to_string(edge) +
                " is below max(4|xi|, 16); the cutoff cannot contain the resonance");

    std::size_t dim = p_max + 2;
    double g = std::sqrt(epsilon);
    std::vector<Triplet> upper;
    upper.reserve(2 * dim);
    upper.emplace_back(0, 0, xi);
    DiscreteHamiltonian h;
    h.labels.reserve(dim);
    h.labels.push_back("b0");
    for (std::size_t p = 0; p <= p_max; ++p) {
        auto i = static_cast<std::ptrdiff_t>(p + 1);
        double pd = static_cast<double>(p);
        if (p > 0) upper.emplace_back(i, i, epsilon * epsilon * pd * pd);
        upper.emplace_back(0, i, (p == 0 && opts.exact_degenerate_pair) ? g / std::sqrt(2.0) : g);
        h.labels.push_back("a_p=" + std::to_string(p));
    }
    h.matrix = symmetric_from_upper(dim, upper);
    return h;
}

inline cvec pump_state(const DiscreteHamiltonian& h) { return basis_vector(h.dim(), 0); }

// |<b0|psi(tau)>|^2 on the grid, starting from |b0>.
inline std::vector<double> pump_population(const DiscreteHamiltonian& h, const std::vector<double>& tau_grid) {
    EvolveOptions o;
    o.keep_states = false;
    std::vector<double> out(tau_grid.size());
    o.observer = [&](std::size_t k, const cvec& psi) { out[k] = std::norm(psi[0]); };
    evolve(h, pump_state(h), tau_grid, o);
    return out;
}

}  // namespace fanopdc::discrete
