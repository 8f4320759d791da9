#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "fanopdc/error.hpp"
#include "fanopdc/hamiltonian.hpp"

namespace fanopdc {

struct EvolutionResult {
    std::vector<double> tau_grid;
    // amplitudes[k] is the state at tau_grid[k]; empty unless retained.
    std::vector<cvec> amplitudes;
    // max | ||psi|| - 1 | over the grid
    double norm_error = 0;
};

// Called with (grid index, state) at each grid time.
using Observer = std::function<void(std::size_t, const cvec&)>;

struct EvolveOptions {
    bool keep_states = true;
    Observer observer;
    // Krylov only: subspace size, per-step error target, and whether new
    // Lanczos vectors are reorthogonalized against the whole basis
    // (auto: when dim is at most reorth_dim_limit).
    int krylov_dim = 30;
    double step_tol = 1e-9;
    enum class Reorth { never, always, automatic } reorth = Reorth::automatic;
    std::size_t reorth_dim_limit = 50000;
    // Largest dimension solved by a full eigendecomposition in evolve().
    std::size_t dense_limit = 5000;
};

namespace detail {

inline void check_inputs(std::size_t dim, const cvec& initial, const std::vector<double>& tau_grid) {
    require(static_cast<std::size_t>(initial.size()) == dim,
            "evolve: initial vector has size " + std::to_string(initial.size()) + ", Hamiltonian has dim " +
                std::to_string(dim));
    require(std::abs(initial.norm() - 1) < 1e-12, "evolve: initial vector must be normalized");
    require(std::is_sorted(tau_grid.begin(), tau_grid.end()), "evolve: tau grid must be ascending");
}

inline void record(EvolutionResult& r, const EvolveOptions& o, std::size_t k, const cvec& psi) {
    r.norm_error = std::max(r.norm_error, std::abs(psi.norm() - 1));
    if (o.observer) o.observer(k, psi);
    if (o.keep_states) r.amplitudes.push_back(psi);
}

}  // namespace detail

// exp(-i H tau) initial through a full Hermitian eigendecomposition.
inline EvolutionResult evolve_dense(const Eigen::MatrixXd& h, const cvec& initial, const std::vector<double>& tau_grid,
                                    const EvolveOptions& opts = {}) {
    detail::check_inputs(static_cast<std::size_t>(h.rows()), initial, tau_grid);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    if (es.info() != Eigen::Success) throw NumericalError("evolve_dense: eigendecomposition failed", 0);
    const Eigen::MatrixXd& v = es.eigenvectors();
    const Eigen::VectorXd& e = es.eigenvalues();
    cvec coeff = v.transpose().cast<std::complex<double>>() * initial;
    EvolutionResult r;
    r.tau_grid = tau_grid;
    for (std::size_t k = 0; k < tau_grid.size(); ++k) {
        cvec psi;
        if (tau_grid[k] == 0) {
            psi = initial;
        } else {
            cvec phased(coeff.size());
            for (Eigen::Index i = 0; i < coeff.size(); ++i)
                phased[i] = coeff[i] * std::polar(1.0, -e[i] * tau_grid[k]);
            psi = v.cast<std::complex<double>>() * phased;
        }
        detail::record(r, opts, k, psi);
    }
    return r;
}

namespace detail {

// One Lanczos exponential step of length at most dt_max. Returns the step taken.
class LanczosStepper {
public:
    LanczosStepper(const SparseMatrix& h, const EvolveOptions& o) : h_(h), opts_(o) {
        auto n = static_cast<std::size_t>(h.rows());
        m_ = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(std::max(2, o.krylov_dim)), n));
        basis_.assign(static_cast<std::size_t>(m_) + 1, cvec());
        reorth_ = o.reorth == EvolveOptions::Reorth::always ||
                  (o.reorth == EvolveOptions::Reorth::automatic && n <= o.reorth_dim_limit);
    }

    double step(cvec& psi, double dt_max) {
        const double beta0 = psi.norm();
        basis_[0] = psi / beta0;
        std::vector<double> alpha, beta;
        int m = m_;
        bool invariant = false;
        cvec w;
        for (int j = 0; j < m; ++j) {
            w = h_ * basis_[static_cast<std::size_t>(j)];
            if (j > 0) w -= beta.back() * basis_[static_cast<std::size_t>(j) - 1];
            double a = basis_[static_cast<std::size_t>(j)].dot(w).real();
            w -= a * basis_[static_cast<std::size_t>(j)];
            if (reorth_) {
                for (int pass = 0; pass < 2; ++pass)
                    for (int i = 0; i <= j; ++i) {
                        const cvec& q = basis_[static_cast<std::size_t>(i)];
                        w -= q.dot(w) * q;
                    }
            }
            alpha.push_back(a);
            double b = w.norm();
            beta.push_back(b);
            if (b <= 1e-13 * (std::abs(a) + 1)) {
                m = j + 1;
                invariant = true;
                break;
            }
            basis_[static_cast<std::size_t>(j) + 1] = w / b;
        }

        Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(alpha.data(), m);
        Eigen::VectorXd sub = Eigen::Map<Eigen::VectorXd>(beta.data(), std::max(m - 1, 0));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
        es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
        const Eigen::MatrixXd& q = es.eigenvectors();
        const Eigen::VectorXd& theta = es.eigenvalues();
        Eigen::VectorXd q0 = q.row(0).transpose();

        auto coeffs = [&](double dt) {
            cvec c(m);
            for (int i = 0; i < m; ++i) c[i] = q0[i] * std::polar(1.0, -theta[i] * dt);
            return cvec(q.cast<std::complex<double>>() * c);
        };
        // Residual estimate beta_m |e_m^T exp(-i T dt) e_1|, scaled by the state norm.
        auto error = [&](const cvec& c) { return invariant ? 0.0 : beta0 * beta.back() * std::abs(c[m - 1]); };

        double dt = dt_max;
        cvec c = coeffs(dt);
        if (error(c) > opts_.step_tol) {
            double lo = 0, hi = dt_max;
            for (int it = 0; it < 60; ++it) {
                double mid = 0.5 * (lo + hi);
                if (error(coeffs(mid)) <= opts_.step_tol)
                    lo = mid;
                else
                    hi = mid;
            }
            dt = lo;
            if (!(dt > 1e-12 * dt_max) || dt == 0)
                throw NumericalError("evolve_sparse: Krylov step could not meet the tolerance", error(coeffs(hi)));
            c = coeffs(dt);
        }
        cvec out = cvec::Zero(psi.size());
        for (int i = 0; i < m; ++i) out += (beta0 * c[i]) * basis_[static_cast<std::size_t>(i)];
        psi = std::move(out);
        return dt;
    }

private:
    const SparseMatrix& h_;
    const EvolveOptions& opts_;
    int m_ = 0;
    bool reorth_ = false;
    std::vector<cvec> basis_;
};

}  // namespace detail

// exp(-i H tau) initial by adaptive short-time Lanczos steps.
inline EvolutionResult evolve_sparse(const SparseMatrix& h, const cvec& initial, const std::vector<double>& tau_grid,
                                     const EvolveOptions& opts = {}) {
    detail::check_inputs(static_cast<std::size_t>(h.rows()), initial, tau_grid);
    EvolutionResult r;
    r.tau_grid = tau_grid;
    detail::LanczosStepper stepper(h, opts);
    cvec psi = initial;
    double t = tau_grid.empty() ? 0.0 : std::min(0.0, tau_grid.front());
    require(t == 0.0, "evolve_sparse: tau grid must start at or after 0");
    for (std::size_t k = 0; k < tau_grid.size(); ++k) {
        while (t < tau_grid[k]) {
            double remaining = tau_grid[k] - t;
            double dt = stepper.step(psi, remaining);
            t = (dt == remaining) ? tau_grid[k] : t + dt;
        }
        detail::record(r, opts, k, psi);
    }
    return r;
}

// Dense eigendecomposition up to opts.dense_limit, Krylov beyond.
inline EvolutionResult evolve(const DiscreteHamiltonian& h, const cvec& initial, const std::vector<double>& tau_grid,
                              const EvolveOptions& opts = {}) {
    if (h.dim() <= opts.dense_limit) return evolve_dense(h.dense(), initial, tau_grid, opts);
    return evolve_sparse(h.matrix, initial, tau_grid, opts);
}

inline cvec basis_vector(std::size_t dim, std::size_t index) {
    require(index < dim, "basis_vector: index out of range");
    cvec v = cvec::Zero(static_cast<Eigen::Index>(dim));
    v[static_cast<Eigen::Index>(index)] = 1;
    return v;
}

}  // namespace fanopdc
