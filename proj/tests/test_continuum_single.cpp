#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fanopdc/continuum_single.hpp"
#include "fanopdc/discrete_single.hpp"

using namespace fanopdc;
using namespace fanopdc::continuum;
using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;

namespace {

// Independent root solve of pi/(2 sqrt l) - l = xi by plain bisection.
double meson_oracle(double xi) {
    double lo = 1e-12, hi = std::abs(xi) + 10;
    for (int k = 0; k < 200; ++k) {
        double m = 0.5 * (lo + hi);
        (kPi / (2 * std::sqrt(m)) - m - xi > 0 ? lo : hi) = m;
    }
    return 0.5 * (lo + hi);
}

// int_0^inf c_l^2 dl by composite Simpson in u = sqrt(l) on [0, U], plus the
// leading tail int_{U^2}^inf l^{-5/2}/2 dl = U^{-3}/3.
double continuum_mass_oracle(double xi) {
    const double U = 200;
    const int n = 400000;
    auto f = [xi](double u) {
        double w = 2 * u * (u * u - xi);
        return 2 * u * (2 * u / (w * w + kPi * kPi));
    };
    double h = U / n, s = f(0) + f(U);
    for (int k = 1; k < n; ++k) s += (k % 2 ? 4 : 2) * f(k * h);
    return s * h / 3 + 1 / (3 * U * U * U);
}

std::vector<double> grid(double t0, double t1, int n) {
    std::vector<double> g;
    for (int k = 0; k <= n; ++k) g.push_back(t0 + (t1 - t0) * k / n);
    return g;
}

// Full width at half maximum of c_l^2 by dense scan.
double fwhm(double xi) {
    double peak = 0, lp = 0;
    for (double l = 1e-4; l < 4 * xi + 20; l += 1e-4) {
        double v = continuum_weight(xi, l).c_lambda_sq;
        if (v > peak) peak = v, lp = l;
    }
    double a = lp, b = lp;
    while (continuum_weight(xi, a).c_lambda_sq > peak / 2) a -= 1e-4;
    while (continuum_weight(xi, b).c_lambda_sq > peak / 2) b += 1e-4;
    return b - a;
}

}  // namespace

TEST(Meson, ClosedFormAtZeroDetuning) {
    MesonState m = meson_solution(0);
    EXPECT_NEAR(m.lambda_M, std::pow(kPi / 2, 2.0 / 3), 1e-10);
    EXPECT_NEAR(m.c_M_sq, 2.0 / 3, 1e-10);
}

TEST(Meson, MatchesBisectionOracle) {
    for (double xi : {-20.0, -8.0, -4.0, -1.0, 0.5, 2.0, 4.0, 9.0, 20.0}) {
        MesonState m = meson_solution(xi);
        EXPECT_NEAR(m.lambda_M, meson_oracle(xi), 1e-10 * std::max(1.0, m.lambda_M)) << xi;
        EXPECT_LT(std::abs(meson_residual(xi, m.lambda_M)), 1e-12) << xi;
        EXPECT_DOUBLE_EQ(m.c_M_sq, 1 / (1 + kPi / (4 * std::pow(m.lambda_M, 1.5))));
    }
    EXPECT_NEAR(meson_solution(-4).lambda_M, 4.72, 0.01);
}

TEST(Meson, LargeDetuningAsymptote) {
    double xi = 20;
    double exact = meson_solution(xi).c_M_sq;
    EXPECT_LT(std::abs(kPi * kPi / (2 * xi * xi * xi) / exact - 1), 0.05);
}

TEST(ContinuumWeight, ClosedForms) {
    EXPECT_EQ(continuum_weight(2, 0).c_lambda_sq, 0);
    ContinuumWeight c = continuum_weight(2, 2);
    EXPECT_EQ(c.w, 0);
    EXPECT_NEAR(c.c_lambda_sq, 2 * std::sqrt(2.0) / (kPi * kPi), 1e-15);
    EXPECT_NEAR(c.delta_phase, -kPi / 2, 1e-15);
    EXPECT_THROW(continuum_weight(2, -1), ValidationError);
}

TEST(ContinuumWeight, PhaseIsContinuousThroughResonance) {
    double prev = continuum_weight(3, 0.01).delta_phase;
    for (double l = 0.02; l < 10; l += 0.01) {
        double d = continuum_weight(3, l).delta_phase;
        EXPECT_LT(std::abs(d - prev), 0.2);
        EXPECT_LE(d, 0);
        EXPECT_GE(d, -kPi);
        prev = d;
    }
}

TEST(ContinuumWeight, TailDecay) {
    double a = continuum_weight(1, 1e4).c_lambda_sq, b = continuum_weight(1, 4e4).c_lambda_sq;
    EXPECT_NEAR(std::log(a / b) / std::log(4.0), 2.5, 0.01);
}

TEST(ContinuumWeight, LinewidthNarrowsLikeInverseRootXi) {
    // FWHM -> pi/sqrt(xi) once the resonance sits well inside the band.
    double prev = 1e9;
    for (double xi : {4.0, 16.0, 64.0}) {
        double w = fwhm(xi);
        EXPECT_LT(w, prev);
        prev = w;
        if (xi >= 16) EXPECT_NEAR(w * std::sqrt(xi) / kPi, 1, 0.05) << xi;
    }
}

TEST(Completeness, SumRuleMatchesOracle) {
    for (double xi = -6; xi <= 6; xi += 1) {
        double mass = continuum_fourier(xi, 0).value.real();
        EXPECT_NEAR(mass, continuum_mass_oracle(xi), 1e-9) << xi;
        EXPECT_NEAR(meson_solution(xi).c_M_sq + mass, 1, 1e-8) << xi;
    }
    EXPECT_NEAR(continuum_fourier(0, 0).value.real(), 1.0 / 3, 1e-8);
    EXPECT_NEAR(std::abs(pump_amplitude(2.5, 0) - 1.0), 0, 1e-8);
}

TEST(PumpAmplitude, BoundedByOne) {
    for (double xi : {-6.0, -2.0, 0.0, 1.9, 5.0})
        for (double t : grid(0, 8, 32)) EXPECT_LE(std::abs(pump_amplitude(xi, t)), 1 + 1e-9);
}

// Mean spacing of the N_b maxima on tau in [1, 12].
double oscillation_period(double xi) {
    auto g = grid(1, 12, 4000);
    auto n = pump_population_series(xi, g);
    std::vector<double> peaks;
    for (std::size_t k = 1; k + 1 < n.size(); ++k)
        if (n[k] > n[k - 1] && n[k] >= n[k + 1]) peaks.push_back(g[k]);
    if (peaks.size() < 4) return NAN;
    return (peaks.back() - peaks.front()) / double(peaks.size() - 1);
}

TEST(PumpAmplitude, NegativeDetuningOscillatesAtBoundEnergy) {
    // The beat is between the bound state at -lambda_M and the band edge, so
    // the period is 2 pi/lambda_M; 2 pi/|xi| is its large-|xi| limit.
    for (double xi : {-4.0, -8.0, -16.0}) {
        double period = oscillation_period(xi);
        EXPECT_NEAR(period * meson_solution(xi).lambda_M / (2 * kPi), 1, 0.03) << xi;
    }
    EXPECT_NEAR(oscillation_period(-16) * 16 / (2 * kPi), 1, 0.03);
    EXPECT_GT(std::abs(oscillation_period(-4) * 4 / (2 * kPi) - 1), std::abs(oscillation_period(-16) * 16 / (2 * kPi) - 1));
}

TEST(PumpAmplitude, LongTimeLimitIsBoundWeightSquared) {
    // The amplitude tends to c_M^2, so the population tends to c_M^4.
    double c2 = meson_solution(4).c_M_sq;
    EXPECT_NEAR(std::norm(pump_amplitude(4, 50)) / (c2 * c2), 1, 0.02);
}

TEST(PumpAmplitude, DiscreteSpectralSumWithCutoffCorrection) {
    // Oracle: eigen-decomposition sum of the discrete model at fixed band edge
    // s_max = 20, with xi lowered by the 1/s_max self-energy of the missing
    // tail, extrapolated linearly in eps from 1/30 and 1/60.
    double xi = 1, s_max = 20;
    std::vector<double> taus{0.5, 1.5, 3.0};
    auto lab = [&](double eps) {
        auto h = discrete::build_single_photon_hamiltonian(xi - 1 / s_max, eps,
                                                           static_cast<std::size_t>(std::lround(s_max / eps)));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.dense());
        std::vector<cplx> out;
        for (double t : taus) {
            cplx a = 0;
            for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
                a += es.eigenvectors()(0, k) * es.eigenvectors()(0, k) * std::polar(1.0, -es.eigenvalues()[k] * t);
            out.push_back(a);
        }
        return out;
    };
    auto a30 = lab(1.0 / 30), a60 = lab(1.0 / 60);
    MesonState m = meson_solution(xi);
    for (std::size_t k = 0; k < taus.size(); ++k) {
        cplx rich = 2.0 * a60[k] - a30[k];
        cplx exact = pump_amplitude(m, taus[k]) * std::polar(1.0, m.lambda_M * taus[k]);
        EXPECT_LT(std::abs(rich - exact), 1e-3) << taus[k];
    }
}

TEST(Asymptotics, DissipativeDecayTime) {
    EXPECT_NEAR(asymptotic_population(9, 3 / kPi, Regime::dissipative), std::exp(-1.0), 1e-15);
    double worst = 0;
    for (double t : grid(0.5, 4, 35))
        worst = std::max(worst, std::abs(asymptotic_population(16, t, Regime::dissipative) - std::norm(pump_amplitude(16, t))));
    EXPECT_LT(worst, 0.03);
}

TEST(Asymptotics, RegimePreconditions) {
    EXPECT_THROW(asymptotic_population(-1, 1, Regime::dissipative), ValidationError);
    EXPECT_THROW(asymptotic_population(1, 1, Regime::dispersive), ValidationError);
    EXPECT_THROW(asymptotic_population(-8, 0, Regime::dispersive), ValidationError);
}

// First maximum of N_b after tau = 0.2 at detuning xi.
std::pair<double, double> first_revival(double xi) {
    MesonState m = meson_solution(xi);
    double prev = 1, cur = std::norm(pump_amplitude(m, 0.2));
    for (double t = 0.2 + 1e-4;; t += 1e-4) {
        double next = std::norm(pump_amplitude(m, t));
        if (cur > prev && cur >= next) return {t - 1e-4, cur};
        prev = cur;
        cur = next;
    }
}

TEST(Asymptotics, FirstRevivalPeakAtLargeNegativeDetuning) {
    // Height is accurate at xi = -8; the position -7 pi/(4 xi) is an
    // asymptotic estimate that tightens as |xi| grows.
    auto [t8, n8] = first_revival(-8);
    EXPECT_NEAR(n8, 1 - (kPi / 2 - 2 / std::sqrt(7.0)) * std::pow(8.0, -1.5), 0.005);
    EXPECT_NEAR(t8 / (7 * kPi / 32), 1, 0.1);
    auto [t16, n16] = first_revival(-16);
    EXPECT_NEAR(n16, 1 - (kPi / 2 - 2 / std::sqrt(7.0)) * std::pow(16.0, -1.5), 0.001);
    EXPECT_NEAR(t16 / (7 * kPi / 64), 1, 0.03);
}

TEST(Depletion, FiniteTimeZero) {
    DepletionPoint d = find_depletion_point();
    EXPECT_NEAR(d.xi_f, 1.90, 0.02);
    EXPECT_NEAR(d.tau_f, 1.32, 0.02);
    EXPECT_LT(d.population, 1e-6);
    EXPECT_LT(std::abs(pump_amplitude(d.xi_f, d.tau_f)), 0.01);
}
