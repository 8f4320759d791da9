#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include <boost/functional/hash.hpp>

#include "fanopdc/error.hpp"
#include "fanopdc/hamiltonian.hpp"
#include "fanopdc/propagate.hpp"

// N-pump-photon PDC on the conserved (N, M) sectors: signal photons a_m,
// pump photons b_l, N = N_a/2 + N_b and M = sum of momentum indices.
namespace fanopdc::multiphoton {

// Occupations as sorted multisets of momentum indices.
struct BasisState {
    std::vector<int> signal;
    std::vector<int> pump;

    bool operator==(const BasisState& o) const { return signal == o.signal && pump == o.pump; }
};

struct StateHash {
    std::size_t operator()(const BasisState& s) const {
        std::size_t h = boost::hash_range(s.signal.begin(), s.signal.end());
        boost::hash_combine(h, s.pump.size());
        boost::hash_range(h, s.pump.begin(), s.pump.end());
        return h;
    }
};

struct Basis {
    int N = 0;
    int M = 0;
    int m_max = 0;
    bool dc_only = false;
    // Ordered by pump count J descending, then lexicographically by (pump, signal).
    std::vector<BasisState> states;
    std::unordered_map<BasisState, std::size_t, StateHash> index;

    std::size_t dim() const { return states.size(); }
    // Position of s, or dim() when absent.
    std::size_t find(const BasisState& s) const {
        auto it = index.find(s);
        return it == index.end() ? dim() : it->second;
    }
};

struct EnumerateOptions {
    // Enumeration is refused above this many states.
    std::size_t max_dim = 4'000'000;
};

// Smallest cutoff whose pair band edge eps^2 m^2 reaches max(4|xi|, 16).
// Doubling it moves N_b/N by under 0.003 before the finite-window revival.
inline int default_m_max(double xi, double epsilon, int N) {
    require(epsilon > 0, "default_m_max: epsilon must be positive");
    require(N >= 1, "default_m_max: N must be >= 1");
    return static_cast<int>(std::ceil(std::sqrt(std::max(4 * std::abs(xi), 16.0)) / epsilon - 1e-9));
}

namespace detail {

// counts[k][s + k m] = number of sorted length-k sequences over [-m, m] with sum s.
inline std::vector<std::vector<double>> multiset_sum_counts(int k_max, int m) {
    std::vector<std::vector<double>> ways(static_cast<std::size_t>(k_max) + 1);
    auto width = [&](int k) { return static_cast<std::size_t>(2 * k * m + 1); };
    for (int k = 0; k <= k_max; ++k) ways[static_cast<std::size_t>(k)].assign(width(k), 0.0);
    ways[0][0] = 1;
    // Add values one at a time with any multiplicity; offsets track sum + k m.
    for (int v = -m; v <= m; ++v) {
        for (int k = k_max; k >= 1; --k) {
            auto& dst = ways[static_cast<std::size_t>(k)];
            for (int c = 1; c <= k; ++c) {
                const auto& src = ways[static_cast<std::size_t>(k - c)];
                for (std::size_t i = 0; i < src.size(); ++i) {
                    if (src[i] == 0) continue;
                    long s = static_cast<long>(i) - static_cast<long>(k - c) * m + static_cast<long>(c) * v;
                    dst[static_cast<std::size_t>(s + static_cast<long>(k) * m)] += src[i];
                }
            }
        }
    }
    return ways;
}

inline double binomial(double n, int k) {
    double r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// Appends every sorted sequence of length k over [lo, m] with the given sum.
inline void sorted_sequences(int k, int lo, int m, long sum, std::vector<int>& cur,
                             std::vector<std::vector<int>>& out) {
    if (k == 0) {
        if (sum == 0) out.push_back(cur);
        return;
    }
    for (int v = lo; v <= m; ++v) {
        long rest = sum - v;
        if (rest < static_cast<long>(k - 1) * v) break;
        if (rest > static_cast<long>(k - 1) * m) continue;
        cur.push_back(v);
        sorted_sequences(k - 1, v, m, rest, cur, out);
        cur.pop_back();
    }
}

}  // namespace detail

// Exact sector dimension without building the basis.
inline double estimate_dimension(int N, int M, int m_max, bool dc_only) {
    require(N >= 1 && m_max >= 1, "estimate_dimension: need N >= 1 and m_max >= 1");
    if (dc_only) {
        if (M != 0) return 0;
        double d = 0;
        for (int J = 0; J <= N; ++J) d += detail::binomial(m_max + N - J, N - J);
        return d;
    }
    auto ways = detail::multiset_sum_counts(2 * N, m_max);
    double d = 0;
    for (int J = 0; J <= N; ++J) {
        const auto& pump = ways[static_cast<std::size_t>(J)];
        const auto& sig = ways[static_cast<std::size_t>(2 * N - 2 * J)];
        for (std::size_t i = 0; i < pump.size(); ++i) {
            if (pump[i] == 0) continue;
            long sp = static_cast<long>(i) - static_cast<long>(J) * m_max;
            long idx = M - sp + static_cast<long>(2 * N - 2 * J) * m_max;
            if (idx >= 0 && idx < static_cast<long>(sig.size())) d += pump[i] * sig[static_cast<std::size_t>(idx)];
        }
    }
    return d;
}

inline Basis enumerate_basis(int N, int M, int m_max, bool dc_only, const EnumerateOptions& opts = {}) {
    require(N >= 1, "enumerate_basis: N must be >= 1");
    require(m_max >= 1, "enumerate_basis: m_max must be >= 1");
    require(!dc_only || M == 0, "enumerate_basis: the dc subspace has M = 0");
    double est = estimate_dimension(N, M, m_max, dc_only);
    if (est > static_cast<double>(opts.max_dim))
        throw ValidationError("enumerate_basis: sector dimension " + std::to_string(static_cast<long long>(est)) +
                              " exceeds the cap " + std::to_string(opts.max_dim));
    Basis b;
    b.N = N;
    b.M = M;
    b.m_max = m_max;
    b.dc_only = dc_only;
    b.states.reserve(static_cast<std::size_t>(est));
    for (int J = N; J >= 0; --J) {
        if (dc_only) {
            std::vector<std::vector<int>> halves;
            std::vector<int> cur;
            // Pair labels 0 <= p_1 <= ... with any sum up to (N - J) m_max.
            for (long s = 0; s <= static_cast<long>(N - J) * m_max; ++s)
                detail::sorted_sequences(N - J, 0, m_max, s, cur, halves);
            std::sort(halves.begin(), halves.end());
            for (const auto& h : halves) {
                BasisState st;
                st.pump.assign(static_cast<std::size_t>(J), 0);
                for (int p : h) {
                    st.signal.push_back(p);
                    st.signal.push_back(-p);
                }
                std::sort(st.signal.begin(), st.signal.end());
                b.states.push_back(std::move(st));
            }
            continue;
        }
        std::vector<std::vector<int>> pumps;
        std::vector<int> cur;
        for (long sp = -static_cast<long>(J) * m_max; sp <= static_cast<long>(J) * m_max; ++sp)
            detail::sorted_sequences(J, -m_max, m_max, sp, cur, pumps);
        std::sort(pumps.begin(), pumps.end());
        for (const auto& p : pumps) {
            long sp = 0;
            for (int l : p) sp += l;
            std::vector<std::vector<int>> sigs;
            detail::sorted_sequences(2 * N - 2 * J, -m_max, m_max, M - sp, cur, sigs);
            for (auto& s : sigs) b.states.push_back({std::move(s), p});
        }
    }
    b.index.reserve(b.states.size());
    for (std::size_t i = 0; i < b.states.size(); ++i) b.index.emplace(b.states[i], i);
    return b;
}

namespace detail {

inline int multiplicity(const std::vector<int>& ms, int v) {
    auto r = std::equal_range(ms.begin(), ms.end(), v);
    return static_cast<int>(r.second - r.first);
}

inline std::vector<int> with(std::vector<int> ms, std::initializer_list<int> add) {
    for (int v : add) ms.insert(std::upper_bound(ms.begin(), ms.end(), v), v);
    return ms;
}

inline std::vector<int> without(std::vector<int> ms, int v) {
    ms.erase(std::lower_bound(ms.begin(), ms.end(), v));
    return ms;
}

}  // namespace detail

// <to| sum_{m+n=l} (a_m^+ a_n^+ b_l + h.c.)/2 |from> in units of eps^{1/2}:
// sqrt(k_l (k_m + 1)(k_n + 1)) for m != n and sqrt(k_l (k_m + 1)(k_m + 2))/2 for m = n,
// with k the occupations on the side holding more pump photons.
inline double transition_amplitude(const BasisState& from, const BasisState& to) {
    const BasisState* hi = &from;
    const BasisState* lo = &to;
    if (lo->pump.size() > hi->pump.size()) std::swap(hi, lo);
    if (hi->pump.size() != lo->pump.size() + 1 || lo->signal.size() != hi->signal.size() + 2) return 0;
    // Removed pump label: the one whose multiplicity drops.
    int l = 0;
    bool found = false;
    for (int v : hi->pump)
        if (detail::multiplicity(hi->pump, v) != detail::multiplicity(lo->pump, v)) {
            l = v;
            found = true;
            break;
        }
    if (!found || detail::without(hi->pump, l) != lo->pump) return 0;
    // Added signal labels: multiset difference lo->signal - hi->signal.
    std::vector<int> added;
    std::set_difference(lo->signal.begin(), lo->signal.end(), hi->signal.begin(), hi->signal.end(),
                        std::back_inserter(added));
    if (added.size() != 2 || added[0] + added[1] != l) return 0;
    if (detail::with(hi->signal, {added[0], added[1]}) != lo->signal) return 0;
    double kl = detail::multiplicity(hi->pump, l);
    double km = detail::multiplicity(hi->signal, added[0]);
    if (added[0] == added[1]) return 0.5 * std::sqrt(kl * (km + 1) * (km + 2));
    double kn = detail::multiplicity(hi->signal, added[1]);
    return std::sqrt(kl * (km + 1) * (kn + 1));
}

struct HamiltonianParams {
    double xi = 0;
    double gamma = 0;
    double beta = 1;
    double epsilon = 0;
};

struct SparseHamiltonian {
    SparseMatrix matrix;
    std::size_t dim() const { return static_cast<std::size_t>(matrix.rows()); }
};

// sum_i (eps^2/2) m_i^2 + sum_j (xi + gamma eps l_j + (beta eps^2/2) l_j^2)
inline double diagonal_energy(const BasisState& s, const HamiltonianParams& p) {
    double e = 0, e2 = p.epsilon * p.epsilon;
    for (int m : s.signal) e += 0.5 * e2 * m * m;
    for (int l : s.pump) e += p.xi + p.gamma * p.epsilon * l + 0.5 * p.beta * e2 * l * l;
    return e;
}

inline SparseHamiltonian build_hamiltonian(const Basis& b, const HamiltonianParams& p) {
    require(p.epsilon > 0, "build_hamiltonian: epsilon must be positive");
    require(std::isfinite(p.xi) && std::isfinite(p.gamma) && std::isfinite(p.beta),
            "build_hamiltonian: parameters must be finite");
    const double g = std::sqrt(p.epsilon);
    std::vector<Triplet> t;
    t.reserve(b.dim() * 3);
    for (std::size_t i = 0; i < b.dim(); ++i) {
        const BasisState& s = b.states[i];
        t.emplace_back(static_cast<std::ptrdiff_t>(i), static_cast<std::ptrdiff_t>(i), diagonal_energy(s, p));
        // Downconvert one pump photon l into signals m <= n with m + n = l.
        for (std::size_t k = 0; k < s.pump.size(); ++k) {
            int l = s.pump[k];
            if (k > 0 && s.pump[k - 1] == l) continue;
            double kl = detail::multiplicity(s.pump, l);
            std::vector<int> pump = detail::without(s.pump, l);
            int m_lo = std::max(-b.m_max, l - b.m_max);
            for (int m = m_lo; 2 * m <= l; ++m) {
                int n = l - m;
                BasisState target{detail::with(s.signal, {m, n}), pump};
                std::size_t j = b.find(target);
                if (j == b.dim()) continue;
                double km = detail::multiplicity(s.signal, m);
                double v = m == n ? 0.5 * std::sqrt(kl * (km + 1) * (km + 2))
                                  : std::sqrt(kl * (km + 1) * (detail::multiplicity(s.signal, n) + 1));
                auto a = static_cast<std::ptrdiff_t>(i), c = static_cast<std::ptrdiff_t>(j);
                t.emplace_back(a, c, g * v);
                t.emplace_back(c, a, g * v);
            }
        }
    }
    SparseHamiltonian h;
    h.matrix.resize(static_cast<Eigen::Index>(b.dim()), static_cast<Eigen::Index>(b.dim()));
    h.matrix.setFromTriplets(t.begin(), t.end());
    h.matrix.makeCompressed();
    return h;
}

// |N> = (b_0^+)^N/sqrt(N!) |0>
inline cvec dc_pump_state(const Basis& b) {
    require(b.M == 0, "dc_pump_state: needs the M = 0 sector");
    std::size_t i = b.find(BasisState{{}, std::vector<int>(static_cast<std::size_t>(b.N), 0)});
    require(i < b.dim(), "dc_pump_state: |N> is not in the basis");
    return basis_vector(b.dim(), i);
}

inline EvolutionResult evolve(const SparseHamiltonian& h, const cvec& initial, const std::vector<double>& tau_grid,
                              const EvolveOptions& opts = {}) {
    return evolve_sparse(h.matrix, initial, tau_grid, opts);
}

// <b_l^+ b_l> for every pump index l present in the basis.
inline std::map<int, double> pump_mode_populations(const cvec& state, const Basis& b) {
    require(static_cast<std::size_t>(state.size()) == b.dim(), "pump_mode_populations: size mismatch");
    std::map<int, double> pop;
    for (std::size_t i = 0; i < b.dim(); ++i) {
        double w = std::norm(state[static_cast<Eigen::Index>(i)]);
        for (int l : b.states[i].pump) pop[l] += w;
    }
    return pop;
}

struct Conserved {
    double pump_number = 0;    // <N_b>
    double signal_number = 0;  // <N_a>
    double total_number = 0;   // <N_a/2 + N_b>
    double momentum = 0;       // <M>
};

inline Conserved conserved_quantities(const cvec& state, const Basis& b) {
    Conserved c;
    for (std::size_t i = 0; i < b.dim(); ++i) {
        double w = std::norm(state[static_cast<Eigen::Index>(i)]);
        const auto& s = b.states[i];
        c.pump_number += w * static_cast<double>(s.pump.size());
        c.signal_number += w * static_cast<double>(s.signal.size());
        long mom = 0;
        for (int m : s.signal) mom += m;
        for (int l : s.pump) mom += l;
        c.momentum += w * static_cast<double>(mom);
    }
    c.total_number = 0.5 * c.signal_number + c.pump_number;
    return c;
}

// <N_b>/N along the grid, starting from |N>.
inline std::vector<double> pump_population(const Basis& b, const SparseHamiltonian& h,
                                           const std::vector<double>& tau_grid, EvolveOptions opts = {}) {
    opts.keep_states = false;
    std::vector<double> out(tau_grid.size());
    opts.observer = [&](std::size_t k, const cvec& psi) {
        out[k] = conserved_quantities(psi, b).pump_number / b.N;
    };
    evolve(h, dc_pump_state(b), tau_grid, opts);
    return out;
}

inline std::string label(const BasisState& s) {
    std::string out = "a{";
    for (std::size_t i = 0; i < s.signal.size(); ++i) out += (i ? "," : "") + std::to_string(s.signal[i]);
    out += "}b{";
    for (std::size_t i = 0; i < s.pump.size(); ++i) out += (i ? "," : "") + std::to_string(s.pump[i]);
    return out + "}";
}

// Binary cache of an assembled Hamiltonian, little-endian host layout:
//   char[8] magic "FPDCHAM\0", u32 version, i32 N, i32 M, i32 m_max, u8 dc_only,
//   f64 xi, gamma, beta, epsilon, i64 dim, i64 nnz,
//   i64 outer[dim + 1], i64 inner[nnz], f64 values[nnz]   (row-compressed)
namespace cache {

inline constexpr char magic[8] = {'F', 'P', 'D', 'C', 'H', 'A', 'M', '\0'};
inline constexpr std::uint32_t version = 1;

struct Key {
    std::int32_t N = 0, M = 0, m_max = 0;
    std::uint8_t dc_only = 0;
    double xi = 0, gamma = 0, beta = 0, epsilon = 0;

    bool operator==(const Key& o) const {
        return N == o.N && M == o.M && m_max == o.m_max && dc_only == o.dc_only && xi == o.xi &&
               gamma == o.gamma && beta == o.beta && epsilon == o.epsilon;
    }
};

inline Key make_key(const Basis& b, const HamiltonianParams& p) {
    return {b.N, b.M, b.m_max, static_cast<std::uint8_t>(b.dc_only), p.xi, p.gamma, p.beta, p.epsilon};
}

namespace detail {
template <class T>
void put(std::ostream& o, const T& v) {
    o.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <class T>
bool get(std::istream& i, T& v) {
    return static_cast<bool>(i.read(reinterpret_cast<char*>(&v), sizeof v));
}
}  // namespace detail

// Returns false when the file cannot be written.
inline bool save(const std::string& path, const Key& k, const SparseHamiltonian& h) {
    std::ofstream o(path, std::ios::binary | std::ios::trunc);
    if (!o) return false;
    using detail::put;
    o.write(magic, sizeof magic);
    put(o, version);
    put(o, k.N);
    put(o, k.M);
    put(o, k.m_max);
    put(o, k.dc_only);
    put(o, k.xi);
    put(o, k.gamma);
    put(o, k.beta);
    put(o, k.epsilon);
    auto dim = static_cast<std::int64_t>(h.dim());
    auto nnz = static_cast<std::int64_t>(h.matrix.nonZeros());
    put(o, dim);
    put(o, nnz);
    o.write(reinterpret_cast<const char*>(h.matrix.outerIndexPtr()), static_cast<std::streamsize>(8 * (dim + 1)));
    o.write(reinterpret_cast<const char*>(h.matrix.innerIndexPtr()), static_cast<std::streamsize>(8 * nnz));
    o.write(reinterpret_cast<const char*>(h.matrix.valuePtr()), static_cast<std::streamsize>(8 * nnz));
    return static_cast<bool>(o);
}

// Loads into h when the file exists, is well formed and its key matches.
inline bool load(const std::string& path, const Key& want, SparseHamiltonian& h) {
    static_assert(sizeof(SparseMatrix::StorageIndex) == 8, "cache layout assumes 64-bit indices");
    std::ifstream i(path, std::ios::binary);
    if (!i) return false;
    using detail::get;
    char m[8];
    std::uint32_t ver = 0;
    Key k;
    if (!i.read(m, sizeof m) || std::memcmp(m, magic, sizeof m) != 0) return false;
    if (!get(i, ver) || ver != version) return false;
    if (!(get(i, k.N) && get(i, k.M) && get(i, k.m_max) && get(i, k.dc_only) && get(i, k.xi) && get(i, k.gamma) &&
          get(i, k.beta) && get(i, k.epsilon)))
        return false;
    if (!(k == want)) return false;
    std::int64_t dim = 0, nnz = 0;
    if (!get(i, dim) || !get(i, nnz) || dim < 0 || nnz < 0) return false;
    std::vector<std::int64_t> outer(static_cast<std::size_t>(dim) + 1), inner(static_cast<std::size_t>(nnz));
    std::vector<double> values(static_cast<std::size_t>(nnz));
    if (!i.read(reinterpret_cast<char*>(outer.data()), static_cast<std::streamsize>(8 * (dim + 1))) ||
        !i.read(reinterpret_cast<char*>(inner.data()), static_cast<std::streamsize>(8 * nnz)) ||
        !i.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(8 * nnz)))
        return false;
    if (outer.front() != 0 || outer.back() != nnz) return false;
    Eigen::Map<const SparseMatrix> view(dim, dim, nnz, outer.data(), inner.data(), values.data());
    h.matrix = view;
    return true;
}

}  // namespace cache

// build_hamiltonian through the cache file at `path` (rebuilt and rewritten on any mismatch).
inline SparseHamiltonian cached_hamiltonian(const Basis& b, const HamiltonianParams& p, const std::string& path) {
    SparseHamiltonian h;
    cache::Key k = cache::make_key(b, p);
    if (cache::load(path, k, h) && h.dim() == b.dim()) return h;
    h = build_hamiltonian(b, p);
    cache::save(path, k, h);
    return h;
}

}  // namespace fanopdc::multiphoton
