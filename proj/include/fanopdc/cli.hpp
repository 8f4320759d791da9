#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <unistd.h>
#include <utility>
#include <variant>
#include <vector>

#include "fanopdc/biphoton.hpp"
#include "fanopdc/continuum_single.hpp"
#include "fanopdc/coupled.hpp"
#include "fanopdc/discrete_single.hpp"
#include "fanopdc/error.hpp"
#include "fanopdc/multiphoton.hpp"
#include "fanopdc/params.hpp"
#include "fanopdc/tpg.hpp"

namespace fanopdc::cli {

using json = nlohmann::ordered_json;
using cplx = std::complex<double>;

inline constexpr const char* schema_version = "fanopdc/1";

enum exit_code : int { ok = 0, invalid = 2, numerical = 3, unwritable = 4 };

// Output path that cannot be written.
class OutputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A named, typed command parameter. Flags spell names with '-', config
// files and output metadata with '_'.
struct Param {
    using Value = std::variant<double, long, bool, std::string, std::vector<double>>;
    std::string name;
    std::string help;
    Value value;
};

class ParamSet {
public:
    template <class T>
    void add(const std::string& name, T def, const std::string& help) {
        items_.push_back({name, help, Param::Value(std::move(def))});
    }

    void bind(CLI::App& app) {
        for (auto& p : items_) {
            std::string flag = "--" + kebab(p.name);
            std::visit(
                [&](auto& v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, bool>)
                        app.add_flag(flag + ",!--no-" + kebab(p.name), v, p.help);
                    else
                        app.add_option(flag, v, p.help)->capture_default_str();
                },
                p.value);
        }
    }

    // Config values replace flag values; unknown keys and type mismatches are rejected.
    void apply(const json& cfg) {
        require(cfg.is_object(), "config: top level must be a JSON object");
        for (const auto& [key, val] : cfg.items()) {
            std::string k = snake(key);
            if (k == "command") continue;
            Param* p = find(k);
            require(p != nullptr, "config: unknown key '" + key + "'");
            std::visit(
                [&](auto& v) {
                    using T = std::decay_t<decltype(v)>;
                    try {
                        if constexpr (std::is_same_v<T, double>) {
                            require(val.is_number(), "");
                        } else if constexpr (std::is_same_v<T, long>) {
                            require(val.is_number_integer(), "");
                        } else if constexpr (std::is_same_v<T, bool>) {
                            require(val.is_boolean(), "");
                        } else if constexpr (std::is_same_v<T, std::string>) {
                            require(val.is_string(), "");
                        } else {
                            require(val.is_array(), "");
                        }
                        v = val.template get<T>();
                    } catch (const std::exception&) {
                        throw ValidationError("config: key '" + key + "' has the wrong type");
                    }
                },
                p->value);
        }
    }

    template <class T>
    T& get(const std::string& name) {
        Param* p = find(name);
        if (p == nullptr) throw std::logic_error("ParamSet: no parameter '" + name + "'");
        return std::get<T>(p->value);
    }

    json to_json() const {
        json j = json::object();
        for (const auto& p : items_) std::visit([&](const auto& v) { j[p.name] = v; }, p.value);
        return j;
    }

private:
    static std::string kebab(std::string s) {
        std::replace(s.begin(), s.end(), '_', '-');
        return s;
    }
    static std::string snake(std::string s) {
        std::replace(s.begin(), s.end(), '-', '_');
        return s;
    }
    Param* find(const std::string& name) {
        for (auto& p : items_)
            if (p.name == name) return &p;
        return nullptr;
    }

    // deque keeps bound option targets stable as parameters are added.
    std::deque<Param> items_;
};

struct Output {
    json params;
    std::vector<std::pair<std::string, std::vector<double>>> series;
    std::vector<std::pair<std::string, double>> scalars;
};

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Comment lines carry the metadata; series become columns. Scalar-only
// outputs are written as a one-row table.
inline std::string to_csv(const std::string& command, const Output& o) {
    std::string s = "# command: " + command + "\n# schema_version: " + schema_version + "\n# params: " +
                    o.params.dump() + "\n";
    if (o.series.empty()) {
        for (std::size_t i = 0; i < o.scalars.size(); ++i) s += (i ? "," : "") + o.scalars[i].first;
        s += "\n";
        for (std::size_t i = 0; i < o.scalars.size(); ++i) s += (i ? "," : "") + fmt(o.scalars[i].second);
        return s + "\n";
    }
    for (const auto& [name, v] : o.scalars) s += "# " + name + ": " + fmt(v) + "\n";
    std::size_t rows = o.series.front().second.size();
    for (std::size_t i = 0; i < o.series.size(); ++i) s += (i ? "," : "") + o.series[i].first;
    s += "\n";
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t i = 0; i < o.series.size(); ++i) s += (i ? "," : "") + fmt(o.series[i].second[r]);
        s += "\n";
    }
    return s;
}

inline std::string to_json(const std::string& command, const Output& o) {
    json j;
    j["schema_version"] = schema_version;
    j["command"] = command;
    j["params"] = o.params;
    json series = json::array();
    for (const auto& [name, v] : o.series) series.push_back(json{{"name", name}, {"values", v}});
    j["series"] = series;
    json scalars = json::object();
    for (const auto& [name, v] : o.scalars) scalars[name] = v;
    j["scalars"] = scalars;
    return j.dump(2) + "\n";
}

// Temp file in the target directory, then rename, so readers never see a partial file.
inline void write_atomic(const std::string& path, const std::string& text) {
    namespace fs = std::filesystem;
    fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw OutputError("cannot open '" + tmp.string() + "' for writing");
        f.write(text.data(), static_cast<std::streamsize>(text.size()));
        f.flush();
        if (!f) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw OutputError("write to '" + tmp.string() + "' failed");
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw OutputError("cannot rename onto '" + path + "': " + ec.message());
    }
}

// FANO_PDC_THREADS caps the worker count; unset means hardware concurrency.
inline unsigned thread_count() {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const char* env = std::getenv("FANO_PDC_THREADS");
    if (env == nullptr || *env == '\0') return hw;
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    require(end != env && *end == '\0' && v >= 1, "FANO_PDC_THREADS must be a positive integer");
    return static_cast<unsigned>(std::min<long>(v, hw));
}

// out[i] = f(i). Points are independent, so the result does not depend on
// the thread count; the lowest-index failure is rethrown.
template <class F>
std::vector<double> parallel_map(std::size_t n, F&& f) {
    std::vector<double> out(n);
    std::vector<std::exception_ptr> err(n);
    unsigned t = std::min<std::size_t>(thread_count(), std::max<std::size_t>(n, 1));
    auto work = [&](unsigned w) {
        for (std::size_t i = w; i < n; i += t) {
            try {
                out[i] = f(i);
            } catch (...) {
                err[i] = std::current_exception();
            }
        }
    };
    if (t <= 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < t; ++w) pool.emplace_back(work, w);
        for (auto& th : pool) th.join();
    }
    for (auto& e : err)
        if (e) std::rethrow_exception(e);
    return out;
}

// tau_max k/steps for k = 0..steps
inline std::vector<double> tau_grid(double tau_max, long steps) {
    require(tau_max > 0, "invalid --tau-max: must be positive");
    require(steps >= 1, "invalid --tau-steps: must be >= 1");
    std::vector<double> g(static_cast<std::size_t>(steps) + 1);
    for (long k = 0; k <= steps; ++k) g[static_cast<std::size_t>(k)] = tau_max * static_cast<double>(k) / steps;
    return g;
}

inline void require_key(bool okay, const std::string& key, const std::string& why) {
    require(okay, "invalid --" + key + ": " + why);
}

// One subcommand: parameters plus the computation reading them.
struct Command {
    std::string name;
    std::string help;
    ParamSet params;
    std::function<Output(ParamSet&)> run;
};

inline void add_single_evolve(std::deque<Command>& cmds) {
    Command& c = cmds.emplace_back();
    c.name = "single-evolve";
    c.help = "Pump population of the single waveguide: continuum result and discrete evolution";
    c.params.add("xi", 2.0, "normalized detuning");
    c.params.add("epsilon", 1.0 / 30, "quantization step eps");
    c.params.add("p_max", 0L, "momentum cutoff, 0 for the default");
    c.params.add("tau_max", 5.0, "final time");
    c.params.add("tau_steps", 200L, "time intervals");
    c.params.add("discrete", true, "also run the discrete model");
    c.params.add("exact_degenerate_pair", false, "operator-exact p=0 coupling");
    c.run = [](ParamSet& ps) {
        auto& xi = ps.get<double>("xi");
        auto& eps = ps.get<double>("epsilon");
        auto& p_max = ps.get<long>("p_max");
        auto& tau_max = ps.get<double>("tau_max");
        auto& steps = ps.get<long>("tau_steps");
        auto& disc = ps.get<bool>("discrete");
        auto& exact = ps.get<bool>("exact_degenerate_pair");
        require_key(std::isfinite(xi), "xi", "must be finite");
        require_key(eps > 0, "epsilon", "must be positive");
        require_key(p_max >= 0, "p-max", "must be >= 0");
        auto grid = tau_grid(tau_max, steps);
        if (disc && p_max == 0) p_max = static_cast<long>(discrete::default_p_max(xi, eps));
        Output o;
        continuum::MesonState m = continuum::meson_solution(xi);
        o.series.emplace_back("tau", grid);
        o.series.emplace_back("N_b_analytic",
                              parallel_map(grid.size(), [&](std::size_t i) { return std::norm(continuum::pump_amplitude(m, grid[i])); }));
        if (disc) {
            discrete::SingleOptions so;
            so.exact_degenerate_pair = exact;
            auto h = discrete::build_single_photon_hamiltonian(xi, eps, static_cast<std::size_t>(p_max), so);
            o.series.emplace_back("N_b_discrete", discrete::pump_population(h, grid));
        }
        o.scalars = {{"lambda_M", m.lambda_M}, {"c_M_sq", m.c_M_sq}};
        o.params = ps.to_json();
        return o;
    };
}

inline void add_single_spectrum(std::deque<Command>& cmds) {
    Command& c = cmds.emplace_back();
    c.name = "single-spectrum";
    c.help = "Continuum weights c_lambda^2 and Fano parameter w of the single waveguide";
    c.params.add("xi", 2.0, "normalized detuning");
    c.params.add("lambda_max", 20.0, "largest continuum energy");
    c.params.add("lambda_steps", 400L, "grid points on (0, lambda_max]");
    c.run = [](ParamSet& ps) {
        auto& xi = ps.get<double>("xi");
        auto& lmax = ps.get<double>("lambda_max");
        auto& steps = ps.get<long>("lambda_steps");
        require_key(std::isfinite(xi), "xi", "must be finite");
        require_key(lmax > 0, "lambda-max", "must be positive");
        require_key(steps >= 1, "lambda-steps", "must be >= 1");
        Output o;
        std::vector<double> l, w, c2;
        for (long k = 1; k <= steps; ++k) {
            auto cw = continuum::continuum_weight(xi, lmax * static_cast<double>(k) / steps);
            l.push_back(cw.lambda);
            c2.push_back(cw.c_lambda_sq);
            w.push_back(cw.w);
        }
        o.series = {{"lambda", l}, {"c_lambda_sq", c2}, {"w", w}};
        continuum::MesonState m = continuum::meson_solution(xi);
        o.scalars = {{"lambda_M", m.lambda_M}, {"c_M_sq", m.c_M_sq}};
        o.params = ps.to_json();
        return o;
    };
}

inline void add_biphoton(std::deque<Command>& cmds) {
    Command& c = cmds.emplace_back();
    c.name = "biphoton";
    c.help = "Spatial R(tau, dz) or spectral Q(tau, s) biphoton correlation, long format over tau";
    c.params.add("xi", 4.0, "normalized detuning");
    c.params.add("zeta", 1.0, "length unit zeta");
    c.params.add("tau", std::vector<double>{4.0}, "evaluation times");
    c.params.add("kind", std::string("spatial"), "spatial or spectral");
    c.params.add("x_max", 2.0, "largest dz in units of zeta (spatial) or s (spectral)");
    c.params.add("x_steps", 200L, "grid intervals");
    c.run = [](ParamSet& ps) {
        auto& xi = ps.get<double>("xi");
        auto& zeta = ps.get<double>("zeta");
        auto& taus = ps.get<std::vector<double>>("tau");
        auto& kind = ps.get<std::string>("kind");
        auto& x_max = ps.get<double>("x_max");
        auto& steps = ps.get<long>("x_steps");
        require_key(std::isfinite(xi), "xi", "must be finite");
        require_key(zeta > 0, "zeta", "must be positive");
        require_key(!taus.empty(), "tau", "needs at least one value");
        for (double t : taus) require_key(std::isfinite(t), "tau", "must be finite");
        require_key(kind == "spatial" || kind == "spectral", "kind", "must be 'spatial' or 'spectral'");
        require_key(x_max > 0, "x-max", "must be positive");
        require_key(steps >= 1, "x-steps", "must be >= 1");
        bool spatial = kind == "spatial";
        // Q is evaluated off s = 0, where the principal-value contour degenerates.
        long first = spatial ? 0 : 1;
        std::vector<double> tcol, xcol;
        for (double t : taus)
            for (long k = first; k <= steps; ++k) {
                tcol.push_back(t);
                xcol.push_back(x_max * static_cast<double>(k) / steps);
            }
        continuum::MesonState m = continuum::meson_solution(xi);
        std::vector<cplx> vals(tcol.size());
        auto re = parallel_map(tcol.size(), [&](std::size_t i) {
            vals[i] = spatial ? biphoton::spatial_correlation(m, tcol[i], xcol[i]) / std::sqrt(zeta)
                              : biphoton::spectral_correlation(m, tcol[i], xcol[i]);
            return vals[i].real();
        });
        std::vector<double> im, a2;
        for (const auto& v : vals) {
            im.push_back(v.imag());
            a2.push_back(std::norm(v));
        }
        Output o;
        o.series = {{"tau", tcol}, {spatial ? "dz" : "s", xcol}, {"re", re}, {"im", im}, {"abs2", a2}};
        o.scalars = {{"lambda_M", m.lambda_M}, {"c_M_sq", m.c_M_sq}};
        if (xi > 0) o.scalars.emplace_back("wavepacket_velocity", biphoton::wavepacket_velocity(xi, zeta));
        o.params = ps.to_json();
        return o;
    };
}

inline void add_coupled_params(ParamSet& ps) {
    ps.add("xi2", 2.0, "detuning of waveguide 2");
    ps.add("dxi", -0.3, "xi2 - xi1");
    ps.add("theta", std::numbers::pi / 4, "input mixing angle in [0, pi/2]");
    ps.add("phi", 0.0, "input relative phase in [0, 2 pi)");
}

inline coupled::CoupledParams resolve_coupled(ParamSet& ps) {
    double xi2 = ps.get<double>("xi2"), dxi = ps.get<double>("dxi");
    double theta = ps.get<double>("theta"), phi = ps.get<double>("phi");
    require_key(std::isfinite(xi2), "xi2", "must be finite");
    require_key(std::isfinite(dxi), "dxi", "must be finite");
    require_key(theta >= 0 && theta <= std::numbers::pi / 2, "theta", "must lie in [0, pi/2]");
    require_key(phi >= 0 && phi < 2 * std::numbers::pi, "phi", "must lie in [0, 2 pi)");
    return {xi2 - dxi, xi2, theta, phi};
}

inline void add_coupled_spectrum(std::deque<Command>& cmds) {
    Command& c = cmds.emplace_back();
    c.name = "coupled-spectrum";
    c.help = "Excitation spectrum |F_lambda|^2 of two coupled waveguides";
    add_coupled_params(c.params);
    c.params.add("lambda_max", 10.0, "largest continuum energy");
    c.params.add("lambda_steps", 400L, "grid points on (0, lambda_max]");
    c.run = [](ParamSet& ps) {
        auto& lmax = ps.get<double>("lambda_max");
        auto& steps = ps.get<long>("lambda_steps");
        coupled::CoupledParams p = resolve_coupled(ps);
        require_key(lmax > 0, "lambda-max", "must be positive");
        require_key(steps >= 1, "lambda-steps", "must be >= 1");
        std::vector<double> grid;
        for (long k = 1; k <= steps; ++k) {
            double l = lmax * static_cast<double>(k) / steps;
            // lambda* itself is the BIC or resonance point, not a continuum state.
            if (std::abs(l - p.lambda_star()) > coupled::bic_tol) grid.push_back(l);
        }
        auto s = coupled::excitation_spectrum(p, grid);
        Output o;
        o.series = {{"lambda", s.lambda_grid}, {"F_abs2", s.values}};
        for (std::size_t k = 0; k < s.bound_weights.size(); ++k)
            o.scalars.emplace_back("bound_weight_" + std::to_string(k), s.bound_weights[k]);
        o.scalars.emplace_back("bic_weight", s.bic_weight);
        o.scalars.emplace_back("lambda_star", p.lambda_star());
        o.params = ps.to_json();
        return o;
    };
}

inline void add_coupled_evolve(std::deque<Command>& cmds) {
    Command& c = cmds.emplace_back();
    c.name = "coupled-evolve";
    c.help = "Total pump population N_+ of two coupled waveguides";
    add_coupled_params(c.params);
    c.params.add("epsilon", 1.0 / 30, "quantization step eps");
    c.params.add("p_max", 0L, "momentum cutoff, 0 for the default");
    c.params.add("tau_max", 10.0, "final time");
    c.params.add("tau_steps", 100L, "time intervals");
    c.params.add("discrete", true, "also run the discrete model");
    c.run = [](ParamSet& ps) {
        auto& eps = ps.get<double>("epsilon");
        auto& p_max = ps.get<long>("p_max");
        auto& tau_max = ps.get<double>("tau_max");
        auto& steps = ps.get<long>("tau_steps");
        auto& disc = ps.get<bool>("discrete");
        coupled::CoupledParams p = resolve_coupled(ps);
        require_key(eps > 0, "epsilon", "must be positive");
        require_key(p_max >= 0, "p-max", "must be >= 0");
        auto grid = tau_grid(tau_max, steps);
        if (disc && p_max == 0)
            p_max = static_cast<long>(discrete::default_p_max(std::max(std::abs(p.xi1), std::abs(p.xi2)), eps));
        Output o;
        o.series.emplace_back("tau", grid);
        o.series.emplace_back("N_plus_analytic", parallel_map(grid.size(), [&](std::size_t i) {
                                  auto a = coupled::pump_amplitudes(p, grid[i]);
                                  return std::norm(a[0]) + std::norm(a[1]);
                              }));
        if (disc) {
            auto h = coupled::build_coupled_discrete(p.xi1, p.xi2, eps, static_cast<std::size_t>(p_max));
            o.series.emplace_back("N_plus_discrete", coupled::discrete_pump_population(h, p, grid));
        }
        o.scalars.emplace_back("lambda_star", p.lambda_star());
        o.scalars.emplace_back("bic", coupled::detect_bic(p.xi1, p.xi2).exists ? 1.0 : 0.0);
        o.params = ps.to_json();
        return o;
    };
}

inline void add_multiphoton_evolve(std::deque<Command>& cmds) {
    Command& c = cmds.emplace_back();
    c.name = "multiphoton-evolve";
    c.help = "N-photon pump depletion <N_b>/N in a fixed-momentum sector";
    c.params.add("n", 2L, "pump photon number N");
    c.params.add("m", 0L, "total momentum sector M");
    c.params.add("m_max", 0L, "mode cutoff, 0 for the default");
    c.params.add("dc_only", true, "restrict pumps to the dc mode");
    c.params.add("xi", 4.0, "normalized detuning");
    c.params.add("gamma", 0.0, "group-velocity mismatch gamma");
    c.params.add("beta", 1.0, "pump dispersion ratio beta");
    c.params.add("epsilon", 1.0 / 20, "quantization step eps");
    c.params.add("tau_max", 50.0, "final time");
    c.params.add("tau_steps", 50L, "time intervals");
    c.params.add("mode_range", 0L, "emit <b_l^+ b_l> columns for |l| <= mode_range");
    c.params.add("cache", std::string(), "Hamiltonian cache file, empty for none");
    c.run = [](ParamSet& ps) {
        auto& n = ps.get<long>("n");
        auto& mom = ps.get<long>("m");
        auto& m_max = ps.get<long>("m_max");
        auto& dc = ps.get<bool>("dc_only");
        auto& xi = ps.get<double>("xi");
        auto& gamma = ps.get<double>("gamma");
        auto& beta = ps.get<double>("beta");
        auto& eps = ps.get<double>("epsilon");
        auto& tau_max = ps.get<double>("tau_max");
        auto& steps = ps.get<long>("tau_steps");
        auto& modes = ps.get<long>("mode_range");
        auto& cache = ps.get<std::string>("cache");
        require_key(n >= 1 && n <= 8, "n", "must lie in [1, 8]");
        require_key(std::isfinite(xi), "xi", "must be finite");
        require_key(eps > 0, "epsilon", "must be positive");
        require_key(m_max >= 0, "m-max", "must be >= 0");
        require_key(modes >= 0, "mode-range", "must be >= 0");
        require_key(!dc || mom == 0, "m", "the dc-only basis needs M = 0");
        auto grid = tau_grid(tau_max, steps);
        if (m_max == 0) m_max = multiphoton::default_m_max(xi, eps, static_cast<int>(n));
        auto b = multiphoton::enumerate_basis(static_cast<int>(n), static_cast<int>(mom), static_cast<int>(m_max), dc);
        multiphoton::HamiltonianParams hp{xi, gamma, beta, eps};
        auto h = cache.empty() ? multiphoton::build_hamiltonian(b, hp) : multiphoton::cached_hamiltonian(b, hp, cache);
        require(mom == 0, "multiphoton-evolve: the |N> initial state lives in the M = 0 sector");
        std::vector<double> pop(grid.size());
        std::vector<std::vector<double>> mode_cols(static_cast<std::size_t>(2 * modes + 1),
                                                   std::vector<double>(grid.size()));
        EvolveOptions opts;
        opts.keep_states = false;
        opts.observer = [&](std::size_t k, const cvec& psi) {
            pop[k] = multiphoton::conserved_quantities(psi, b).pump_number / static_cast<double>(n);
            if (modes == 0) return;
            auto per = multiphoton::pump_mode_populations(psi, b);
            for (long l = -modes; l <= modes; ++l) {
                auto it = per.find(static_cast<int>(l));
                mode_cols[static_cast<std::size_t>(l + modes)][k] = it == per.end() ? 0.0 : it->second;
            }
        };
        multiphoton::evolve(h, multiphoton::dc_pump_state(b), grid, opts);
        Output o;
        o.series = {{"tau", grid}, {"N_b_over_N", pop}};
        for (long l = -modes; l <= modes; ++l)
            if (modes > 0) o.series.emplace_back("n_b_" + std::to_string(l), mode_cols[static_cast<std::size_t>(l + modes)]);
        o.scalars = {{"dim", static_cast<double>(b.dim())}};
        o.params = ps.to_json();
        return o;
    };
}

inline void add_tpg_evolve(std::deque<Command>& cmds) {
    Command& c = cmds.emplace_back();
    c.name = "tpg-evolve";
    c.help = "Three-photon generation pump population N_c: continuum result and discrete evolution";
    c.params.add("xi", 2.0, "normalized detuning");
    c.params.add("epsilon", 1.0 / 100, "quantization step eps");
    c.params.add("r_max", 5.0, "triplet cutoff radius");
    c.params.add("band_edge", 0.0, "continuum upper limit, 0 for r_max^2");
    c.params.add("tau_max", 5.0, "final time");
    c.params.add("tau_steps", 100L, "time intervals");
    c.params.add("discrete", true, "also run the discrete model");
    c.run = [](ParamSet& ps) {
        auto& xi = ps.get<double>("xi");
        auto& eps = ps.get<double>("epsilon");
        auto& r_max = ps.get<double>("r_max");
        auto& edge = ps.get<double>("band_edge");
        auto& tau_max = ps.get<double>("tau_max");
        auto& steps = ps.get<long>("tau_steps");
        auto& disc = ps.get<bool>("discrete");
        require_key(std::isfinite(xi), "xi", "must be finite");
        require_key(eps > 0, "epsilon", "must be positive");
        require_key(r_max > 0, "r-max", "must be positive");
        require_key(edge >= 0, "band-edge", "must be >= 0");
        if (edge == 0) edge = tpg::default_band_edge(r_max);
        auto grid = tau_grid(tau_max, steps);
        tpg::TpgBoundState s = tpg::tpg_bound_state(xi, r_max, edge);
        Output o;
        o.series.emplace_back("tau", grid);
        o.series.emplace_back("N_c_analytic", parallel_map(grid.size(), [&](std::size_t i) {
                                  return std::norm(tpg::tpg_pump_amplitude(s, grid[i]));
                              }));
        if (disc) {
            auto h = tpg::build_tpg_hamiltonian({xi, eps, r_max});
            o.series.emplace_back("N_c_discrete", tpg::discrete_pump_population(h, grid));
        }
        o.scalars = {{"lambda_T", s.lambda_T}, {"c_T_sq", s.c_T_sq}};
        o.params = ps.to_json();
        return o;
    };
}

inline void add_fom(std::deque<Command>& cmds) {
    Command& c = cmds.emplace_back();
    c.name = "fom";
    c.help = "Characteristic PDC length l_pdc from SHG efficiency, wavelength and GVD";
    c.params.add("eta_percent_per_w_cm2", 2600.0, "SHG slope efficiency in %/W/cm^2");
    c.params.add("lambda_um", 1.5, "carrier wavelength in um");
    c.params.add("gvd_fs2_per_mm", 5.0, "|k''| in fs^2/mm");
    c.run = [](ParamSet& ps) {
        auto& eta = ps.get<double>("eta_percent_per_w_cm2");
        auto& lam = ps.get<double>("lambda_um");
        auto& gvd = ps.get<double>("gvd_fs2_per_mm");
        require_key(eta > 0, "eta-percent-per-w-cm2", "must be positive");
        require_key(lam > 0, "lambda-um", "must be positive");
        require_key(gvd > 0, "gvd-fs2-per-mm", "must be positive");
        params::ExperimentParams e;
        e.eta = params::eta_from_percent_per_w_cm2(eta);
        e.lambda_carrier = lam * 1e-6;
        e.gvd = params::gvd_from_fs2_per_mm(gvd);
        Output o;
        o.scalars = {{"l_pdc_m", params::l_pdc(e)}};
        o.params = ps.to_json();
        return o;
    };
}

inline json read_config(const std::string& path) {
    std::ifstream f(path);
    require(f.good(), "config: cannot read '" + path + "'");
    try {
        return json::parse(f);
    } catch (const json::parse_error& e) {
        throw ValidationError("config: '" + path + "' is not valid JSON: " + e.what());
    }
}

// Parses argv, runs one subcommand and writes its output. Messages go to err.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Fano-resonance models of parametric down-conversion"};
    app.require_subcommand(1);
    // Subcommands inherit this, so --out etc. may follow the command name.
    app.fallthrough();
    std::string out_path, format = "csv", config_path;
    app.add_option("--out", out_path, "output file; stdout when omitted");
    app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    app.add_option("--config", config_path, "JSON file whose keys override the flags");

    std::deque<Command> cmds;
    add_single_evolve(cmds);
    add_single_spectrum(cmds);
    add_biphoton(cmds);
    add_coupled_spectrum(cmds);
    add_coupled_evolve(cmds);
    add_multiphoton_evolve(cmds);
    add_tpg_evolve(cmds);
    add_fom(cmds);
    std::vector<std::pair<CLI::App*, Command*>> subs;
    for (auto& c : cmds) {
        CLI::App* s = app.add_subcommand(c.name, c.help);
        c.params.bind(*s);
        subs.emplace_back(s, &c);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::ostringstream o, e2;
        int code = app.exit(e, o, e2);
        out << o.str();
        err << e2.str();
        return code == 0 ? exit_code::ok : exit_code::invalid;
    }

    Command* cmd = nullptr;
    for (auto& [s, c] : subs)
        if (s->parsed()) cmd = c;
    try {
        if (!config_path.empty()) cmd->params.apply(read_config(config_path));
        Output o = cmd->run(cmd->params);
        std::string text = format == "json" ? to_json(cmd->name, o) : to_csv(cmd->name, o);
        if (out_path.empty())
            out << text;
        else
            write_atomic(out_path, text);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::invalid;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return exit_code::numerical;
    } catch (const OutputError& e) {
        err << "output error: " << e.what() << "\n";
        return exit_code::unwritable;
    }
    return exit_code::ok;
}

}  // namespace fanopdc::cli
