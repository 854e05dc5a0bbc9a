#pragma once

/**
 * @file
 * Experiment configuration: a flat TOML table whose keys mirror
 * ExperimentConfig. Unknown keys and wrong types are rejected with a
 * ConfigError naming the offending field.
 */

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "nhd/error.hpp"
#include "nhd/linalg.hpp"
#include "tomlplusplus/toml.hpp"

namespace nhd::experiment {

enum class RunScheme { Naimark, BoNd, GBoNd, Exact };

inline std::string_view to_string(RunScheme s) {
    switch (s) {
    case RunScheme::Naimark: return "naimark";
    case RunScheme::BoNd: return "bond";
    case RunScheme::GBoNd: return "gbond";
    case RunScheme::Exact: return "exact";
    }
    return "unknown";
}

inline RunScheme parse_scheme(std::string_view name) {
    if (name == "naimark") return RunScheme::Naimark;
    if (name == "bond") return RunScheme::BoNd;
    if (name == "gbond") return RunScheme::GBoNd;
    if (name == "exact") return RunScheme::Exact;
    throw ConfigError("scheme", "unknown scheme '" + std::string(name) +
                                    "' (expected naimark, bond, gbond or exact)");
}

struct ExperimentConfig {
    std::vector<double> r_values{0.6, 0.9, 1.0, 1.2};
    double t0 = 0.0;
    double t1 = 5.0;
    std::size_t steps = 101; // grid points, ends included
    RunScheme scheme = RunScheme::GBoNd;
    std::int64_t shots = 4096;            // per measurement basis and seed
    std::vector<std::uint64_t> seeds{};   // empty means 0..19
    Vector psi0 = Vector::Unit(2, 0);
    std::string out_dir = "out";
    bool emit_plots = false;
    double ode_step = 1e-3;               // RK4 step and finite-difference spacing
    std::int64_t tomography_shots = 10000; // per basis, metric reconstruction

    [[nodiscard]] std::vector<std::uint64_t> seed_list() const {
        if (!seeds.empty()) {
            return seeds;
        }
        std::vector<std::uint64_t> out(20);
        for (std::uint64_t i = 0; i < 20; ++i) {
            out[i] = i;
        }
        return out;
    }

    [[nodiscard]] std::vector<double> grid() const {
        std::vector<double> g(steps);
        for (std::size_t k = 0; k < steps; ++k) {
            g[k] = t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(steps - 1);
        }
        return g;
    }
};

/// Throws ConfigError for the first violated invariant.
inline void validate(const ExperimentConfig &c) {
    if (c.r_values.empty()) {
        throw ConfigError("r_values", "at least one r value is required");
    }
    for (double r : c.r_values) {
        if (!std::isfinite(r)) {
            throw ConfigError("r_values", "r values must be finite");
        }
    }
    if (!std::isfinite(c.t0) || !std::isfinite(c.t1) || !(c.t1 > c.t0)) {
        throw ConfigError("t1", "time window needs finite t0 < t1");
    }
    if (c.steps < 2) {
        throw ConfigError("steps", "steps must be at least 2");
    }
    if (c.scheme != RunScheme::Exact && c.shots < 1) {
        throw ConfigError("shots", "shots must be at least 1 for a sampled scheme");
    }
    if (c.tomography_shots < 1) {
        throw ConfigError("tomography_shots", "tomography_shots must be at least 1");
    }
    if (!(c.ode_step > 0.0) || c.ode_step > 1e-3) {
        throw ConfigError("ode_step", "ode_step must lie in (0, 1e-3]");
    }
    if (c.psi0.size() != 2 || std::abs(c.psi0.norm() - 1.0) > 1e-9) {
        throw ConfigError("psi0", "psi0 must be a normalized two-amplitude state");
    }
    if (c.out_dir.empty()) {
        throw ConfigError("out_dir", "out_dir must not be empty");
    }
}

namespace detail {

inline double as_real(const toml::node &n, const std::string &field) {
    if (auto v = n.value<double>()) {
        return *v;
    }
    throw ConfigError(field, "expected a number");
}

inline std::int64_t as_int(const toml::node &n, const std::string &field) {
    if (n.is_integer()) {
        return *n.value<std::int64_t>();
    }
    throw ConfigError(field, "expected an integer");
}

inline const toml::array &as_array(const toml::node &n, const std::string &field) {
    if (const toml::array *a = n.as_array()) {
        return *a;
    }
    throw ConfigError(field, "expected an array");
}

} // namespace detail

inline ExperimentConfig from_table(const toml::table &tbl) {
    static const std::set<std::string, std::less<>> known{
        "r_values", "t0",       "t1",         "steps",    "scheme",          "shots",
        "seeds",    "psi0",     "out_dir",    "emit_plots", "ode_step",      "tomography_shots"};
    ExperimentConfig c;
    for (const auto &[key, node] : tbl) {
        const std::string k(key.str());
        if (!known.contains(k)) {
            throw ConfigError(k, "unknown configuration key");
        }
        if (k == "r_values") {
            c.r_values.clear();
            const toml::array &a = detail::as_array(node, k);
            for (std::size_t i = 0; i < a.size(); ++i) {
                c.r_values.push_back(detail::as_real(a[i], k + "[" + std::to_string(i) + "]"));
            }
        } else if (k == "t0") {
            c.t0 = detail::as_real(node, k);
        } else if (k == "t1") {
            c.t1 = detail::as_real(node, k);
        } else if (k == "steps") {
            const std::int64_t s = detail::as_int(node, k);
            if (s < 0) {
                throw ConfigError(k, "steps must be at least 2");
            }
            c.steps = static_cast<std::size_t>(s);
        } else if (k == "scheme") {
            const auto s = node.value<std::string>();
            if (!s) {
                throw ConfigError(k, "expected a string");
            }
            c.scheme = parse_scheme(*s);
        } else if (k == "shots") {
            c.shots = detail::as_int(node, k);
        } else if (k == "tomography_shots") {
            c.tomography_shots = detail::as_int(node, k);
        } else if (k == "seeds") {
            c.seeds.clear();
            const toml::array &a = detail::as_array(node, k);
            for (std::size_t i = 0; i < a.size(); ++i) {
                const std::int64_t s = detail::as_int(a[i], k + "[" + std::to_string(i) + "]");
                if (s < 0) {
                    throw ConfigError(k + "[" + std::to_string(i) + "]", "seeds are non-negative");
                }
                c.seeds.push_back(static_cast<std::uint64_t>(s));
            }
            if (c.seeds.empty()) {
                throw ConfigError(k, "seed list must not be empty");
            }
        } else if (k == "psi0") {
            const toml::array &a = detail::as_array(node, k);
            if (a.size() != 4) {
                throw ConfigError(k, "psi0 is [re0, im0, re1, im1]");
            }
            double v[4];
            for (std::size_t i = 0; i < 4; ++i) {
                v[i] = detail::as_real(a[i], k + "[" + std::to_string(i) + "]");
            }
            c.psi0 = Vector(2);
            c.psi0 << Complex(v[0], v[1]), Complex(v[2], v[3]);
        } else if (k == "out_dir") {
            const auto s = node.value<std::string>();
            if (!s) {
                throw ConfigError(k, "expected a string");
            }
            c.out_dir = *s;
        } else if (k == "emit_plots") {
            const auto b = node.value<bool>();
            if (!b || !node.is_boolean()) {
                throw ConfigError(k, "expected true or false");
            }
            c.emit_plots = *b;
        } else if (k == "ode_step") {
            c.ode_step = detail::as_real(node, k);
        }
    }
    validate(c);
    return c;
}

inline ExperimentConfig parse_config(std::string_view text) {
    try {
        return from_table(toml::parse(text));
    } catch (const toml::parse_error &e) {
        std::ostringstream msg;
        msg << e.description() << " (line " << e.source().begin.line << ")";
        throw ConfigError("<toml>", msg.str());
    }
}

inline ExperimentConfig load_config(const std::filesystem::path &path) {
    try {
        return from_table(toml::parse_file(path.string()));
    } catch (const toml::parse_error &e) {
        std::ostringstream msg;
        msg << e.description() << " (line " << e.source().begin.line << ")";
        throw ConfigError("<toml>", msg.str());
    }
}

} // namespace nhd::experiment
