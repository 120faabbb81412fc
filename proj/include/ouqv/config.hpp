#pragma once

// Experiment configuration: JSON file -> validated ExperimentConfig, with a
// content digest over the semantically meaningful fields.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ouqv/basis.hpp"
#include "ouqv/spectrum.hpp"

namespace ouqv::cfg {

// Configuration or IO problem; maps to CLI exit code 1.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct AppendixConfig {
    double lambda = 1.0;
    double T = 1.0;
    std::vector<std::int64_t> n_list = {8, 64, 512};
    std::vector<int> m_list = {1, 2, 3, 4, 5, 6};
    int k = 2;
    std::vector<double> x_list = {2.0, 3.0, 4.0};
    std::int64_t gumbel_paths = 5000;
};

struct ExperimentConfig {
    nlohmann::json raw;

    // core
    spectrum::Family family = spectrum::Family::PowerLaw;
    double spec_a = 1.0;
    double spec_exponent = 0.25;
    std::vector<double> spec_values;
    int d = 1;
    int M = 6;            // truncation level
    int L = 8;            // spatial grid depth
    double T = 1.0;       // time horizon
    double h = 0.0;       // time step (defaults to T * 2^-10)
    basis::NormKind norm = basis::NormKind::SupNorm;
    std::int64_t n_paths = 500;
    std::uint64_t seed = 0;
    int workers = 1;
    std::string out_dir = "out";

    // experiment-specific
    int partition_depth = 10;
    std::vector<double> deltas;
    std::vector<double> t_list = {0.1, 0.5, 1.0};
    std::vector<std::string> functions = {"linear", "quadratic", "sigmoid-product", "trig-poly"};
    std::vector<std::int64_t> n_list = {1, 2, 4, 8};
    std::vector<double> initials;
    AppendixConfig appendix;

    spectrum::SpectrumSpec make_spectrum() const {
        switch (family) {
        case spectrum::Family::PowerLaw: return spectrum::SpectrumSpec::power_law(spec_a, spec_exponent, d);
        case spectrum::Family::LogLaw: return spectrum::SpectrumSpec::log_law(spec_a, spec_exponent, d);
        case spectrum::Family::Explicit: return spectrum::SpectrumSpec::explicit_list(spec_values, d);
        }
        throw ConfigError("spectrum.family: unknown family");
    }
};

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& j, const std::string& key,
                                     const std::string& path) {
    if (!j.contains(key)) throw ConfigError(path + ": missing required field");
    return j.at(key);
}

template <class T>
inline T get_or(const nlohmann::json& j, const std::string& key, T fallback,
                const std::string& path) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(path + ": wrong type");
    }
}

inline bool divides(double h, double value) {
    const double r = value / h;
    return std::fabs(r - std::llround(r)) < 1e-9;
}

} // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
    using detail::get_or;
    using detail::require;
    ExperimentConfig c;
    c.raw = j;

    const auto& sp = require(j, "spectrum", "spectrum");
    const std::string fam = require(sp, "family", "spectrum.family").get<std::string>();
    if (fam == "power-law") {
        c.family = spectrum::Family::PowerLaw;
        c.spec_a = get_or(sp, "a", 1.0, "spectrum.a");
        c.spec_exponent = get_or(sp, "alpha", 0.25, "spectrum.alpha");
    } else if (fam == "log-law") {
        c.family = spectrum::Family::LogLaw;
        c.spec_a = get_or(sp, "a", 1.0, "spectrum.a");
        c.spec_exponent = get_or(sp, "p", 1.0, "spectrum.p");
    } else if (fam == "explicit") {
        c.family = spectrum::Family::Explicit;
        c.spec_values = get_or(sp, "values", std::vector<double>{}, "spectrum.values");
        if (c.spec_values.empty()) throw ConfigError("spectrum.values: must be nonempty");
    } else {
        throw ConfigError("spectrum.family: expected power-law | log-law | explicit");
    }
    c.d = get_or(sp, "d", 1, "spectrum.d");
    if (c.d < 1) throw ConfigError("spectrum.d: must be >= 1");

    c.M = get_or(j, "truncation_level", 6, "truncation_level");
    if (c.M < 0 || c.M > 20) throw ConfigError("truncation_level: must be in [0, 20]");
    c.L = get_or(j, "grid_depth", c.M + 2, "grid_depth");
    if (c.L < c.M + 1) throw ConfigError("grid_depth: must be >= truncation_level + 1");
    if (c.L > 24) throw ConfigError("grid_depth: must be <= 24");

    c.T = get_or(j, "horizon", 1.0, "horizon");
    if (!(c.T > 0.0)) throw ConfigError("horizon: must be > 0");
    c.h = get_or(j, "step", c.T * std::ldexp(1.0, -10), "step");
    if (!(c.h > 0.0) || c.h > c.T) throw ConfigError("step: must be in (0, horizon]");
    if (!detail::divides(c.h, c.T)) throw ConfigError("step: must divide horizon");

    const std::string nk = get_or<std::string>(j, "norm", "sup", "norm");
    if (nk == "sup")
        c.norm = basis::NormKind::SupNorm;
    else if (nk == "l1")
        c.norm = basis::NormKind::L1Norm;
    else
        throw ConfigError("norm: expected sup | l1");

    c.n_paths = get_or<std::int64_t>(j, "n_paths", 500, "n_paths");
    if (c.n_paths < 1) throw ConfigError("n_paths: must be >= 1");
    if (!j.contains("seed")) throw ConfigError("seed: required (no implicit entropy)");
    c.seed = j.at("seed").get<std::uint64_t>();
    c.workers = get_or(j, "workers", 1, "workers");
    if (c.workers < 1) throw ConfigError("workers: must be >= 1");
    c.out_dir = get_or<std::string>(j, "out_dir", "out", "out_dir");

    if (j.contains("partition")) {
        c.partition_depth = get_or(j.at("partition"), "depth", 10, "partition.depth");
        if (c.partition_depth < 1 || c.partition_depth > 20)
            throw ConfigError("partition.depth: must be in [1, 20]");
    }
    const double cell = c.T * std::ldexp(1.0, -c.partition_depth);
    if (!detail::divides(c.h, cell))
        throw ConfigError("partition.depth: step must divide the partition cell width");

    c.deltas = get_or(j, "deltas", std::vector<double>{}, "deltas");
    for (std::size_t q = 0; q < c.deltas.size(); ++q) {
        if (!(c.deltas[q] > 0.0) || !detail::divides(c.h, c.deltas[q]))
            throw ConfigError("deltas[" + std::to_string(q) + "]: must be a positive multiple of step");
    }
    c.t_list = get_or(j, "t_list", c.t_list, "t_list");
    c.functions = get_or(j, "functions", c.functions, "functions");
    c.n_list = get_or(j, "n_list", c.n_list, "n_list");
    c.initials = get_or(j, "initials", std::vector<double>{}, "initials");

    if (j.contains("appendix")) {
        const auto& ap = j.at("appendix");
        c.appendix.lambda = get_or(ap, "lambda", 1.0, "appendix.lambda");
        if (c.appendix.lambda < 1.0) throw ConfigError("appendix.lambda: must be >= 1");
        c.appendix.T = get_or(ap, "T", 1.0, "appendix.T");
        if (!(c.appendix.T > 0.0)) throw ConfigError("appendix.T: must be > 0");
        c.appendix.n_list = get_or(ap, "n_list", c.appendix.n_list, "appendix.n_list");
        c.appendix.m_list = get_or(ap, "m_list", c.appendix.m_list, "appendix.m_list");
        c.appendix.k = get_or(ap, "k", 2, "appendix.k");
        if (c.appendix.k < 1 || c.appendix.k > 4) throw ConfigError("appendix.k: must be in 1..4");
        c.appendix.x_list = get_or(ap, "x_list", c.appendix.x_list, "appendix.x_list");
        c.appendix.gumbel_paths = get_or<std::int64_t>(ap, "gumbel_paths", 5000, "appendix.gumbel_paths");
    }

    c.make_spectrum(); // surfaces spectrum parameter errors at parse time
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: parse failure in '" + path + "': " + e.what());
    }
    return parse_config(j);
}

// FNV-1a over the canonical dump of the semantically meaningful fields
// (worker count and output directory do not change any numeric result).
inline std::uint64_t config_digest(const ExperimentConfig& c) {
    nlohmann::json j = c.raw;
    j.erase("workers");
    j.erase("out_dir");
    const std::string s = j.dump();
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char ch : s) {
        hash ^= ch;
        hash *= 0x100000001b3ull;
    }
    return hash;
}

} // namespace ouqv::cfg
