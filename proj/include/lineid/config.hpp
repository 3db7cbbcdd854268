#pragma once

// Run configuration shared by the command-line subcommands.
//
// {
//   "line": "untransposed.json" | {inline line JSON},   default: built-in untransposed line
//   "reference": path | {inline line JSON},             optional, for error tables
//   "n_samples": 200, "start_time_us": 0, "sending_voltage_kv": 230,
//   "profile": {"period_hours", "min_fraction", "max_fraction", "sample_interval_minutes",
//               "unbalance": [c, c, c], "power_factor", "capacity_mva",
//               "phase_shift_hours": [h, h, h], "time_offset", "unbalance_target_pct"},
//   "noise": {"sigma_fraction", "seed"},
//   "method": "single" | "double" | "optimal",
//   "screening": {"threshold", "max_iterations"},
//   "sweep": {"lengths_km", "n_samples_per_set", "m_sets", "base_length_km", "methods", "threads"},
//   "output": path, "summary_output": path
// }
//
// Relative paths are resolved against the directory holding the config file.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lineid/baddata.hpp"
#include "lineid/experiments.hpp"
#include "lineid/fixtures.hpp"
#include "lineid/io.hpp"
#include "lineid/simulator.hpp"

namespace lineid {

struct SweepSection {
    std::vector<double> lengths_km = SweepConfig{}.lengths_km;
    std::size_t n_samples_per_set = 200;
    std::size_t m_sets = 100;
    double base_length_km = fixtures::reference_length_km;
    std::vector<Method> methods{all_methods.begin(), all_methods.end()};
    unsigned threads = 0;
};

struct RunConfig {
    LineParameters line = fixtures::untransposed_line();
    std::optional<LineParameters> reference;
    std::size_t n_samples = 200;
    std::int64_t start_time_us = 0;
    double sending_voltage_kv = 230.0;
    LoadProfile profile;
    std::optional<double> unbalance_target_pct;
    NoiseSpec noise;
    Method method = Method::Optimal;
    ScreeningOptions screening;
    SweepSection sweep;
    std::optional<std::string> output;
    std::optional<std::string> summary_output;

    PhaseVector sending_voltage() const { return balanced_voltage(sending_voltage_kv * 1e3); }

    void validate() const {
        if (n_samples < 1) fail(ErrorKind::InvalidArgument, "config: n_samples must be at least 1");
        if (!(sending_voltage_kv > 0.0)) fail(ErrorKind::InvalidArgument, "config: sending_voltage_kv must be positive");
        profile.validate();
        if (unbalance_target_pct && !(*unbalance_target_pct >= 0.0))
            fail(ErrorKind::InvalidArgument, "config: unbalance_target_pct must be non-negative");
        if (!(noise.sigma_fraction >= 0.0)) fail(ErrorKind::InvalidArgument, "config: sigma_fraction must be >= 0");
        if (!(screening.threshold > 0.0)) fail(ErrorKind::InvalidArgument, "config: threshold must be positive");
        if (screening.max_iterations < 1) fail(ErrorKind::InvalidArgument, "config: max_iterations must be >= 1");
        SweepConfig probe;
        probe.lengths_km = sweep.lengths_km;
        probe.n_samples_per_set = sweep.n_samples_per_set;
        probe.m_sets = sweep.m_sets;
        probe.base_length_km = sweep.base_length_km;
        probe.methods = sweep.methods;
        probe.validate();
    }

    /// Load profile for `line`, calibrating the unbalance when a target is set.
    LoadProfile resolved_profile(const LineParameters& for_line, std::size_t n) const {
        if (!unbalance_target_pct) return profile;
        return calibrate_unbalance(for_line, profile, *unbalance_target_pct, n, sending_voltage());
    }

    SweepConfig sweep_config() const {
        SweepConfig c;
        c.lengths_km = sweep.lengths_km;
        c.n_samples_per_set = sweep.n_samples_per_set;
        c.m_sets = sweep.m_sets;
        c.noise = noise;
        c.base_line = line;
        c.base_length_km = sweep.base_length_km;
        c.methods = sweep.methods;
        c.sending_voltage = sending_voltage();
        c.profile = resolved_profile(line, sweep.n_samples_per_set);
        c.threads = sweep.threads;
        return c;
    }
};

namespace detail {

inline std::size_t json_count(const io::Json& j, const std::string& where) {
    if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() && j.get<std::int64_t>() < 0))
        fail(ErrorKind::Parse, where + ": expected a non-negative integer");
    return j.get<std::size_t>();
}

inline std::array<double, 3> json_triple(const io::Json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 3) fail(ErrorKind::Parse, where + ": expected 3 numbers");
    return {io::json_number(j[0], where + "[0]"), io::json_number(j[1], where + "[1]"),
            io::json_number(j[2], where + "[2]")};
}

inline LineParameters json_line(const io::Json& j, const std::filesystem::path& base, const std::string& where) {
    if (j.is_string()) {
        std::filesystem::path p(j.get<std::string>());
        if (p.is_relative()) p = base / p;
        return io::load_line_parameters(p.string());
    }
    return io::line_from_json(j, where);
}

} // namespace detail

/// Parses and validates a RunConfig; unknown keys are rejected at every level.
inline RunConfig run_config_from_json(const io::Json& j, const std::filesystem::path& base_dir = {},
                                      const std::string& where = "config") {
    using io::json_number;
    io::reject_unknown_keys(j, {"line", "reference", "n_samples", "start_time_us", "sending_voltage_kv", "profile",
                                "noise", "method", "screening", "sweep", "output", "summary_output"},
                            where);
    RunConfig c;
    if (j.contains("line")) c.line = detail::json_line(j["line"], base_dir, where + ".line");
    if (j.contains("reference")) c.reference = detail::json_line(j["reference"], base_dir, where + ".reference");
    if (j.contains("n_samples")) c.n_samples = detail::json_count(j["n_samples"], where + ".n_samples");
    if (j.contains("start_time_us")) {
        if (!j["start_time_us"].is_number_integer()) fail(ErrorKind::Parse, where + ".start_time_us: expected an integer");
        c.start_time_us = j["start_time_us"].get<std::int64_t>();
    }
    if (j.contains("sending_voltage_kv"))
        c.sending_voltage_kv = json_number(j["sending_voltage_kv"], where + ".sending_voltage_kv");

    if (j.contains("profile")) {
        const auto& p = j["profile"];
        const std::string w = where + ".profile";
        io::reject_unknown_keys(p, {"period_hours", "min_fraction", "max_fraction", "sample_interval_minutes",
                                    "unbalance", "power_factor", "capacity_mva", "phase_shift_hours", "time_offset",
                                    "unbalance_target_pct"},
                                w);
        auto num = [&](const char* k, double& dst) {
            if (p.contains(k)) dst = json_number(p[k], w + "." + k);
        };
        num("period_hours", c.profile.period_hours);
        num("min_fraction", c.profile.min_fraction);
        num("max_fraction", c.profile.max_fraction);
        num("sample_interval_minutes", c.profile.sample_interval_minutes);
        num("power_factor", c.profile.power_factor);
        num("time_offset", c.profile.time_offset);
        if (p.contains("capacity_mva")) c.profile.capacity_va = json_number(p["capacity_mva"], w + ".capacity_mva") * 1e6;
        if (p.contains("unbalance")) {
            const auto& u = p["unbalance"];
            if (!u.is_array() || u.size() != 3) fail(ErrorKind::Parse, w + ".unbalance: expected 3 entries");
            for (std::size_t k = 0; k < 3; ++k)
                c.profile.unbalance[k] = io::json_complex(u[k], w + ".unbalance[" + std::to_string(k) + "]");
        }
        if (p.contains("phase_shift_hours"))
            c.profile.phase_shift_hours = detail::json_triple(p["phase_shift_hours"], w + ".phase_shift_hours");
        if (p.contains("unbalance_target_pct"))
            c.unbalance_target_pct = json_number(p["unbalance_target_pct"], w + ".unbalance_target_pct");
    }
    if (j.contains("noise")) {
        const auto& n = j["noise"];
        const std::string w = where + ".noise";
        io::reject_unknown_keys(n, {"sigma_fraction", "seed"}, w);
        if (n.contains("sigma_fraction")) c.noise.sigma_fraction = json_number(n["sigma_fraction"], w + ".sigma_fraction");
        if (n.contains("seed")) {
            if (!n["seed"].is_number_unsigned()) fail(ErrorKind::Parse, w + ".seed: expected an unsigned 64-bit integer");
            c.noise.seed = n["seed"].get<std::uint64_t>();
        }
    }
    if (j.contains("method")) {
        if (!j["method"].is_string()) fail(ErrorKind::Parse, where + ".method: expected a string");
        c.method = parse_method(j["method"].get<std::string>());
    }
    if (j.contains("screening")) {
        const auto& s = j["screening"];
        const std::string w = where + ".screening";
        io::reject_unknown_keys(s, {"threshold", "max_iterations"}, w);
        if (s.contains("threshold")) c.screening.threshold = json_number(s["threshold"], w + ".threshold");
        if (s.contains("max_iterations"))
            c.screening.max_iterations = detail::json_count(s["max_iterations"], w + ".max_iterations");
    }
    if (j.contains("sweep")) {
        const auto& s = j["sweep"];
        const std::string w = where + ".sweep";
        io::reject_unknown_keys(s, {"lengths_km", "n_samples_per_set", "m_sets", "base_length_km", "methods", "threads"},
                                w);
        if (s.contains("lengths_km")) {
            if (!s["lengths_km"].is_array()) fail(ErrorKind::Parse, w + ".lengths_km: expected an array");
            c.sweep.lengths_km.clear();
            for (std::size_t k = 0; k < s["lengths_km"].size(); ++k)
                c.sweep.lengths_km.push_back(json_number(s["lengths_km"][k], w + ".lengths_km[" + std::to_string(k) + "]"));
        }
        if (s.contains("n_samples_per_set"))
            c.sweep.n_samples_per_set = detail::json_count(s["n_samples_per_set"], w + ".n_samples_per_set");
        if (s.contains("m_sets")) c.sweep.m_sets = detail::json_count(s["m_sets"], w + ".m_sets");
        if (s.contains("base_length_km")) c.sweep.base_length_km = json_number(s["base_length_km"], w + ".base_length_km");
        if (s.contains("threads"))
            c.sweep.threads = static_cast<unsigned>(detail::json_count(s["threads"], w + ".threads"));
        if (s.contains("methods")) {
            if (!s["methods"].is_array()) fail(ErrorKind::Parse, w + ".methods: expected an array");
            c.sweep.methods.clear();
            for (const auto& m : s["methods"]) {
                if (!m.is_string()) fail(ErrorKind::Parse, w + ".methods: expected strings");
                c.sweep.methods.push_back(parse_method(m.get<std::string>()));
            }
        }
    }
    auto path_key = [&](const char* k, std::optional<std::string>& dst) {
        if (!j.contains(k)) return;
        if (!j[k].is_string()) fail(ErrorKind::Parse, where + "." + k + ": expected a string");
        std::filesystem::path p(j[k].get<std::string>());
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        dst = p.string();
    };
    path_key("output", c.output);
    path_key("summary_output", c.summary_output);

    try {
        c.validate();
    } catch (const Error& e) {
        throw Error(ErrorKind::Parse, e.what());
    }
    return c;
}

inline RunConfig load_run_config(const std::string& path) {
    const io::Json j = io::parse_json(io::read_text_file(path), path);
    return run_config_from_json(j, std::filesystem::path(path).parent_path(), path);
}

} // namespace lineid
