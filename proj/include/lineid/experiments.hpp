#pragma once

// Monte Carlo studies: noiseless method comparison and the error-SD versus
// line-length sweep.

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "lineid/core.hpp"
#include "lineid/estimators.hpp"
#include "lineid/simulator.hpp"

namespace lineid {

enum class Method { Single, Double, Optimal };
enum class Parameter { R1, X1, B1 };

inline constexpr std::array<Method, 3> all_methods{Method::Single, Method::Double, Method::Optimal};
inline constexpr std::array<Parameter, 3> all_parameters{Parameter::R1, Parameter::X1, Parameter::B1};

inline std::string_view to_string(Method m) {
    switch (m) {
        case Method::Single: return "single";
        case Method::Double: return "double";
        case Method::Optimal: return "optimal";
    }
    return "?";
}

inline std::string_view to_string(Parameter p) {
    switch (p) {
        case Parameter::R1: return "R1";
        case Parameter::X1: return "X1";
        case Parameter::B1: return "B1";
    }
    return "?";
}

inline Method parse_method(std::string_view s) {
    for (Method m : all_methods)
        if (to_string(m) == s) return m;
    fail(ErrorKind::Parse, "unknown method '" + std::string(s) + "' (expected single|double|optimal)");
}

inline Parameter parse_parameter(std::string_view s) {
    for (Parameter p : all_parameters)
        if (to_string(p) == s) return p;
    fail(ErrorKind::Parse, "unknown parameter '" + std::string(s) + "'");
}

/// Positive-sequence R1, X1, B1 of a line.
struct PositiveSequenceValues {
    double r1 = 0.0, x1 = 0.0, b1 = 0.0;

    double get(Parameter p) const { return p == Parameter::R1 ? r1 : p == Parameter::X1 ? x1 : b1; }

    static PositiveSequenceValues of(const SequenceParameters& s) { return {s.z1().real(), s.z1().imag(), s.b1()}; }
    static PositiveSequenceValues of(const PositiveSequenceEstimate& e) { return {e.r1(), e.x1(), e.b1()}; }
};

inline double percent_error(double estimate, double truth) { return (estimate - truth) / truth * 100.0; }

/// Receiving-end load used by the published case studies: the default
/// diurnal profile with unbalance calibrated to `target_pct`.
inline LoadProfile case_study_profile(const LineParameters& line, double target_pct, std::size_t n_samples,
                                      const PhaseVector& sending_voltage = balanced_voltage()) {
    if (target_pct == 0.0) return LoadProfile{};
    return calibrate_unbalance(line, LoadProfile{}, target_pct, n_samples, sending_voltage);
}

// ---------------------------------------------------------------------------
// Method comparison

struct MethodComparisonRow {
    Method method;
    PositiveSequenceValues estimate;
    double r1_error_pct = 0.0, x1_error_pct = 0.0, b1_error_pct = 0.0;
    std::optional<std::string> failure;
};

struct MethodComparison {
    PositiveSequenceValues reference;
    SequenceParameters reference_sequence;
    double degree_of_unbalance_pct = 0.0;
    std::vector<MethodComparisonRow> rows;
    std::optional<SequenceParameters> optimal_sequence; // full estimated sequence matrices

    const MethodComparisonRow& row(Method m) const {
        for (const auto& r : rows)
            if (r.method == m) return r;
        fail(ErrorKind::InvalidArgument, "method missing from comparison");
    }
};

/// Noiseless comparison of the three methods. Single: mean of per-sample
/// estimates; double: mean over consecutive pairs; optimal: one fit over all samples.
inline MethodComparison run_method_comparison(const LineParameters& line, double unbalance_target_pct, std::size_t n,
                                              const PhaseVector& sending_voltage = balanced_voltage()) {
    if (n < 2) fail(ErrorKind::InvalidArgument, "method comparison needs at least two samples");
    const LoadProfile profile = case_study_profile(line, unbalance_target_pct, n, sending_voltage);
    const auto series = generate_series(line, profile, n, sending_voltage);

    MethodComparison out;
    out.reference_sequence = to_sequence(line);
    out.reference = PositiveSequenceValues::of(out.reference_sequence);
    out.degree_of_unbalance_pct = mean_degree_of_unbalance(series);

    auto row_from = [&](Method m, const PositiveSequenceValues& v) {
        MethodComparisonRow r;
        r.method = m;
        r.estimate = v;
        r.r1_error_pct = percent_error(v.r1, out.reference.r1);
        r.x1_error_pct = percent_error(v.x1, out.reference.x1);
        r.b1_error_pct = percent_error(v.b1, out.reference.b1);
        return r;
    };
    for (Method m : all_methods) {
        try {
            switch (m) {
                case Method::Single: {
                    const auto e = estimate_single_each(series);
                    out.rows.push_back(row_from(m, PositiveSequenceValues::of(mean_estimate(e))));
                    break;
                }
                case Method::Double: {
                    std::vector<PositiveSequenceEstimate> e;
                    for (const auto& d : estimate_double_consecutive(series)) e.push_back(d.estimate);
                    out.rows.push_back(row_from(m, PositiveSequenceValues::of(mean_estimate(e))));
                    break;
                }
                case Method::Optimal: {
                    const auto est = estimate_optimal(series);
                    out.optimal_sequence = est.sequence;
                    out.rows.push_back(row_from(m, PositiveSequenceValues::of(est.sequence)));
                    break;
                }
            }
        } catch (const Error& e) {
            MethodComparisonRow r;
            r.method = m;
            r.failure = std::string(to_string(e.kind())) + ": " + e.what();
            out.rows.push_back(r);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Length sweep

struct SweepConfig {
    std::vector<double> lengths_km{10.0, 14.5, 25.0, 50.0, 75.0, 100.0, 150.0, 200.0, 250.0};
    std::size_t n_samples_per_set = 200;
    std::size_t m_sets = 100;
    NoiseSpec noise{0.01, 20100};
    LineParameters base_line;
    double base_length_km = 14.5;
    std::vector<Method> methods{all_methods.begin(), all_methods.end()};
    LoadProfile profile;
    PhaseVector sending_voltage = balanced_voltage();
    unsigned threads = 0; // 0: hardware concurrency

    void validate() const {
        if (lengths_km.empty()) fail(ErrorKind::InvalidArgument, "sweep needs at least one length");
        for (double l : lengths_km)
            if (!(l > 0.0)) fail(ErrorKind::InvalidArgument, "sweep lengths must be positive");
        if (m_sets < 2) fail(ErrorKind::InvalidArgument, "sweep needs m_sets >= 2");
        if (n_samples_per_set < 2) fail(ErrorKind::InvalidArgument, "sweep needs at least two samples per set");
        if (!(base_length_km > 0.0)) fail(ErrorKind::InvalidArgument, "base length must be positive");
        if (methods.empty()) fail(ErrorKind::InvalidArgument, "sweep needs at least one method");
        profile.validate();
    }
};

struct SweepRow {
    double length_km = 0.0;
    Method method = Method::Optimal;
    Parameter parameter = Parameter::X1;
    double mean_err_pct = 0.0;
    double sd_err_pct = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    std::size_t count = 0;    // error samples aggregated
    std::size_t failures = 0; // sets on which the method raised an error

    bool operator==(const SweepRow&) const = default;
};

struct SweepFailure {
    double length_km;
    Method method;
    std::size_t set;
    std::string message;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<SweepFailure> failures;

    const SweepRow* find(double length_km, Method m, Parameter p) const {
        for (const auto& r : rows)
            if (r.length_km == length_km && r.method == m && r.parameter == p) return &r;
        return nullptr;
    }
};

namespace detail {

struct ErrorAccumulator {
    std::vector<double> values;

    SweepRow summarise() const {
        SweepRow r;
        r.count = values.size();
        if (values.empty()) {
            r.mean_err_pct = r.sd_err_pct = r.ci_lo = r.ci_hi = std::numeric_limits<double>::quiet_NaN();
            return r;
        }
        double sum = 0.0;
        for (double v : values) sum += v;
        const double mean = sum / static_cast<double>(values.size());
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        const double sd = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
        const double half = 1.96 * sd / std::sqrt(static_cast<double>(values.size()));
        r.mean_err_pct = mean;
        r.sd_err_pct = sd;
        r.ci_lo = mean - half;
        r.ci_hi = mean + half;
        return r;
    }
};

// Errors produced by one Monte Carlo set for one method, per parameter.
struct SetOutcome {
    std::array<std::vector<double>, 3> errors;
    std::optional<std::string> failure;
};

inline SetOutcome run_set(Method method, std::span<const SampleRecord> noisy, const PositiveSequenceValues& truth) {
    SetOutcome out;
    auto push = [&](const PositiveSequenceValues& v) {
        for (std::size_t p = 0; p < 3; ++p)
            out.errors[p].push_back(percent_error(v.get(all_parameters[p]), truth.get(all_parameters[p])));
    };
    try {
        switch (method) {
            case Method::Single:
                for (const auto& e : estimate_single_each(noisy)) push(PositiveSequenceValues::of(e));
                break;
            case Method::Double: {
                const auto [i, j] = max_excitation_pair(noisy);
                push(PositiveSequenceValues::of(estimate_double(noisy[i], noisy[j]).estimate));
                break;
            }
            case Method::Optimal:
                push(PositiveSequenceValues::of(estimate_optimal(noisy).sequence));
                break;
        }
    } catch (const Error& e) {
        out.errors = {};
        out.failure = std::string(to_string(e.kind())) + ": " + e.what();
    }
    return out;
}

} // namespace detail

/// Error SD of R1/X1/B1 versus length. For each length the base line is
/// scaled, one noiseless series generated, and `m_sets` noisy copies drawn
/// with sub-seeds mix_seed(mix_seed(seed, length index), set). Aggregation:
/// single pools every per-sample estimate; double takes the best-excited pair
/// of each set; optimal fits each set once. Deterministic for a fixed seed
/// regardless of thread count.
inline SweepResult run_length_sweep(const SweepConfig& config) {
    config.validate();
    const std::size_t n_len = config.lengths_km.size();
    const std::size_t n_meth = config.methods.size();

    struct LengthCase {
        std::vector<SampleRecord> clean;
        PositiveSequenceValues truth;
    };
    std::vector<LengthCase> cases(n_len);
    for (std::size_t l = 0; l < n_len; ++l) {
        const LineParameters line = scale_length(config.base_line, config.lengths_km[l] / config.base_length_km);
        cases[l].clean = generate_series(line, config.profile, config.n_samples_per_set, config.sending_voltage);
        cases[l].truth = PositiveSequenceValues::of(to_sequence(line));
    }

    // One work unit per (length, set); each writes only its own slot.
    const std::size_t units = n_len * config.m_sets;
    std::vector<std::vector<detail::SetOutcome>> outcomes(units);
    auto work = [&](std::size_t u) {
        const std::size_t l = u / config.m_sets;
        const std::size_t s = u % config.m_sets;
        const NoiseSpec spec{config.noise.sigma_fraction, mix_seed(mix_seed(config.noise.seed, l), s)};
        const auto noisy = add_noise(cases[l].clean, spec);
        auto& slot = outcomes[u];
        slot.reserve(n_meth);
        for (Method m : config.methods) slot.push_back(detail::run_set(m, noisy, cases[l].truth));
    };

    unsigned threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, units));
    if (threads <= 1) {
        for (std::size_t u = 0; u < units; ++u) work(u);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (std::size_t u = next++; u < units; u = next++) work(u);
            });
    }

    SweepResult result;
    for (std::size_t l = 0; l < n_len; ++l) {
        for (std::size_t mi = 0; mi < n_meth; ++mi) {
            std::array<detail::ErrorAccumulator, 3> acc;
            std::size_t failures = 0;
            for (std::size_t s = 0; s < config.m_sets; ++s) {
                const auto& o = outcomes[l * config.m_sets + s][mi];
                if (o.failure) {
                    ++failures;
                    result.failures.push_back({config.lengths_km[l], config.methods[mi], s, *o.failure});
                    continue;
                }
                for (std::size_t p = 0; p < 3; ++p)
                    acc[p].values.insert(acc[p].values.end(), o.errors[p].begin(), o.errors[p].end());
            }
            for (std::size_t p = 0; p < 3; ++p) {
                SweepRow row = acc[p].summarise();
                row.length_km = config.lengths_km[l];
                row.method = config.methods[mi];
                row.parameter = all_parameters[p];
                row.failures = failures;
                result.rows.push_back(row);
            }
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Sweep CSV

inline constexpr std::string_view sweep_csv_header = "length_km,method,parameter,mean_err_pct,sd_err_pct,ci_lo,ci_hi";

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

inline double parse_double(std::string_view s, const std::string& where) {
    double v = 0.0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    if (!s.empty() && *first == '+') ++first;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) {
        // from_chars rejects "nan"/"inf" spellings produced by some writers
        if (s == "nan" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        fail(ErrorKind::Parse, where + ": invalid number '" + std::string(s) + "'");
    }
    return v;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::string sweep_to_csv(const SweepResult& result) {
    if (result.rows.empty()) fail(ErrorKind::InvalidArgument, "sweep result is empty");
    std::string out(sweep_csv_header);
    out += '\n';
    for (const auto& r : result.rows) {
        out += format_double(r.length_km) + ',' + std::string(to_string(r.method)) + ',' +
               std::string(to_string(r.parameter)) + ',' + format_double(r.mean_err_pct) + ',' +
               format_double(r.sd_err_pct) + ',' + format_double(r.ci_lo) + ',' + format_double(r.ci_hi) + '\n';
    }
    return out;
}

inline void export_sweep(const SweepResult& result, const std::string& path) {
    const std::string text = sweep_to_csv(result);
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorKind::Io, "cannot open '" + path + "' for writing");
    f << text;
    if (!f) fail(ErrorKind::Io, "write to '" + path + "' failed");
}

/// Parses sweep CSV text; `count` and `failures` are not part of the format.
inline SweepResult parse_sweep_csv(std::string_view text) {
    SweepResult result;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++line_no;
        if (line_no == 1) {
            if (line != sweep_csv_header) fail(ErrorKind::Parse, "sweep CSV line 1: unexpected header");
            continue;
        }
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        const std::string where = "sweep CSV line " + std::to_string(line_no);
        if (f.size() != 7) fail(ErrorKind::Parse, where + ": expected 7 fields");
        SweepRow r;
        r.length_km = parse_double(f[0], where);
        r.method = parse_method(f[1]);
        r.parameter = parse_parameter(f[2]);
        r.mean_err_pct = parse_double(f[3], where);
        r.sd_err_pct = parse_double(f[4], where);
        r.ci_lo = parse_double(f[5], where);
        r.ci_hi = parse_double(f[6], where);
        result.rows.push_back(r);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Anchor checks on a sweep result

struct AnchorCheck {
    std::string name;
    std::optional<bool> passed; // empty: the sweep lacks the rows needed
    std::string detail;
};

/// X1 error SD per length for one method, sorted by length; lengths with
/// no aggregated estimates are skipped.
inline std::vector<std::pair<double, double>> x1_sd_by_length(const SweepResult& result, Method m) {
    std::vector<std::pair<double, double>> out;
    for (const auto& r : result.rows)
        if (r.method == m && r.parameter == Parameter::X1 && r.count > 0) out.emplace_back(r.length_km, r.sd_err_pct);
    std::sort(out.begin(), out.end());
    return out;
}

/// Monotone trend check allowing each step to rise by `rel_tol` of the previous value.
inline bool non_increasing(const std::vector<std::pair<double, double>>& series, double rel_tol = 0.10) {
    for (std::size_t k = 1; k < series.size(); ++k)
        if (series[k].second > series[k - 1].second * (1.0 + rel_tol)) return false;
    return true;
}

inline std::vector<AnchorCheck> evaluate_anchors(const SweepResult& result) {
    std::vector<AnchorCheck> out;
    auto sd = [&](double len, Method m) -> std::optional<double> {
        const SweepRow* r = result.find(len, m, Parameter::X1);
        if (!r || r->count == 0) return std::nullopt;
        return r->sd_err_pct;
    };
    auto band = [&](Method m) {
        AnchorCheck c{std::string(to_string(m)) + "@150km X1 SD within [5%, 25%]", std::nullopt, "missing"};
        if (const auto v = sd(150.0, m)) {
            c.passed = *v >= 5.0 && *v <= 25.0;
            c.detail = "sd_err_pct=" + format_double(*v);
        }
        return c;
    };

    AnchorCheck a{"optimal@150km X1 SD < 1%", std::nullopt, "missing"};
    if (const auto v = sd(150.0, Method::Optimal)) {
        a.passed = *v < 1.0;
        a.detail = "sd_err_pct=" + format_double(*v);
    }
    out.push_back(a);
    out.push_back(band(Method::Single));
    out.push_back(band(Method::Double));

    AnchorCheck order{"14.5km X1 SD ordering optimal < double < single", std::nullopt, "missing"};
    const auto o = sd(14.5, Method::Optimal), d = sd(14.5, Method::Double), s = sd(14.5, Method::Single);
    if (o && d && s) {
        order.passed = *o < *d && *d < *s;
        order.detail = "optimal=" + format_double(*o) + " double=" + format_double(*d) + " single=" + format_double(*s);
    }
    out.push_back(order);

    AnchorCheck mono{"optimal X1 SD non-increasing in length (10% step tolerance)", std::nullopt, "missing"};
    const auto series = x1_sd_by_length(result, Method::Optimal);
    if (series.size() >= 2) {
        mono.passed = non_increasing(series);
        mono.detail.clear();
        for (const auto& [len, v] : series)
            mono.detail += (mono.detail.empty() ? "" : " ") + format_double(len) + "km:" + format_double(v);
    }
    out.push_back(mono);
    return out;
}

} // namespace lineid
