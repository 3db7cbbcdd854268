#pragma once

// JSON reports emitted by the command-line subcommands.

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lineid/baddata.hpp"
#include "lineid/estimators.hpp"
#include "lineid/experiments.hpp"
#include "lineid/io.hpp"

namespace lineid::report {

using io::Json;

inline Json error_json(const Error& e) {
    Json j{{"error", std::string(to_string(e.kind()))}, {"message", e.what()}};
    if (e.sample_index()) j["sample_index"] = *e.sample_index();
    if (e.condition()) j["condition"] = *e.condition();
    return j;
}

inline Json positive_sequence_json(const PositiveSequenceEstimate& e) {
    return Json{{"z1", io::to_json(e.z1)}, {"y1", io::to_json(e.y1)}, {"r1", e.r1()}, {"x1", e.x1()}, {"b1", e.b1()}};
}

inline Json positive_sequence_json(const PositiveSequenceValues& v) {
    return Json{{"r1", v.r1}, {"x1", v.x1}, {"b1", v.b1}};
}

inline Json line_estimate_json(const LineParameters& line) {
    const SequenceParameters seq = to_sequence(line);
    return Json{{"z_abc", io::matrix_to_json(line.z_abc())},
                {"b_abc", io::matrix_to_json(line.b_abc())},
                {"z_012", io::matrix_to_json(seq.z_012)},
                {"b_012", io::matrix_to_json(seq.b_012)},
                {"positive_sequence", positive_sequence_json(PositiveSequenceValues::of(seq))}};
}

/// Entry-wise |estimate - reference| / |reference| in percent; null where the
/// reference entry is negligible against the largest diagonal entry.
inline Json entrywise_error_pct(const Matrix3c& estimate, const Matrix3c& reference) {
    const double diag = reference.diagonal().cwiseAbs().maxCoeff();
    Json rows = Json::array();
    for (int i = 0; i < 3; ++i) {
        Json row = Json::array();
        for (int k = 0; k < 3; ++k) {
            const double ref = std::abs(reference(i, k));
            if (!(ref > 1e-9 * diag))
                row.push_back(nullptr);
            else
                row.push_back(std::abs(estimate(i, k) - reference(i, k)) / ref * 100.0);
        }
        rows.push_back(row);
    }
    return rows;
}

inline Json positive_sequence_errors(const PositiveSequenceValues& est, const PositiveSequenceValues& ref) {
    return Json{{"r1_pct", percent_error(est.r1, ref.r1)},
                {"x1_pct", percent_error(est.x1, ref.x1)},
                {"b1_pct", percent_error(est.b1, ref.b1)}};
}

inline Json full_errors(const LineParameters& est, const LineParameters& ref) {
    const SequenceParameters e = to_sequence(est), r = to_sequence(ref);
    return Json{{"positive_sequence", positive_sequence_errors(PositiveSequenceValues::of(e), PositiveSequenceValues::of(r))},
                {"z_012_pct", entrywise_error_pct(e.z_012, r.z_012)},
                {"b_012_pct", entrywise_error_pct(e.b_012, r.b_012)},
                {"z_abc_pct", entrywise_error_pct(est.z_abc(), ref.z_abc())},
                {"b_abc_pct", entrywise_error_pct(est.b_abc().cast<Complex>(), ref.b_abc().cast<Complex>())}};
}

inline Json optimal_report(std::span<const SampleRecord> records, const OptimalEstimate& est,
                           const std::optional<LineParameters>& reference) {
    Json scaled = Json::array();
    for (std::size_t k = 0; k < records.size(); ++k)
        scaled.push_back(Json{{"timestamp_us", records[k].timestamp_us}, {"scaled_residual", est.scaled_residuals[k]}});
    Json j{{"method", "optimal"},
           {"samples", records.size()},
           {"estimate", line_estimate_json(est.line)},
           {"diagnostics",
            Json{{"residual_norm", est.residual_norm}, {"condition", est.condition}, {"per_sample", scaled}}}};
    if (reference) {
        j["reference"] = line_estimate_json(*reference);
        j["errors"] = full_errors(est.line, *reference);
    }
    return j;
}

inline Json single_report(std::span<const SampleRecord> records, const std::vector<PositiveSequenceEstimate>& each,
                          const std::optional<LineParameters>& reference) {
    Json list = Json::array();
    for (std::size_t k = 0; k < each.size(); ++k) {
        Json e = positive_sequence_json(each[k]);
        e["timestamp_us"] = records[k].timestamp_us;
        list.push_back(e);
    }
    const PositiveSequenceEstimate mean = mean_estimate(each);
    Json j{{"method", "single"},
           {"samples", records.size()},
           {"estimate", positive_sequence_json(mean)},
           {"per_sample", list}};
    if (reference) {
        const auto ref = PositiveSequenceValues::of(to_sequence(*reference));
        j["reference"] = positive_sequence_json(ref);
        j["errors"] = Json{{"positive_sequence", positive_sequence_errors(PositiveSequenceValues::of(mean), ref)}};
    }
    return j;
}

inline Json double_report(std::span<const SampleRecord> records, const std::vector<DoubleEstimate>& pairs,
                          const std::optional<LineParameters>& reference) {
    Json list = Json::array();
    std::vector<PositiveSequenceEstimate> estimates;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto& p = pairs[k];
        Json e = positive_sequence_json(p.estimate);
        e["timestamps_us"] = Json::array({records[k].timestamp_us, records[k + 1].timestamp_us});
        e["chain"] = Json{{"a", io::to_json(p.a)}, {"b", io::to_json(p.b)}, {"c", io::to_json(p.c)}, {"d", io::to_json(p.d)}};
        e["c_mismatch"] = p.c_mismatch;
        e["d_mismatch"] = p.d_mismatch;
        list.push_back(e);
        estimates.push_back(p.estimate);
    }
    const PositiveSequenceEstimate mean = mean_estimate(estimates);
    Json j{{"method", "double"},
           {"samples", records.size()},
           {"pairing", "consecutive"},
           {"estimate", positive_sequence_json(mean)},
           {"per_pair", list}};
    if (reference) {
        const auto ref = PositiveSequenceValues::of(to_sequence(*reference));
        j["reference"] = positive_sequence_json(ref);
        j["errors"] = Json{{"positive_sequence", positive_sequence_errors(PositiveSequenceValues::of(mean), ref)}};
    }
    return j;
}

inline Json screening_report(std::span<const SampleRecord> records, const ScreeningReport& rep,
                             const ScreeningOptions& opts, const std::optional<LineParameters>& reference) {
    Json flagged_ts = Json::array();
    for (std::size_t k : rep.flagged_sample_indices) flagged_ts.push_back(records[k].timestamp_us);
    Json per_sample = Json::array();
    for (std::size_t k = 0; k < records.size(); ++k)
        per_sample.push_back(
            Json{{"timestamp_us", records[k].timestamp_us}, {"scaled_residual", rep.per_sample_scaled_residual[k]}});
    Json j{{"threshold", opts.threshold},
           {"max_iterations", opts.max_iterations},
           {"iterations", rep.iterations},
           {"samples", records.size()},
           {"survivors", rep.survivors.size()},
           {"flagged_timestamps_us", flagged_ts},
           {"flagged_sample_indices", rep.flagged_sample_indices},
           {"per_sample", per_sample},
           {"estimate", line_estimate_json(rep.final_estimate.line)},
           {"diagnostics",
            Json{{"residual_norm", rep.final_estimate.residual_norm}, {"condition", rep.final_estimate.condition}}}};
    if (reference) j["errors"] = full_errors(rep.final_estimate.line, *reference);
    return j;
}

inline Json sweep_summary(const SweepConfig& config, const SweepResult& result) {
    Json anchors = Json::array();
    for (const auto& a : evaluate_anchors(result)) {
        const char* status = !a.passed ? "not_evaluated" : *a.passed ? "pass" : "fail";
        anchors.push_back(Json{{"check", a.name}, {"status", status}, {"detail", a.detail}});
    }
    Json failures = Json::array();
    for (const auto& f : result.failures)
        failures.push_back(Json{{"length_km", f.length_km},
                                {"method", std::string(to_string(f.method))},
                                {"set", f.set},
                                {"message", f.message}});
    Json methods = Json::array();
    for (Method m : config.methods) methods.push_back(std::string(to_string(m)));
    return Json{{"lengths_km", config.lengths_km},
                {"methods", methods},
                {"n_samples_per_set", config.n_samples_per_set},
                {"m_sets", config.m_sets},
                {"sigma_fraction", config.noise.sigma_fraction},
                {"seed", config.noise.seed},
                {"rows", result.rows.size()},
                {"anchors", anchors},
                {"failures", failures}};
}

} // namespace lineid::report
