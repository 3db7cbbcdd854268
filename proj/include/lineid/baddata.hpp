#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "lineid/design.hpp"
#include "lineid/estimators.hpp"

namespace lineid {

/// Two records leave a one-dimensional complex family of symmetric series
/// admittances consistent with the data, so three is the identifiable minimum.
inline constexpr std::size_t min_screening_samples = 3;

struct ScreeningOptions {
    double threshold = 3.0;
    std::size_t max_iterations = 5;
    LeastSquaresOptions solver{};
};

struct ScreeningReport {
    std::vector<std::size_t> flagged_sample_indices; // in order of removal
    // Statistic of each input sample from the last fit it took part in.
    std::vector<double> per_sample_scaled_residual;
    std::size_t iterations = 0; // number of least-squares fits
    std::vector<std::size_t> survivors;
    OptimalEstimate final_estimate;
};

/// Iterative one-sample-at-a-time bad-data rejection around the least-squares
/// estimator. Each pass fits the surviving samples and removes the sample with
/// the largest statistic if it exceeds the threshold (ties: lowest index).
inline ScreeningReport screen_and_estimate(std::span<const SampleRecord> records, const ScreeningOptions& opts = {}) {
    if (records.size() < min_screening_samples)
        fail(ErrorKind::InvalidArgument, "screening needs at least three samples");
    if (!(opts.threshold > 0.0)) fail(ErrorKind::InvalidArgument, "screening threshold must be positive");
    if (opts.max_iterations < 1) fail(ErrorKind::InvalidArgument, "max_iterations must be at least 1");

    ScreeningReport report;
    report.per_sample_scaled_residual.assign(records.size(), 0.0);
    report.survivors.resize(records.size());
    for (std::size_t k = 0; k < records.size(); ++k) report.survivors[k] = k;

    std::vector<SampleRecord> subset;
    auto fit = [&] {
        subset.clear();
        for (std::size_t k : report.survivors) subset.push_back(records[k]);
        ++report.iterations;
        OptimalEstimate est = estimate_optimal(subset, opts.solver);
        for (std::size_t s = 0; s < report.survivors.size(); ++s)
            report.per_sample_scaled_residual[report.survivors[s]] = est.scaled_residuals[s];
        return est;
    };

    OptimalEstimate current = fit();
    for (std::size_t removals = 0;; ++removals) {
        std::size_t worst = 0;
        double worst_stat = -std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < report.survivors.size(); ++s) {
            const double v = current.scaled_residuals[s];
            if (v > worst_stat) { // strict: earliest (lowest original index) wins ties
                worst_stat = v;
                worst = s;
            }
        }
        if (!(worst_stat > opts.threshold)) break;
        if (report.iterations >= opts.max_iterations) break;
        if (report.survivors.size() - 1 < min_screening_samples)
            fail(ErrorKind::ExcessiveRejection,
                 "excessive rejection: fewer than " + std::to_string(min_screening_samples) + " samples would remain",
                 report.survivors[worst]);
        report.flagged_sample_indices.push_back(report.survivors[worst]);
        report.survivors.erase(report.survivors.begin() + static_cast<std::ptrdiff_t>(worst));
        current = fit();
    }
    report.final_estimate = std::move(current);
    return report;
}

} // namespace lineid
