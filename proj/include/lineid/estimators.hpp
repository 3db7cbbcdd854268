#pragma once

// Three ways of identifying line parameters from terminal phasors:
//  * single-sample positive-sequence closed form,
//  * two-sample chain-parameter (ABCD) method,
//  * the 18-unknown linear least-squares estimator over N samples.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lineid/core.hpp"
#include "lineid/design.hpp"

namespace lineid {

struct PositiveSequenceEstimate {
    Complex z1;
    Complex y1; // total shunt admittance, j * B1 ideally

    double r1() const { return z1.real(); }
    double x1() const { return z1.imag(); }
    double b1() const { return y1.imag(); }
};

/// Positive-sequence components of one record.
struct PositiveSequenceSample {
    Complex u_s, u_r, i_s, i_r;
};

inline PositiveSequenceSample positive_sequence(const SampleRecord& rec) {
    return {to_sequence(rec.u_s)(1), to_sequence(rec.u_r)(1), to_sequence(rec.i_s)(1), to_sequence(rec.i_r)(1)};
}

namespace detail {
inline bool negligible(Complex value, double scale, double rel = 1e-12) {
    return !(std::abs(value) > rel * scale);
}
} // namespace detail

inline PositiveSequenceEstimate estimate_single(const SampleRecord& record) {
    if (!record.finite()) fail(ErrorKind::InvalidArgument, "record contains a non-finite phasor");
    const auto p = positive_sequence(record);
    const Complex den = p.i_s * p.u_r - p.i_r * p.u_s;
    const Complex vsum = p.u_s + p.u_r;
    const double scale = std::abs(p.i_s * p.u_r) + std::abs(p.i_r * p.u_s);
    if (detail::negligible(den, scale))
        fail(ErrorKind::InsufficientExcitation, "single-sample method: current/voltage denominator vanishes");
    if (detail::negligible(vsum, std::abs(p.u_s) + std::abs(p.u_r)))
        fail(ErrorKind::InsufficientExcitation, "single-sample method: terminal voltage sum vanishes");
    return {(p.u_s * p.u_s - p.u_r * p.u_r) / den, 2.0 * (p.i_s + p.i_r) / vsum};
}

/// Chain-parameter estimate from two samples.
///
/// The relations U_S = A U_R - B I_R and I_S = C U_R - D I_R are solved by
/// Cramer's rule; Z = B and Y = 2(A - 1)/B. `c_mismatch` and `d_mismatch`
/// report |C - Y(1 + ZY/4)| / |C| and |D - A| / |A|, both zero for an exact pi.
struct DoubleEstimate {
    PositiveSequenceEstimate estimate;
    Complex a, b, c, d;
    Complex det;
    double c_mismatch = 0.0;
    double d_mismatch = 0.0;
};

inline Complex chain_determinant(const PositiveSequenceSample& s1, const PositiveSequenceSample& s2) {
    return s1.u_r * s2.i_r - s2.u_r * s1.i_r;
}

inline DoubleEstimate estimate_double(const SampleRecord& r1, const SampleRecord& r2, double det_rel_tol = 1e-10) {
    if (!r1.finite() || !r2.finite()) fail(ErrorKind::InvalidArgument, "record contains a non-finite phasor");
    const auto s1 = positive_sequence(r1);
    const auto s2 = positive_sequence(r2);
    const Complex det = chain_determinant(s1, s2);
    const double scale = std::abs(s1.u_r * s2.i_r) + std::abs(s2.u_r * s1.i_r);
    if (detail::negligible(det, scale, det_rel_tol))
        fail(ErrorKind::InsufficientExcitation, "double-sample method: samples do not excite distinct operating points");

    DoubleEstimate out;
    out.det = det;
    out.a = (s1.u_s * s2.i_r - s2.u_s * s1.i_r) / det;
    out.b = (s2.u_r * s1.u_s - s1.u_r * s2.u_s) / det;
    out.c = (s1.i_s * s2.i_r - s2.i_s * s1.i_r) / det;
    out.d = (s2.u_r * s1.i_s - s1.u_r * s2.i_s) / det;
    if (detail::negligible(out.b, std::abs(out.a) * std::abs(s1.u_r) / (std::abs(s1.i_r) + 1e-300)))
        fail(ErrorKind::InsufficientExcitation, "double-sample method: series chain parameter vanishes");

    const Complex z = out.b;
    const Complex y = 2.0 * (out.a - 1.0) / out.b;
    out.estimate = {z, y};
    const Complex c_model = y * (1.0 + 0.25 * y * z);
    out.c_mismatch = std::abs(out.c - c_model) / std::max(std::abs(out.c), 1e-300);
    out.d_mismatch = std::abs(out.d - out.a) / std::max(std::abs(out.a), 1e-300);
    return out;
}

/// Applies the single-sample method to every record.
inline std::vector<PositiveSequenceEstimate> estimate_single_each(std::span<const SampleRecord> records) {
    std::vector<PositiveSequenceEstimate> out;
    out.reserve(records.size());
    for (std::size_t k = 0; k < records.size(); ++k) {
        try {
            out.push_back(estimate_single(records[k]));
        } catch (const Error& e) {
            throw Error(e.kind(), std::string(e.what()) + " (sample " + std::to_string(k) + ")", k);
        }
    }
    return out;
}

/// Applies the double method to consecutive pairs (k, k+1).
inline std::vector<DoubleEstimate> estimate_double_consecutive(std::span<const SampleRecord> records) {
    if (records.size() < 2) fail(ErrorKind::InvalidArgument, "double method needs at least two samples");
    std::vector<DoubleEstimate> out;
    out.reserve(records.size() - 1);
    for (std::size_t k = 0; k + 1 < records.size(); ++k) {
        try {
            out.push_back(estimate_double(records[k], records[k + 1]));
        } catch (const Error& e) {
            throw Error(e.kind(), std::string(e.what()) + " (samples " + std::to_string(k) + ", " +
                                      std::to_string(k + 1) + ")",
                        k);
        }
    }
    return out;
}

/// Pair (i < j) with the largest chain determinant magnitude.
inline std::pair<std::size_t, std::size_t> max_excitation_pair(std::span<const SampleRecord> records) {
    if (records.size() < 2) fail(ErrorKind::InvalidArgument, "double method needs at least two samples");
    std::vector<PositiveSequenceSample> seq;
    seq.reserve(records.size());
    for (const auto& r : records) seq.push_back(positive_sequence(r));
    std::pair<std::size_t, std::size_t> best{0, 1};
    double best_det = -1.0;
    for (std::size_t i = 0; i < seq.size(); ++i)
        for (std::size_t j = i + 1; j < seq.size(); ++j) {
            const double d = std::abs(chain_determinant(seq[i], seq[j]));
            if (d > best_det) {
                best_det = d;
                best = {i, j};
            }
        }
    return best;
}

inline PositiveSequenceEstimate mean_estimate(std::span<const PositiveSequenceEstimate> estimates) {
    PositiveSequenceEstimate m{Complex(0.0), Complex(0.0)};
    for (const auto& e : estimates) {
        m.z1 += e.z1;
        m.y1 += e.y1;
    }
    if (!estimates.empty()) {
        m.z1 /= static_cast<double>(estimates.size());
        m.y1 /= static_cast<double>(estimates.size());
    }
    return m;
}

struct LeastSquaresOptions {
    double rank_tol = 1e-8;                         // sigma_min / sigma_max of equilibrated H
    double condition_cap = Tolerances{}.condition_cap; // for recovering z_abc from y_p
};

struct LeastSquaresSolution {
    ThetaVector theta;
    double residual_norm = 0.0;
    double condition = 0.0; // of the column-equilibrated H
};

/// Minimises ||H theta - z||_2 with unit-norm column equilibration and a
/// Householder QR factorisation; rejects numerically rank-deficient systems.
inline LeastSquaresSolution solve_least_squares(const DesignSystem& sys, const LeastSquaresOptions& opts = {}) {
    const Eigen::Index cols = sys.h.cols();
    if (sys.h.rows() < cols)
        fail(ErrorKind::InsufficientExcitation,
             "insufficient excitation: " + std::to_string(sys.h.rows()) + " equations for " + std::to_string(cols) +
                 " unknowns");
    const Eigen::VectorXd norms = sys.h.colwise().norm();
    if (!(norms.minCoeff() > 0.0))
        fail(ErrorKind::InsufficientExcitation, "insufficient excitation: an unknown has no coefficient in any row");
    const Eigen::MatrixXd scaled = sys.h * norms.cwiseInverse().asDiagonal();

    Eigen::HouseholderQR<Eigen::MatrixXd> qr(scaled);
    Eigen::MatrixXd r = qr.matrixQR().topRows(cols);
    r.triangularView<Eigen::StrictlyLower>().setZero();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(r);
    const auto& sv = svd.singularValues();
    const double condition = sv(cols - 1) > 0.0 ? sv(0) / sv(cols - 1) : std::numeric_limits<double>::infinity();
    if (!(sv(cols - 1) >= opts.rank_tol * sv(0)))
        fail(ErrorKind::InsufficientExcitation, "insufficient excitation: design matrix is rank deficient", std::nullopt,
             condition);

    const Eigen::VectorXd scaled_theta = qr.solve(sys.z);
    LeastSquaresSolution out;
    for (Eigen::Index k = 0; k < cols; ++k) out.theta[static_cast<std::size_t>(k)] = scaled_theta(k) / norms(k);
    out.residual_norm = residual(sys, out.theta).norm();
    out.condition = condition;
    return out;
}

struct OptimalEstimate {
    ThetaVector theta;
    LineParameters line;
    SequenceParameters sequence;
    double residual_norm = 0.0;
    double condition = 0.0;
    std::vector<double> scaled_residuals; // one per sample
};

inline OptimalEstimate estimate_optimal(std::span<const SampleRecord> records, const LeastSquaresOptions& opts = {}) {
    if (records.size() < 2) fail(ErrorKind::InsufficientExcitation, "optimal estimator needs at least two samples");
    const DesignSystem sys = build_design_system(records);
    const LeastSquaresSolution sol = solve_least_squares(sys, opts);
    OptimalEstimate out;
    out.theta = sol.theta;
    out.line = recover_line_parameters(sol.theta, opts.condition_cap);
    out.sequence = to_sequence(out.line);
    out.residual_norm = sol.residual_norm;
    out.condition = sol.condition;
    out.scaled_residuals = scaled_residuals(sys, sol.theta);
    return out;
}

/// Removes an externally estimated series induced voltage from each record's
/// sending-end voltage, so the drop seen by the model is U_S - U_R - U_induced.
inline std::vector<SampleRecord> compensate_mutual(std::span<const SampleRecord> records,
                                                   std::span<const PhaseVector> induced) {
    if (records.size() != induced.size())
        fail(ErrorKind::InvalidArgument, "induced voltage list length does not match the records");
    std::vector<SampleRecord> out(records.begin(), records.end());
    for (std::size_t k = 0; k < out.size(); ++k) out[k].u_s -= induced[k];
    return out;
}

} // namespace lineid
