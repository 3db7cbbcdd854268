#pragma once

// Linear measurement model: every sample contributes twelve real equations
// H_k * theta = z_k obtained from the real and imaginary parts of
//
//   y_p (U_S - U_R) = I_S - j/2 B U_S
//   I_S + I_R       = j/2 B (U_S + U_R)
//
// Row order within a sample: loop equations (real part) for phases a, b, c,
// shunt equations (real part) a, b, c, loop (imaginary) a, b, c, shunt
// (imaginary) a, b, c.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lineid/core.hpp"

namespace lineid {

struct DesignSystem {
    static constexpr Eigen::Index rows_per_sample = 12;

    Eigen::MatrixXd h;                     // 12N x 18
    Eigen::VectorXd z;                     // 12N
    std::vector<std::size_t> sample_index; // row block -> source record index

    std::size_t samples() const { return sample_index.size(); }
};

namespace detail {

inline void append_sample_rows(const SampleRecord& rec, Eigen::Ref<Eigen::MatrixXd> h, Eigen::Ref<Eigen::VectorXd> z) {
    const PhaseVector du = rec.u_s - rec.u_r;
    const PhaseVector di = rec.i_s + rec.i_r;
    const PhaseVector su = rec.u_s + rec.u_r;
    constexpr auto b0 = static_cast<Eigen::Index>(ThetaVector::b_offset);
    h.setZero();
    for (int i = 0; i < 3; ++i) {
        const Eigen::Index loop_re = i, shunt_re = 3 + i, loop_im = 6 + i, shunt_im = 9 + i;
        for (int j = 0; j < 3; ++j) {
            const auto k = static_cast<Eigen::Index>(ThetaVector::entry_index(i, j));
            h(loop_re, 2 * k) += du(j).real();
            h(loop_re, 2 * k + 1) -= du(j).imag();
            h(loop_re, b0 + k) -= 0.5 * rec.u_s(j).imag();

            h(loop_im, 2 * k) += du(j).imag();
            h(loop_im, 2 * k + 1) += du(j).real();
            h(loop_im, b0 + k) += 0.5 * rec.u_s(j).real();

            h(shunt_re, b0 + k) += 0.5 * su(j).imag();
            h(shunt_im, b0 + k) += 0.5 * su(j).real();
        }
        z(loop_re) = rec.i_s(i).real();
        z(loop_im) = rec.i_s(i).imag();
        z(shunt_re) = -di(i).real();
        z(shunt_im) = di(i).imag();
    }
}

} // namespace detail

inline DesignSystem build_design_system(std::span<const SampleRecord> records) {
    if (records.empty()) fail(ErrorKind::InvalidArgument, "design system needs at least one record");
    const auto n = static_cast<Eigen::Index>(records.size());
    DesignSystem sys;
    sys.h.resize(DesignSystem::rows_per_sample * n, static_cast<Eigen::Index>(ThetaVector::size));
    sys.z.resize(DesignSystem::rows_per_sample * n);
    sys.sample_index.resize(records.size());
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto& rec = records[static_cast<std::size_t>(k)];
        if (!rec.finite())
            fail(ErrorKind::InvalidArgument, "record " + std::to_string(k) + " contains a non-finite phasor",
                 static_cast<std::size_t>(k));
        const Eigen::Index r0 = DesignSystem::rows_per_sample * k;
        detail::append_sample_rows(rec, sys.h.middleRows(r0, DesignSystem::rows_per_sample),
                                   sys.z.segment(r0, DesignSystem::rows_per_sample));
        sys.sample_index[static_cast<std::size_t>(k)] = static_cast<std::size_t>(k);
    }
    return sys;
}

/// Raw residual H * theta - z.
inline Eigen::VectorXd residual(const DesignSystem& sys, const ThetaVector& theta) {
    if (sys.h.cols() != static_cast<Eigen::Index>(ThetaVector::size) || sys.h.rows() != sys.z.size())
        fail(ErrorKind::InvalidArgument, "design system dimensions do not match theta");
    return sys.h * theta.as_vector() - sys.z;
}

namespace detail {

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    double m = *mid;
    if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), mid));
    return m;
}

} // namespace detail

/// Per-sample screening statistic.
///
/// For each of the twelve equation slots the residuals of all samples are
/// centred on their median and divided by a robust scale (1.4826 * MAD, floored
/// at `scale_floor` times the rms right-hand side of that slot). A sample's
/// statistic is the rms of its twelve standardised rows. A slot whose scale is
/// zero contributes nothing.
inline std::vector<double> scaled_residuals(const DesignSystem& sys, const ThetaVector& theta,
                                            double scale_floor = 1e-6) {
    const Eigen::VectorXd r = residual(sys, theta);
    const std::size_t n = sys.samples();
    constexpr auto slots = static_cast<std::size_t>(DesignSystem::rows_per_sample);
    if (static_cast<std::size_t>(r.size()) != n * slots)
        fail(ErrorKind::InvalidArgument, "residual length is not 12 rows per sample");

    std::vector<double> sum_sq(n, 0.0);
    std::vector<double> column(n);
    for (std::size_t slot = 0; slot < slots; ++slot) {
        double rhs_sq = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const auto row = static_cast<Eigen::Index>(k * slots + slot);
            column[k] = r(row);
            rhs_sq += sys.z(row) * sys.z(row);
        }
        const double centre = detail::median(column);
        std::vector<double> dev(n);
        for (std::size_t k = 0; k < n; ++k) dev[k] = std::abs(column[k] - centre);
        const double floor = scale_floor * std::sqrt(rhs_sq / static_cast<double>(n));
        const double scale = std::max(1.4826 * detail::median(dev), floor);
        if (!(scale > 0.0)) continue;
        for (std::size_t k = 0; k < n; ++k) {
            const double t = (column[k] - centre) / scale;
            sum_sq[k] += t * t;
        }
    }
    std::vector<double> stat(n);
    for (std::size_t k = 0; k < n; ++k) stat[k] = std::sqrt(sum_sq[k] / static_cast<double>(slots));
    return stat;
}

} // namespace lineid
