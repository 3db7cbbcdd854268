#pragma once

// Nominal-pi forward solver: turns known line parameters and a receiving-end
// load schedule into noiseless terminal phasors, plus Gaussian measurement noise.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lineid/core.hpp"

namespace lineid {

/// Diurnal receiving-end load schedule.
///
/// Each phase follows min + (max - min) * (1 - cos(2*pi*(t + shift_p)/period)) / 2
/// of the per-phase share of `capacity_va`, scaled by the complex multiplier
/// `unbalance[p]`, at constant power factor. Sample k is evaluated at time
/// (k + time_offset) * sample_interval.
struct LoadProfile {
    double period_hours = 24.0;
    double min_fraction = 0.20;
    double max_fraction = 0.80;
    double sample_interval_minutes = 5.0;
    std::array<Complex, 3> unbalance{Complex(1.0), Complex(1.0), Complex(1.0)};
    double power_factor = 0.95; // lagging
    double capacity_va = 150e6; // three-phase
    std::array<double, 3> phase_shift_hours{0.0, 0.0, 0.0};
    double time_offset = 0.25; // fraction of one interval

    void validate() const {
        if (!(min_fraction > 0.0 && min_fraction < max_fraction && max_fraction <= 1.0))
            fail(ErrorKind::InvalidArgument, "load profile requires 0 < min_fraction < max_fraction <= 1");
        if (!(sample_interval_minutes > 0.0)) fail(ErrorKind::InvalidArgument, "sample_interval must be positive");
        if (!(period_hours > 0.0)) fail(ErrorKind::InvalidArgument, "period must be positive");
        if (!(power_factor > 0.0 && power_factor <= 1.0))
            fail(ErrorKind::InvalidArgument, "power_factor must lie in (0, 1]");
        if (!(capacity_va > 0.0)) fail(ErrorKind::InvalidArgument, "capacity must be positive");
        for (const auto& m : unbalance)
            if (!is_finite(m)) fail(ErrorKind::InvalidArgument, "unbalance multipliers must be finite");
    }

    double hours_at(std::size_t k) const {
        return (static_cast<double>(k) + time_offset) * sample_interval_minutes / 60.0;
    }

    double fraction(int phase, double hours) const {
        const double x = 2.0 * std::numbers::pi * (hours + phase_shift_hours[static_cast<std::size_t>(phase)]) / period_hours;
        return min_fraction + (max_fraction - min_fraction) * (1.0 - std::cos(x)) / 2.0;
    }
};

struct NoiseSpec {
    double sigma_fraction = 0.01;
    std::uint64_t seed = 0;
};

/// Balanced positive-sequence phase voltages (a at 0 deg) for a line-to-line rms level.
inline PhaseVector balanced_voltage(double line_to_line_v = 230e3) {
    const double v = line_to_line_v / std::sqrt(3.0);
    const Complex a = rotation_a();
    return PhaseVector(Complex(v), v * a * a, v * a);
}

struct TerminalCurrents {
    PhaseVector i_s;
    PhaseVector i_r;
};

inline TerminalCurrents solve_terminal_currents(const LineParameters& params, const PhaseVector& u_s,
                                                const PhaseVector& u_r) {
    const Matrix3c y = params.y_p();
    const Matrix3c half_shunt = Complex(0.0, 0.5) * params.b_abc().cast<Complex>();
    const PhaseVector series = y * (u_s - u_r);
    return {series + half_shunt * u_s, half_shunt * u_r - series};
}

inline LineParameters scale_length(const LineParameters& params, double factor) {
    if (!(factor > 0.0) || !std::isfinite(factor)) fail(ErrorKind::InvalidArgument, "length factor must be positive");
    return LineParameters(params.z_abc() * factor, params.b_abc() * factor);
}

/// Noiseless series; every record satisfies the nodal equations to rounding.
inline std::vector<SampleRecord> generate_series(const LineParameters& params, const LoadProfile& profile,
                                                 std::size_t n_samples, const PhaseVector& sending_voltage,
                                                 std::int64_t start_time_us = 0) {
    profile.validate();
    if (n_samples < 1) fail(ErrorKind::InvalidArgument, "n_samples must be at least 1");
    const Matrix3c y = params.y_p();
    const Matrix3c half_shunt = Complex(0.0, 0.5) * params.b_abc().cast<Complex>();
    const double tan_phi = std::tan(std::acos(profile.power_factor));
    const double per_phase_va = profile.capacity_va / 3.0;
    const auto interval_us = static_cast<std::int64_t>(std::llround(profile.sample_interval_minutes * 60e6));
    const PhaseVector drive = y * sending_voltage;

    std::vector<SampleRecord> out;
    out.reserve(n_samples);
    for (std::size_t k = 0; k < n_samples; ++k) {
        const double hours = profile.hours_at(k);
        Matrix3c load = Matrix3c::Zero();
        for (int p = 0; p < 3; ++p) {
            const double power = profile.fraction(p, hours) * per_phase_va;
            const double v2 = std::norm(sending_voltage(p));
            load(p, p) = profile.unbalance[static_cast<std::size_t>(p)] * Complex(power, -power * tan_phi) / v2;
        }
        const Matrix3c network = y + half_shunt + load;
        Eigen::FullPivLU<Matrix3c> lu(network);
        if (!lu.isInvertible())
            fail(ErrorKind::SingularMatrix, "network solve singular at sample " + std::to_string(k), k);
        SampleRecord rec;
        rec.timestamp_us = start_time_us + static_cast<std::int64_t>(k) * interval_us;
        rec.u_s = sending_voltage;
        rec.u_r = lu.solve(drive);
        const PhaseVector series = y * (rec.u_s - rec.u_r);
        rec.i_s = series + half_shunt * rec.u_s;
        rec.i_r = half_shunt * rec.u_r - series;
        if (!rec.finite()) fail(ErrorKind::SingularMatrix, "non-finite solution at sample " + std::to_string(k), k);
        out.push_back(rec);
    }
    return out;
}

/// splitmix64 finaliser; used to derive independent sub-seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Additive Gaussian noise on every real and imaginary component, with standard
/// deviation sigma_fraction * |parent phasor|. Deterministic in `spec.seed`.
inline SampleRecord add_noise(const SampleRecord& record, const NoiseSpec& spec) {
    if (!(spec.sigma_fraction >= 0.0)) fail(ErrorKind::InvalidArgument, "sigma_fraction must be non-negative");
    if (spec.sigma_fraction == 0.0) return record;
    std::mt19937_64 gen(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    SampleRecord out = record;
    for (std::size_t k = 0; k < SampleRecord::phasor_count; ++k) {
        Phasor& p = out.phasor(k);
        const double sd = spec.sigma_fraction * std::abs(p);
        const double re = normal(gen);
        const double im = normal(gen);
        p += Complex(sd * re, sd * im);
    }
    return out;
}

/// Noisy copy of a series; record k draws from sub-seed mix_seed(spec.seed, k).
inline std::vector<SampleRecord> add_noise(std::span<const SampleRecord> records, const NoiseSpec& spec) {
    std::vector<SampleRecord> out;
    out.reserve(records.size());
    for (std::size_t k = 0; k < records.size(); ++k)
        out.push_back(add_noise(records[k], NoiseSpec{spec.sigma_fraction, mix_seed(spec.seed, k)}));
    return out;
}

/// Mean sending-end degree of unbalance over a series, in percent.
inline double mean_degree_of_unbalance(std::span<const SampleRecord> records) {
    double sum = 0.0;
    for (const auto& r : records) sum += degree_of_unbalance(r.i_s);
    return records.empty() ? 0.0 : sum / static_cast<double>(records.size());
}

/// Shape of the unbalance injected by `calibrate_unbalance`.
///
/// A severity s in [0, 2) maps to per-phase time shifts min(s, 1) * shift_hours
/// and load multipliers 1 + max(s - 1, 0) * skew_direction; the mean degree of
/// unbalance grows monotonically with s.
struct UnbalanceShape {
    std::array<double, 3> shift_hours{0.0, 2.0, 4.0};
    std::array<double, 3> skew_direction{-1.0, 0.0, 1.0};
    double max_severity = 1.9;

    LoadProfile apply(LoadProfile base, double severity) const {
        const double shift_scale = std::min(severity, 1.0);
        const double skew = std::max(severity - 1.0, 0.0);
        for (std::size_t p = 0; p < 3; ++p) {
            base.phase_shift_hours[p] = shift_scale * shift_hours[p];
            base.unbalance[p] = Complex(1.0 + skew * skew_direction[p]);
        }
        return base;
    }
};

/// Bisects the unbalance severity so that the mean sending-end degree of
/// unbalance of the generated series equals `target_pct` (within `tol_pct`).
inline LoadProfile calibrate_unbalance(const LineParameters& params, const LoadProfile& base, double target_pct,
                                       std::size_t n_samples, const PhaseVector& sending_voltage,
                                       const UnbalanceShape& shape = {}, double tol_pct = 0.01) {
    if (!(target_pct >= 0.0)) fail(ErrorKind::InvalidArgument, "unbalance target must be non-negative");
    auto measure = [&](double s) {
        const auto series = generate_series(params, shape.apply(base, s), n_samples, sending_voltage);
        return mean_degree_of_unbalance(series);
    };
    double lo = 0.0;
    double hi = shape.max_severity;
    const double at_lo = measure(lo);
    if (target_pct <= at_lo) return shape.apply(base, lo);
    if (target_pct > measure(hi)) fail(ErrorKind::InvalidArgument, "unbalance target is not reachable");
    for (int it = 0; it < 60 && hi - lo > 1e-12; ++it) {
        const double mid = 0.5 * (lo + hi);
        (measure(mid) < target_pct ? lo : hi) = mid;
    }
    const double s = 0.5 * (lo + hi);
    if (std::abs(measure(s) - target_pct) > tol_pct)
        fail(ErrorKind::InvalidArgument, "unbalance calibration did not converge");
    return shape.apply(base, s);
}

} // namespace lineid
