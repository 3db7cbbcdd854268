#pragma once

// Phasor and symmetrical-component algebra shared by every other module.
//
// All quantities are rectangular complex values. Impedances and
// susceptances are line totals (ohms / siemens), never per unit length.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>

#include <Eigen/Dense>

#include "lineid/error.hpp"

namespace lineid {

using Complex = std::complex<double>;
using Phasor = Complex;
using PhaseVector = Eigen::Vector3cd;
using Matrix3c = Eigen::Matrix3cd;
using Matrix3r = Eigen::Matrix3d;

inline bool is_finite(const Complex& c) { return std::isfinite(c.real()) && std::isfinite(c.imag()); }

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        const auto v = m.derived().data()[i];
        if constexpr (std::is_same_v<std::decay_t<decltype(v)>, Complex>) {
            if (!is_finite(v)) return false;
        } else {
            if (!std::isfinite(v)) return false;
        }
    }
    return true;
}

/// Configurable numerical tolerances. Defaults match the documented contract.
struct Tolerances {
    double decoupling = 1e-9;     // off-diagonal / diagonal magnitude for transposed lines
    double condition_cap = 1e12;  // largest admissible condition number for y_p inversion
    double symmetry = 1e-9;       // relative asymmetry tolerated before mirroring
};

/// One time-stamped set of terminal phasors. Both current vectors are
/// directed into the line.
struct SampleRecord {
    std::int64_t timestamp_us = 0;
    PhaseVector u_s = PhaseVector::Zero();
    PhaseVector u_r = PhaseVector::Zero();
    PhaseVector i_s = PhaseVector::Zero();
    PhaseVector i_r = PhaseVector::Zero();

    bool finite() const { return all_finite(u_s) && all_finite(u_r) && all_finite(i_s) && all_finite(i_r); }

    /// Phasor k in the fixed order Ua_S..Uc_S, Ua_R..Uc_R, Ia_S..Ic_S, Ia_R..Ic_R.
    Phasor& phasor(std::size_t k) {
        PhaseVector* groups[4] = {&u_s, &u_r, &i_s, &i_r};
        return (*groups[k / 3])(static_cast<Eigen::Index>(k % 3));
    }
    const Phasor& phasor(std::size_t k) const { return const_cast<SampleRecord*>(this)->phasor(k); }

    static constexpr std::size_t phasor_count = 12;
};

namespace detail {

inline double max_abs(const Matrix3c& m) { return m.cwiseAbs().maxCoeff(); }
inline double max_abs(const Matrix3r& m) { return m.cwiseAbs().maxCoeff(); }

template <typename M>
double asymmetry(const M& m) {
    const double scale = max_abs(m);
    const double dev = (m - m.transpose()).cwiseAbs().maxCoeff();
    return scale > 0.0 ? dev / scale : dev;
}

// Copies the upper triangle onto the lower one so the result is symmetric bit for bit.
template <typename M>
M mirror_upper(const M& m) {
    M out = m;
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) out(j, i) = out(i, j);
    return out;
}

inline double condition_number(const Matrix3c& m) {
    const Eigen::Vector3d s = Eigen::JacobiSVD<Matrix3c>(m).singularValues();
    const double lo = s.minCoeff();
    if (lo == 0.0) return std::numeric_limits<double>::infinity();
    return s.maxCoeff() / lo;
}

} // namespace detail

/// Series impedance and shunt susceptance matrices of one line (totals).
/// Both matrices are symmetric by construction: inputs are checked against a
/// relative tolerance and then rebuilt from their upper triangles.
class LineParameters {
public:
    LineParameters() : z_abc_(Matrix3c::Identity()), b_abc_(Matrix3r::Zero()) {}

    LineParameters(const Matrix3c& z_abc, const Matrix3r& b_abc, double symmetry_tol = Tolerances{}.symmetry) {
        if (!all_finite(z_abc) || !all_finite(b_abc))
            fail(ErrorKind::InvalidArgument, "line parameters contain non-finite entries");
        if (detail::asymmetry(z_abc) > symmetry_tol)
            fail(ErrorKind::InvalidArgument, "z_abc is not symmetric");
        if (detail::asymmetry(b_abc) > symmetry_tol)
            fail(ErrorKind::InvalidArgument, "b_abc is not symmetric");
        z_abc_ = detail::mirror_upper(z_abc);
        b_abc_ = detail::mirror_upper(b_abc);
    }

    const Matrix3c& z_abc() const { return z_abc_; }
    const Matrix3r& b_abc() const { return b_abc_; }

    /// Series admittance y_p = z_abc^-1.
    Matrix3c y_p(double condition_cap = Tolerances{}.condition_cap) const {
        const double cond = detail::condition_number(z_abc_);
        if (!(cond <= condition_cap))
            fail(ErrorKind::SingularMatrix, "z_abc is singular or ill-conditioned", std::nullopt, cond);
        return detail::mirror_upper(Matrix3c(z_abc_.inverse()));
    }

private:
    Matrix3c z_abc_;
    Matrix3r b_abc_;
};

/// Sequence-domain (0, 1, 2) series impedance and shunt susceptance.
struct SequenceParameters {
    Matrix3c z_012 = Matrix3c::Zero();
    Matrix3c b_012 = Matrix3c::Zero();

    Complex z0() const { return z_012(0, 0); }
    Complex z1() const { return z_012(1, 1); }
    Complex z2() const { return z_012(2, 2); }
    double b0() const { return b_012(0, 0).real(); }
    double b1() const { return b_012(1, 1).real(); }
    double b2() const { return b_012(2, 2).real(); }

    /// True when every off-diagonal magnitude is below `rel_tol` times the largest diagonal.
    bool decoupled(double rel_tol = Tolerances{}.decoupling) const {
        auto check = [rel_tol](const Matrix3c& m) {
            const double diag = m.diagonal().cwiseAbs().maxCoeff();
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                    if (i != j && std::abs(m(i, j)) >= rel_tol * diag) return false;
            return true;
        };
        return check(z_012) && check(b_012);
    }
};

/// The 18 real unknowns of the linear model, ordered
/// [G_a, T_a, G_b, T_b, G_c, T_c, G_ab, T_ab, G_bc, T_bc, G_ac, T_ac,
///  B_a, B_b, B_c, B_ab, B_bc, B_ac]
/// where G + jT are entries of y_p = z_abc^-1.
struct ThetaVector {
    static constexpr std::size_t size = 18;
    static constexpr std::size_t b_offset = 12;

    /// Matrix positions of the six distinct entries, in theta order.
    static constexpr std::array<std::array<int, 2>, 6> entries{{{0, 0}, {1, 1}, {2, 2}, {0, 1}, {1, 2}, {0, 2}}};

    /// Theta slot of the distinct entry at (row, col) of a symmetric 3x3 matrix.
    static constexpr std::size_t entry_index(int row, int col) {
        if (row > col) std::swap(row, col);
        for (std::size_t k = 0; k < entries.size(); ++k)
            if (entries[k][0] == row && entries[k][1] == col) return k;
        return entries.size();
    }

    std::array<double, size> values{};

    double& operator[](std::size_t k) { return values[k]; }
    double operator[](std::size_t k) const { return values[k]; }

    Eigen::Map<const Eigen::Matrix<double, 18, 1>> as_vector() const {
        return Eigen::Map<const Eigen::Matrix<double, 18, 1>>(values.data());
    }

    /// Assembles y_p and b_abc; symmetric by construction.
    Matrix3c y_p() const {
        Matrix3c y;
        for (std::size_t k = 0; k < entries.size(); ++k) {
            const auto [i, j] = entries[k];
            y(i, j) = y(j, i) = Complex(values[2 * k], values[2 * k + 1]);
        }
        return y;
    }
    Matrix3r b_abc() const {
        Matrix3r b;
        for (std::size_t k = 0; k < entries.size(); ++k) {
            const auto [i, j] = entries[k];
            b(i, j) = b(j, i) = values[b_offset + k];
        }
        return b;
    }

    bool operator==(const ThetaVector&) const = default;
};

/// Phase-to-sequence transformation A (columns: zero, positive, negative) and its inverse.
struct SequenceTransform {
    Matrix3c a;
    Matrix3c a_inv;
};

inline Complex rotation_a() { return std::polar(1.0, 2.0 * std::numbers::pi / 3.0); }

inline const SequenceTransform& sequence_transform() {
    static const SequenceTransform t = [] {
        const Complex a = rotation_a();
        const Complex a2 = a * a;
        SequenceTransform s;
        s.a << 1.0, 1.0, 1.0,
               1.0, a2, a,
               1.0, a, a2;
        s.a_inv << 1.0, 1.0, 1.0,
                   1.0, a, a2,
                   1.0, a2, a;
        s.a_inv /= 3.0;
        return s;
    }();
    return t;
}

inline Matrix3c phase_to_sequence(const Matrix3c& m) {
    const auto& t = sequence_transform();
    return t.a_inv * m * t.a;
}

inline Matrix3c sequence_to_phase(const Matrix3c& m) {
    const auto& t = sequence_transform();
    return t.a * m * t.a_inv;
}

/// Sequence components (I_0, I_1, I_2) of a phase vector.
inline PhaseVector to_sequence(const PhaseVector& v) { return sequence_transform().a_inv * v; }

inline SequenceParameters to_sequence(const LineParameters& p) {
    return {phase_to_sequence(p.z_abc()), phase_to_sequence(p.b_abc().cast<Complex>())};
}

/// Matrix for a fully transposed line with the given self and mutual impedance.
inline Matrix3c transposed_matrix(Complex self, Complex mutual) {
    Matrix3c m = Matrix3c::Constant(mutual);
    m.diagonal().setConstant(self);
    return m;
}

/// Transposed line from its zero- and positive-sequence totals.
inline LineParameters transposed_line(Complex z0, Complex z1, double b0, double b1) {
    const Matrix3c z = transposed_matrix((z0 + 2.0 * z1) / 3.0, (z0 - z1) / 3.0);
    const Matrix3c b = transposed_matrix((b0 + 2.0 * b1) / 3.0, (b0 - b1) / 3.0);
    return LineParameters(z, b.real());
}

/// Line from full sequence matrices; the phase-domain images must be symmetric
/// and the susceptance image real (imaginary residue below the symmetry tolerance).
inline LineParameters line_from_sequence(const Matrix3c& z_012, const Matrix3c& b_012,
                                         double symmetry_tol = Tolerances{}.symmetry) {
    const Matrix3c z = sequence_to_phase(z_012);
    const Matrix3c b = sequence_to_phase(b_012);
    const double b_scale = detail::max_abs(b);
    if (b.imag().cwiseAbs().maxCoeff() > symmetry_tol * (b_scale > 0.0 ? b_scale : 1.0))
        fail(ErrorKind::InvalidArgument, "b_012 does not correspond to a real phase susceptance matrix");
    return LineParameters(z, b.real(), symmetry_tol);
}

inline ThetaVector pack_theta(const Matrix3c& y_p, const Matrix3r& b_abc, double symmetry_tol = Tolerances{}.symmetry) {
    if (detail::asymmetry(y_p) > symmetry_tol) fail(ErrorKind::InvalidArgument, "y_p is not symmetric");
    if (detail::asymmetry(b_abc) > symmetry_tol) fail(ErrorKind::InvalidArgument, "b_abc is not symmetric");
    ThetaVector theta;
    for (std::size_t k = 0; k < ThetaVector::entries.size(); ++k) {
        const auto [i, j] = ThetaVector::entries[k];
        theta[2 * k] = y_p(i, j).real();
        theta[2 * k + 1] = y_p(i, j).imag();
        theta[ThetaVector::b_offset + k] = b_abc(i, j);
    }
    return theta;
}

inline ThetaVector pack_theta(const LineParameters& line) { return pack_theta(line.y_p(), line.b_abc()); }

struct UnpackedTheta {
    Matrix3c y_p;
    Matrix3r b_abc;
};

inline UnpackedTheta unpack_theta(const ThetaVector& theta) { return {theta.y_p(), theta.b_abc()}; }

inline LineParameters recover_line_parameters(const ThetaVector& theta,
                                              double condition_cap = Tolerances{}.condition_cap) {
    const Matrix3c y = theta.y_p();
    const double cond = detail::condition_number(y);
    if (!(cond <= condition_cap))
        fail(ErrorKind::SingularMatrix, "recovered y_p is singular or ill-conditioned (condition " +
                                            std::to_string(cond) + ")",
             std::nullopt, cond);
    return LineParameters(detail::mirror_upper(Matrix3c(y.inverse())), theta.b_abc());
}

/// |I_2| / |I_1| in percent.
inline double degree_of_unbalance(const PhaseVector& currents) {
    const PhaseVector seq = to_sequence(currents);
    const double positive = std::abs(seq(1));
    const double scale = currents.cwiseAbs().maxCoeff();
    if (!(positive > 1e-12 * scale) || positive == 0.0)
        fail(ErrorKind::InvalidArgument, "degree of unbalance undefined: no positive-sequence component");
    return std::abs(seq(2)) / positive * 100.0;
}

} // namespace lineid
