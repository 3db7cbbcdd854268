#pragma once

// Reference 14.5 km, 230 kV line used by the case studies. Values are line
// totals in ohms and siemens.

#include "lineid/core.hpp"

namespace lineid::fixtures {

inline constexpr double reference_length_km = 14.5;

/// Fully transposed variant, from its sequence totals.
struct TransposedReference {
    Complex z0{3.3455, 22.8057};
    Complex z1{0.8839, 6.9188};
    double b0 = 2.7633e-5;
    double b1 = 5.0198e-5;
};

inline LineParameters transposed_line() {
    const TransposedReference r;
    return lineid::transposed_line(r.z0, r.z1, r.b0, r.b1);
}

/// Untransposed variant: full coupled sequence matrices.
inline Matrix3c untransposed_z012() {
    const Complex z0(3.3455, 22.8057), z1(0.8839, 6.9188);
    const Complex z01(0.2213, -0.1396), z02(-0.2054, -0.1305);
    const Complex z12(-0.4369, 0.2524), z21(0.4371, 0.2522);
    Matrix3c z;
    z << z0, z01, z02,
         z02, z1, z12,
         z01, z21, z1;
    return z;
}

inline Matrix3c untransposed_b012() {
    const double b0 = 2.7630e-5, b1 = 5.0188e-5, b01 = 1.5805e-6, b12 = -1.6869e-6;
    Matrix3c b;
    b << b0, b01, b01,
         b01, b1, b12,
         b01, b12, b1;
    return b;
}

inline LineParameters untransposed_line() { return line_from_sequence(untransposed_z012(), untransposed_b012()); }

/// Mean sending-end current unbalance of the published untransposed case.
inline constexpr double case_unbalance_pct = 14.0;

} // namespace lineid::fixtures
