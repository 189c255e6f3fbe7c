#pragma once

#include <cmath>
#include <cstdint>

namespace rinr::detail {

// sin and cos together: three-part Cody-Waite reduction by pi/2, then the
// classic fdlibm kernels on |r| <= pi/4. Large or non-finite
// arguments fall back to libm.
// Plain arithmetic only, so results are reproducible wherever the build
// disables FMA contraction.
inline void sincos(double x, double& s_out, double& c_out) {
    if (!(std::abs(x) < 1e5)) {
        s_out = std::sin(x);
        c_out = std::cos(x);
        return;
    }
    constexpr double kInvPio2 = 6.36619772367581382433e-01;
    constexpr double kPio2_1 = 1.57079632673412561417e+00;
    constexpr double kPio2_2 = 6.07710050630396597660e-11;
    constexpr double kPio2_3 = 2.02226624871116645580e-21;
    constexpr double kRound = 6755399441055744.0;  // 1.5 * 2^52

    constexpr double S1 = -1.66666666666666324348e-01;
    constexpr double S2 = 8.33333333332248946124e-03;
    constexpr double S3 = -1.98412698298579493134e-04;
    constexpr double S4 = 2.75573137070700676789e-06;
    constexpr double S5 = -2.50507602534068634195e-08;
    constexpr double S6 = 1.58969099521155010221e-10;

    constexpr double C1 = 4.16666666666666019037e-02;
    constexpr double C2 = -1.38888888888741095749e-03;
    constexpr double C3 = 2.48015872894767294178e-05;
    constexpr double C4 = -2.75573143513906633035e-07;
    constexpr double C5 = 2.08757232129817482790e-09;
    constexpr double C6 = -1.13596475577881948265e-11;

    const double k = (x * kInvPio2 + kRound) - kRound;
    const double r = ((x - k * kPio2_1) - k * kPio2_2) - k * kPio2_3;
    const double z = r * r;

    const double sp = S2 + z * (S3 + z * (S4 + z * (S5 + z * S6)));
    const double sn = r + r * z * (S1 + z * sp);
    const double cp = C1 + z * (C2 + z * (C3 + z * (C4 + z * (C5 + z * C6))));
    const double cs = (1.0 - 0.5 * z) + z * z * cp;

    const auto q = static_cast<std::int64_t>(k);
    const double a = (q & 1) ? cs : sn;
    const double b = (q & 1) ? sn : cs;
    s_out = (q & 2) ? -a : a;
    c_out = ((q + 1) & 2) ? -b : b;
}

inline double sin(double x) {
    double s, c;
    sincos(x, s, c);
    return s;
}

} // namespace rinr::detail
