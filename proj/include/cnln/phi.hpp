#pragma once

#include <array>
#include <cmath>

namespace cnln {

/// Below this |z| the phi functions use their Taylor series.
inline constexpr double phi_series_threshold = 1e-2;

namespace detail {
// 1/k! for k = 0..10
inline constexpr std::array<double, 11> inv_factorial = {
    1.0, 1.0, 1.0 / 2.0, 1.0 / 6.0, 1.0 / 24.0, 1.0 / 120.0, 1.0 / 720.0, 1.0 / 5040.0,
    1.0 / 40320.0, 1.0 / 362880.0, 1.0 / 3628800.0};
}  // namespace detail

/// phi1(z) = (e^z - 1) / z for z <= 0, with phi1(0) = 1.
inline double phi1(double z) noexcept {
    if (std::abs(z) < phi_series_threshold) {
        // sum_{k=0..8} z^k / (k+1)!
        double s = detail::inv_factorial[9];
        for (int k = 8; k >= 1; --k) s = s * z + detail::inv_factorial[k];
        return s;
    }
    return std::expm1(z) / z;
}

/// phi2(z) = (e^z - 1 - z) / z^2 for z <= 0, with phi2(0) = 1/2.
inline double phi2(double z) noexcept {
    if (std::abs(z) < phi_series_threshold) {
        // sum_{k=0..8} z^k / (k+2)!
        double s = detail::inv_factorial[10];
        for (int k = 9; k >= 2; --k) s = s * z + detail::inv_factorial[k];
        return s;
    }
    if (z > -1.0) return (std::expm1(z) - z) / (z * z);
    // No cancellation for z <= -1, and this form cannot overflow z * z.
    return (phi1(z) - 1.0) / z;
}

}  // namespace cnln
