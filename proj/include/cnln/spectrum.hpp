#pragma once

#include <cstddef>
#include <vector>

namespace cnln {

/// Eigenvalues of the coupling matrix restricted to the unpinned cells.
struct Spectrum {
    std::vector<double> eigenvalues;  ///< ascending, so the most negative comes first
    double largest_magnitude = 0.0;   ///< |lambda_m|
    double smallest_nonzero = 0.0;    ///< smallest |lambda| not classified as zero, 0 if none
    std::size_t zero_count = 0;       ///< eigenvalues classified as zero
    double stiffness_ratio = 1.0;     ///< |lambda_m| / smallest_nonzero

    std::size_t size() const noexcept { return eigenvalues.size(); }
};

}  // namespace cnln
