#pragma once

// Flat parameter buffers. A model's parameters, gradients and optimizer
// moments are all plain length-d double vectors; everything here is the
// small set of helpers the optimizers and the DP engine share.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dpopt {

using ParameterVector = std::vector<double>;

inline bool all_finite(std::span<const double> v) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            return false;
        }
    }
    return true;
}

inline double l2_norm(std::span<const double> v) {
    double sum_sq = 0.0;
    for (double x : v) {
        sum_sq += x * x;
    }
    return std::sqrt(sum_sq);
}

inline void require_same_size(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                    std::to_string(a) + " vs " + std::to_string(b) + ")");
    }
}

inline void require_finite(std::span<const double> v, const char* what) {
    if (!all_finite(v)) {
        throw std::invalid_argument(std::string(what) + ": non-finite entries");
    }
}

}  // namespace dpopt
