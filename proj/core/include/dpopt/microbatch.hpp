#pragma once

// Per-step record of microbatch pre-clip gradient norms and sizes. Produced
// by the aggregation pass and consumed by the clip-rate and adaptive-clipping
// controllers.

#include <cmath>
#include <stdexcept>
#include <vector>

namespace dpopt {

struct MicrobatchReport {
    std::vector<double> pre_norms;  // global l2 norm of each microbatch gradient, pre-clip
    std::vector<int> sizes;         // example count of each microbatch, aligned with pre_norms

    std::size_t count() const { return pre_norms.size(); }

    void validate() const {
        if (pre_norms.size() != sizes.size() || pre_norms.empty()) {
            throw std::invalid_argument("MicrobatchReport: pre_norms/sizes must be non-empty and aligned");
        }
        for (double n : pre_norms) {
            if (!std::isfinite(n) || n < 0.0) {
                throw std::invalid_argument("MicrobatchReport: pre-clip norms must be finite and >= 0");
            }
        }
        for (int m : sizes) {
            if (m <= 0) {
                throw std::invalid_argument("MicrobatchReport: microbatch sizes must be positive");
            }
        }
    }
};

}  // namespace dpopt
