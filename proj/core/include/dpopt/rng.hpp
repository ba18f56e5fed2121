#pragma once

// Seedable Gaussian sampler used for DP noise.
//
// The generator is mt19937_64 and the transform is the classic Box-Muller
// pair, so a run is reproducible from its noise seed on any platform with
// IEEE doubles. The algorithm identifier below is recorded in run summaries.
// Reproducibility is a feature for experiments; a production privacy
// deployment should draw from an operating-system entropy source instead.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace dpopt {

class GaussianSampler {
  public:
    static constexpr const char* kAlgorithm = "mt19937_64/box-muller";

    explicit GaussianSampler(std::uint64_t seed) : engine_(seed) {}

    // One standard normal draw.
    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // u1 in (0,1], u2 in [0,1); 53-bit mantissas.
        const double u1 = 1.0 - uniform01();
        const double u2 = uniform01();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

  private:
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace dpopt
