#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "dpopt/smoothing.hpp"

using namespace dpopt;

TEST_CASE("unit windows are the identity") {
    const std::vector<double> v{3.0, 1.0, 4.0, 1.0, 5.0};
    CHECK(smooth_series(v, 1, 1) == v);
}

TEST_CASE("constant series are unchanged by any windows") {
    const std::vector<double> v(40, 2.5);
    CHECK(smooth_series(v, 1, 1) == v);
    CHECK(smooth_series(v, 5, 3) == v);
    CHECK(smooth_series(v, 21, 50) == v);
    // idempotence on the smoothed output
    const std::vector<double> once = smooth_series(v, 5, 4);
    CHECK(smooth_series(once, 5, 4) == once);
}

TEST_CASE("windowed medians with shrinking boundaries, hand-evaluated") {
    const std::vector<double> v{1.0, 9.0, 1.0, 9.0, 1.0};
    // index 0: {1} -> 1; 1: {1,9,1} -> 1; 2: {9,1,9} -> 9; 3: {1,9,1} -> 1; 4: {1} -> 1
    CHECK(smooth_series(v, 3, 1) == std::vector<double>{1.0, 1.0, 9.0, 1.0, 1.0});
}

TEST_CASE("median pass removes isolated spikes") {
    const std::vector<double> v{0.0, 0.0, 100.0, 0.0, 0.0};
    CHECK(rolling_median(v, 3) == std::vector<double>(5, 0.0));
}

TEST_CASE("moving average is a centered mean with shrinking boundaries") {
    const std::vector<double> v{0.0, 3.0, 6.0};
    const auto out = moving_average(v, 3);
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 3.0);
    CHECK(out[2] == 6.0);
    const std::vector<double> w{2.0, 4.0, 6.0, 8.0};
    const auto out2 = moving_average(w, 3);
    CHECK(out2[1] == 4.0);
    CHECK(out2[2] == 6.0);
}

TEST_CASE("even widths behave as the next odd width") {
    std::mt19937_64 rng(8);
    std::vector<double> v(30);
    for (double& x : v) {
        x = static_cast<double>(rng() % 100);
    }
    CHECK(moving_average(v, 4) == moving_average(v, 5));
    CHECK(rolling_median(v, 6) == rolling_median(v, 7));
}

TEST_CASE("smoothing preserves length and finiteness") {
    std::mt19937_64 rng(9);
    std::vector<double> v(137);
    for (double& x : v) {
        x = std::exp(6.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 3.0);
    }
    const auto out = smooth_series(v, 21, 50);
    CHECK(out.size() == v.size());
    for (double x : out) {
        CHECK(std::isfinite(x));
    }
}

TEST_CASE("window validation") {
    const std::vector<double> v{1.0, 2.0};
    CHECK_THROWS_AS(smooth_series(v, 2, 1), std::invalid_argument);   // even median window
    CHECK_THROWS_AS(smooth_series(v, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(moving_average(v, 0), std::invalid_argument);
    CHECK_THROWS_AS(rolling_median(v, -3), std::invalid_argument);
}
