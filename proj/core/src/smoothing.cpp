#include "dpopt/smoothing.hpp"

#include <algorithm>
#include <stdexcept>

namespace dpopt {

namespace {

int effective_half(int window, std::size_t i, std::size_t n) {
    const int half = window / 2;
    const int left = static_cast<int>(i);
    const int right = static_cast<int>(n - 1 - i);
    return std::min(half, std::min(left, right));
}

}  // namespace

std::vector<double> rolling_median(std::span<const double> values, int window) {
    if (window < 1) {
        throw std::invalid_argument("rolling_median: window must be >= 1");
    }
    const std::size_t n = values.size();
    std::vector<double> out(n);
    std::vector<double> scratch;
    for (std::size_t i = 0; i < n; ++i) {
        const int h = effective_half(window, i, n);
        scratch.assign(values.begin() + (i - h), values.begin() + (i + h + 1));
        std::nth_element(scratch.begin(), scratch.begin() + h, scratch.end());
        out[i] = scratch[h];  // window length 2h+1 is odd; the middle is the median
    }
    return out;
}

std::vector<double> moving_average(std::span<const double> values, int window) {
    if (window < 1) {
        throw std::invalid_argument("moving_average: window must be >= 1");
    }
    const std::size_t n = values.size();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int h = effective_half(window, i, n);
        double sum = 0.0;
        for (std::size_t k = i - h; k <= i + h; ++k) {
            sum += values[k];
        }
        out[i] = sum / static_cast<double>(2 * h + 1);
    }
    return out;
}

std::vector<double> smooth_series(std::span<const double> values, int median_window,
                                  int ma_window) {
    if (median_window % 2 == 0) {
        throw std::invalid_argument("smooth_series: median window must be odd");
    }
    const std::vector<double> med = rolling_median(values, median_window);
    return moving_average(med, ma_window);
}

}  // namespace dpopt
