#pragma once

// Loss-curve smoothing: a rolling median pass followed by a moving average.
// Windows are centered; near the boundaries they shrink symmetrically to the
// points available, so output length always equals input length. An even
// window width behaves as the next odd width.

#include <span>
#include <vector>

namespace dpopt {

std::vector<double> rolling_median(std::span<const double> values, int window);
std::vector<double> moving_average(std::span<const double> values, int window);

// rolling_median(median_window) then moving_average(ma_window).
std::vector<double> smooth_series(std::span<const double> values, int median_window,
                                  int ma_window);

}  // namespace dpopt
