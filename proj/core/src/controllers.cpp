#include "dpopt/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dpopt {

double percentile_linear(std::span<const double> values, double q) {
    if (values.empty()) {
        throw std::invalid_argument("percentile_linear: empty input");
    }
    if (!(q >= 0.0 && q <= 100.0)) {
        throw std::invalid_argument("percentile_linear: q must lie in [0,100]");
    }
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double pos = (q / 100.0) * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= sorted.size()) {
        return sorted.back();
    }
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double observed_clip_rate(const MicrobatchReport& report, double clip_norm) {
    report.validate();
    std::size_t clipped = 0;
    for (std::size_t i = 0; i < report.count(); ++i) {
        if (report.pre_norms[i] > clip_norm * static_cast<double>(report.sizes[i])) {
            ++clipped;
        }
    }
    return static_cast<double>(clipped) / static_cast<double>(report.count());
}

ClipController::ClipController(double initial_clip_norm, double clip_min, double clip_max,
                               double target_rate, std::size_t history_capacity)
    : capacity_(history_capacity),
      clip_norm_(initial_clip_norm),
      clip_min_(clip_min),
      clip_max_(clip_max),
      target_rate_(target_rate) {
    if (!(clip_min > 0.0) || !(clip_min <= clip_max)) {
        throw std::invalid_argument("ClipController: need 0 < clip_min <= clip_max");
    }
    if (!(initial_clip_norm >= clip_min && initial_clip_norm <= clip_max)) {
        throw std::invalid_argument("ClipController: initial clip norm outside [clip_min, clip_max]");
    }
    if (!(target_rate > 0.0 && target_rate < 1.0)) {
        throw std::invalid_argument("ClipController: target rate must lie in (0,1)");
    }
    if (capacity_ == 0) {
        throw std::invalid_argument("ClipController: history capacity must be >= 1");
    }
}

double ClipController::record_and_update(const MicrobatchReport& report) {
    report.validate();
    for (std::size_t i = 0; i < report.count(); ++i) {
        const double unit_norm =
            report.pre_norms[i] / std::max(1.0, static_cast<double>(report.sizes[i]));
        if (history_.size() == capacity_) {
            history_.pop_front();
        }
        history_.push_back(unit_norm);
    }
    std::vector<double> snapshot(history_.begin(), history_.end());
    const double q = 100.0 * (1.0 - target_rate_);
    clip_norm_ = std::clamp(percentile_linear(snapshot, q), clip_min_, clip_max_);
    return clip_norm_;
}

LrController::LrController(const Params& params) : params_(params) {
    if (!(params.gamma_min > 0.0) || !(params.gamma_min <= params.gamma_max)) {
        throw std::invalid_argument("LrController: need 0 < gamma_min <= gamma_max");
    }
    if (!(params.up_factor > 1.0) || !(params.down_factor > 0.0 && params.down_factor < 1.0)) {
        throw std::invalid_argument("LrController: need up_factor > 1 and down_factor in (0,1)");
    }
    if (!(params.rho_low >= 0.0 && params.rho_low < params.rho_high && params.rho_high <= 1.0)) {
        throw std::invalid_argument("LrController: need 0 <= rho_low < rho_high <= 1");
    }
    gamma_ = std::clamp(1.0, params.gamma_min, params.gamma_max);
}

double LrController::update(double clip_rate) {
    if (!(clip_rate >= 0.0 && clip_rate <= 1.0)) {
        throw std::invalid_argument("LrController: clip rate must lie in [0,1]");
    }
    if (clip_rate < params_.rho_low) {
        gamma_ = std::min(params_.gamma_max, gamma_ * params_.up_factor);
    } else if (clip_rate > params_.rho_high) {
        gamma_ = std::max(params_.gamma_min, gamma_ * params_.down_factor);
    }
    return gamma_;
}

EmaShadow::EmaShadow(const ParameterVector& theta, double decay)
    : shadow_(theta), decay_(decay) {
    if (!(decay >= 0.0 && decay < 1.0)) {
        throw std::invalid_argument("EmaShadow: decay must lie in [0,1)");
    }
}

void EmaShadow::update(const ParameterVector& theta) {
    require_same_size(shadow_.size(), theta.size(), "EmaShadow::update");
    for (std::size_t i = 0; i < shadow_.size(); ++i) {
        shadow_[i] = decay_ * shadow_[i] + (1.0 - decay_) * theta[i];
    }
}

void EmaShadow::swap_for_eval(ParameterVector& theta) {
    require_same_size(shadow_.size(), theta.size(), "EmaShadow::swap_for_eval");
    if (swapped_) {
        throw std::logic_error("EmaShadow: swap_for_eval called with a swap already pending");
    }
    backup_ = theta;
    theta = shadow_;
    swapped_ = true;
}

void EmaShadow::restore(ParameterVector& theta) {
    if (!swapped_) {
        throw std::logic_error("EmaShadow: restore called without a pending swap");
    }
    theta = backup_;
    swapped_ = false;
}

}  // namespace dpopt
