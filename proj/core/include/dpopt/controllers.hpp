#pragma once

// The three control loops around the DP optimizer:
//
//  * ClipController  — keeps a bounded history of microbatch unit norms
//    (pre-clip norm / microbatch size) and re-derives the clipping norm C
//    from a percentile of that history, targeting a fixed clip rate.
//  * LrController    — a bounded learning-rate multiplier nudged up when
//    almost nothing clips and down when too much clips.
//  * EmaShadow       — an exponential moving average of the parameters,
//    swapped in for evaluation only. It is deterministic post-processing of
//    the (already privatized) iterates and therefore touches neither the
//    optimizer state nor the privacy ledger.

#include <deque>
#include <span>
#include <vector>

#include "dpopt/microbatch.hpp"
#include "dpopt/vec.hpp"

namespace dpopt {

// q-th percentile (q in [0,100]) with linear interpolation between closest
// ranks of the sorted values: rank position (q/100)*(n-1).
double percentile_linear(std::span<const double> values, double q);

// Fraction of microbatches whose pre-clip norm strictly exceeds
// clip_norm * size. Boundary values (n_i == C*m_i) do not count.
double observed_clip_rate(const MicrobatchReport& report, double clip_norm);

class ClipController {
  public:
    ClipController(double initial_clip_norm, double clip_min, double clip_max,
                   double target_rate, std::size_t history_capacity);

    // Appends one unit norm per microbatch (evicting oldest beyond capacity),
    // then sets C to the 100*(1 - target_rate) percentile of the history,
    // clamped into [clip_min, clip_max]. Returns the new C.
    double record_and_update(const MicrobatchReport& report);

    double clip_norm() const { return clip_norm_; }
    double clip_min() const { return clip_min_; }
    double clip_max() const { return clip_max_; }
    double target_rate() const { return target_rate_; }
    std::size_t history_size() const { return history_.size(); }
    std::size_t history_capacity() const { return capacity_; }

  private:
    std::deque<double> history_;  // unit norms, oldest first
    std::size_t capacity_;
    double clip_norm_;
    double clip_min_;
    double clip_max_;
    double target_rate_;
};

class LrController {
  public:
    struct Params {
        double gamma_min = 0.25;
        double gamma_max = 4.0;
        double up_factor = 1.01;
        double down_factor = 0.995;
        double rho_low = 0.10;
        double rho_high = 0.30;
    };

    explicit LrController(const Params& params);

    // clip_rate < rho_low  -> gamma *= up_factor   (capped at gamma_max)
    // clip_rate > rho_high -> gamma *= down_factor (floored at gamma_min)
    // otherwise unchanged. Returns the new gamma.
    double update(double clip_rate);

    double multiplier() const { return gamma_; }
    const Params& params() const { return params_; }

  private:
    Params params_;
    double gamma_ = 1.0;
};

class EmaShadow {
  public:
    EmaShadow(const ParameterVector& theta, double decay);

    // shadow <- decay * shadow + (1 - decay) * theta; theta untouched.
    void update(const ParameterVector& theta);

    // Copies theta aside and writes the shadow over it. Must be paired with
    // restore(); nesting swaps is an error.
    void swap_for_eval(ParameterVector& theta);

    // Writes the saved parameters back bitwise.
    void restore(ParameterVector& theta);

    const ParameterVector& shadow() const { return shadow_; }
    double decay() const { return decay_; }
    bool swapped() const { return swapped_; }

  private:
    ParameterVector shadow_;
    ParameterVector backup_;
    double decay_;
    bool swapped_ = false;
};

}  // namespace dpopt
