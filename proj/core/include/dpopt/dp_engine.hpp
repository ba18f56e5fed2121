#pragma once

// Micro-batched clipped-gradient aggregation with Gaussian noise, and the
// full DP optimizer step that composes aggregation, the Adam update, and
// the three controllers.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "dpopt/controllers.hpp"
#include "dpopt/microbatch.hpp"
#include "dpopt/optim.hpp"
#include "dpopt/rng.hpp"
#include "dpopt/vec.hpp"

namespace dpopt {

// How the per-microbatch clipping threshold is derived from the clip norm C:
//   kSizeScaled — threshold C * |X_i|, so the bound grows with microbatch size;
//   kFixed      — threshold C regardless of size, i.e. every microbatch
//                 contributes at most C to the sum.
// Only kFixed with one-example microbatches gives the sum a per-example l2
// sensitivity of C; kSizeScaled trades that away for scale-invariance of the
// unit-norm history.
enum class ClipMode { kSizeScaled, kFixed };

struct NoiseConfig {
    double sigma = 0.0;           // noise multiplier; 0 skips the noise path entirely
    std::uint64_t seed = 0;       // seeds the Gaussian sampler
    ClipMode clip_mode = ClipMode::kSizeScaled;
};

// Scales grad by min(1, threshold/||grad||) and reports the pre-clip norm.
struct ClipResult {
    ParameterVector clipped;
    double pre_norm;
};
ClipResult clip_gradient(ParameterVector grad, double threshold);

// Mean loss and gradient of one microbatch (given as example indices).
struct MicrobatchGrad {
    double loss;
    ParameterVector grad;
};
using LossGradFn = std::function<MicrobatchGrad(std::span<const int>)>;

struct AggregateResult {
    ParameterVector sum_grad;  // sum of clipped microbatch gradients
    MicrobatchReport report;
    double mean_loss;          // size-weighted mean of microbatch losses
};

// Evaluates, clips and sums every microbatch gradient in data order. Each
// microbatch gets a fresh gradient buffer, so nothing leaks across
// microbatches. Throws before anything is returned if a gradient is
// non-finite.
AggregateResult aggregate_microbatches(const LossGradFn& loss_grad,
                                       std::span<const std::vector<int>> microbatches,
                                       double clip_norm, ClipMode mode);

// Adds N(0, (sigma*clip_norm)^2) noise per coordinate, then divides by the
// logical batch size. sigma = 0 performs the division only and draws nothing
// from the sampler. Noise is drawn in coordinate order.
void privatize(ParameterVector& sum_grad, double sigma, double clip_norm, int batch_size,
               GaussianSampler& rng);

struct DpAdamParams {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_num = 1e-8;
};

// What one step reports back to the harness. clip_norm and lr_multiplier are
// the values that were in effect during the step; the controllers already
// hold the post-step values.
struct StepTelemetry {
    double loss;
    double clip_rate;
    double clip_norm;
    double lr_multiplier;
    std::vector<double> pre_norms;
};

// One full DP-Adam step with adaptive clipping:
//   aggregate clipped microbatch gradients -> add noise, average over the
//   batch -> bias-corrected Adam update at rate gamma * lr_base -> EMA
//   update -> observe the clip rate -> update clip norm and lr multiplier.
//
// The batch size is the total example count over the microbatches. The step
// is all-or-nothing: a failure in any microbatch leaves theta, the optimizer
// state and all three controllers untouched.
StepTelemetry dp_adam_ac_step(const LossGradFn& loss_grad,
                              std::span<const std::vector<int>> microbatches,
                              ParameterVector& theta, OptimizerState& state,
                              ClipController& clip, LrController& lr, EmaShadow& ema,
                              const DpAdamParams& adam, double lr_base,
                              const NoiseConfig& noise, GaussianSampler& rng);

}  // namespace dpopt
