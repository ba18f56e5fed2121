#include "dpopt/dp_engine.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dpopt {

ClipResult clip_gradient(ParameterVector grad, double threshold) {
    if (!(threshold > 0.0)) {
        throw std::invalid_argument("clip_gradient: threshold must be positive");
    }
    require_finite(grad, "clip_gradient");
    const double pre_norm = l2_norm(grad);
    if (!std::isfinite(pre_norm)) {
        throw std::invalid_argument("clip_gradient: non-finite gradient norm");
    }
    if (pre_norm > threshold) {
        const double scale = threshold / pre_norm;
        for (double& g : grad) {
            g *= scale;
        }
    }
    return ClipResult{std::move(grad), pre_norm};
}

AggregateResult aggregate_microbatches(const LossGradFn& loss_grad,
                                       std::span<const std::vector<int>> microbatches,
                                       double clip_norm, ClipMode mode) {
    if (microbatches.empty()) {
        throw std::invalid_argument("aggregate_microbatches: no microbatches");
    }
    if (!(clip_norm > 0.0)) {
        throw std::invalid_argument("aggregate_microbatches: clip norm must be positive");
    }

    AggregateResult out;
    out.report.pre_norms.reserve(microbatches.size());
    out.report.sizes.reserve(microbatches.size());
    double loss_weighted = 0.0;
    long total_examples = 0;

    for (const std::vector<int>& microbatch : microbatches) {
        if (microbatch.empty()) {
            throw std::invalid_argument("aggregate_microbatches: empty microbatch");
        }
        MicrobatchGrad eval = loss_grad(microbatch);
        if (!std::isfinite(eval.loss)) {
            throw std::runtime_error("aggregate_microbatches: non-finite microbatch loss");
        }
        const int size = static_cast<int>(microbatch.size());
        const double threshold =
            (mode == ClipMode::kSizeScaled) ? clip_norm * static_cast<double>(size) : clip_norm;
        ClipResult clipped = clip_gradient(std::move(eval.grad), threshold);

        if (out.sum_grad.empty()) {
            out.sum_grad.assign(clipped.clipped.size(), 0.0);
        }
        require_same_size(out.sum_grad.size(), clipped.clipped.size(), "aggregate_microbatches");
        for (std::size_t i = 0; i < out.sum_grad.size(); ++i) {
            out.sum_grad[i] += clipped.clipped[i];
        }
        out.report.pre_norms.push_back(clipped.pre_norm);
        out.report.sizes.push_back(size);
        loss_weighted += eval.loss * static_cast<double>(size);
        total_examples += size;
    }
    out.mean_loss = loss_weighted / static_cast<double>(total_examples);
    return out;
}

void privatize(ParameterVector& sum_grad, double sigma, double clip_norm, int batch_size,
               GaussianSampler& rng) {
    if (batch_size <= 0) {
        throw std::invalid_argument("privatize: batch size must be positive");
    }
    if (sigma < 0.0 || !std::isfinite(sigma)) {
        throw std::invalid_argument("privatize: sigma must be finite and >= 0");
    }
    const double inv_batch = 1.0 / static_cast<double>(batch_size);
    if (sigma == 0.0) {
        for (double& g : sum_grad) {
            g *= inv_batch;
        }
        return;
    }
    const double noise_std = sigma * clip_norm;
    for (double& g : sum_grad) {
        g = (g + noise_std * rng.next()) * inv_batch;
    }
}

StepTelemetry dp_adam_ac_step(const LossGradFn& loss_grad,
                              std::span<const std::vector<int>> microbatches,
                              ParameterVector& theta, OptimizerState& state,
                              ClipController& clip, LrController& lr, EmaShadow& ema,
                              const DpAdamParams& adam, double lr_base,
                              const NoiseConfig& noise, GaussianSampler& rng) {
    const double clip_norm_used = clip.clip_norm();
    const double gamma_used = lr.multiplier();

    // Everything that can fail happens before any state is touched.
    AggregateResult agg =
        aggregate_microbatches(loss_grad, microbatches, clip_norm_used, noise.clip_mode);
    const long batch_size =
        std::accumulate(agg.report.sizes.begin(), agg.report.sizes.end(), 0L);
    privatize(agg.sum_grad, noise.sigma, clip_norm_used, static_cast<int>(batch_size), rng);

    adam_step(theta, agg.sum_grad, state, gamma_used * lr_base, adam.beta1, adam.beta2,
              adam.eps_num);
    ema.update(theta);

    const double clip_rate = observed_clip_rate(agg.report, clip_norm_used);
    clip.record_and_update(agg.report);
    lr.update(clip_rate);

    return StepTelemetry{agg.mean_loss, clip_rate, clip_norm_used, gamma_used,
                         std::move(agg.report.pre_norms)};
}

}  // namespace dpopt
