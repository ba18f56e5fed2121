#pragma once

// Non-private reference optimizers: SGD with momentum, Adam, and AdamW.
// These serve as baselines and as the reduction target for the DP path
// when the noise multiplier is zero.

#include <cstddef>

#include "dpopt/vec.hpp"

namespace dpopt {

// Moment buffers plus the step counter. The counter is owned here and is
// incremented at the start of every update, so bias correction can never
// drift out of sync with the number of updates applied.
struct OptimizerState {
    ParameterVector first_moment;   // m
    ParameterVector second_moment;  // v, entries >= 0
    ParameterVector momentum;       // SGD-M buffer
    long step = 0;                  // t; 1 on the first update

    explicit OptimizerState(std::size_t dim)
        : first_moment(dim, 0.0), second_moment(dim, 0.0), momentum(dim, 0.0) {}

    std::size_t dim() const { return first_moment.size(); }
};

// theta <- theta - lr * m, with m <- beta*m + (1-beta)*g.
void sgd_momentum_step(ParameterVector& theta, const ParameterVector& grad,
                       OptimizerState& state, double lr, double beta);

// Bias-corrected Adam update: theta <- theta - lr * m_hat / (sqrt(v_hat) + eps_num).
void adam_step(ParameterVector& theta, const ParameterVector& grad, OptimizerState& state,
               double lr, double beta1, double beta2, double eps_num);

// Adam with decoupled weight decay: theta is first shrunk by lr*weight_decay*theta,
// then the adaptive step is applied. weight_decay = 0 reproduces adam_step bitwise.
void adamw_step(ParameterVector& theta, const ParameterVector& grad, OptimizerState& state,
                double lr, double beta1, double beta2, double eps_num, double weight_decay);

}  // namespace dpopt
