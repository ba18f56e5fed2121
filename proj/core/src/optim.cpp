#include "dpopt/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace dpopt {

namespace {

void validate_step_inputs(const ParameterVector& theta, const ParameterVector& grad,
                          const OptimizerState& state, double lr, const char* what) {
    require_same_size(theta.size(), grad.size(), what);
    require_same_size(theta.size(), state.dim(), what);
    require_finite(grad, what);
    if (!(lr > 0.0) || !std::isfinite(lr)) {
        throw std::invalid_argument(std::string(what) + ": learning rate must be positive");
    }
}

void validate_betas(double beta1, double beta2, double eps_num, const char* what) {
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
        throw std::invalid_argument(std::string(what) + ": beta coefficients must lie in [0,1)");
    }
    if (!(eps_num > 0.0)) {
        throw std::invalid_argument(std::string(what) + ": eps_num must be positive");
    }
}

}  // namespace

void sgd_momentum_step(ParameterVector& theta, const ParameterVector& grad,
                       OptimizerState& state, double lr, double beta) {
    validate_step_inputs(theta, grad, state, lr, "sgd_momentum_step");
    if (beta < 0.0 || beta >= 1.0) {
        throw std::invalid_argument("sgd_momentum_step: beta must lie in [0,1)");
    }
    state.step += 1;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        state.momentum[i] = beta * state.momentum[i] + (1.0 - beta) * grad[i];
        theta[i] -= lr * state.momentum[i];
    }
}

void adam_step(ParameterVector& theta, const ParameterVector& grad, OptimizerState& state,
               double lr, double beta1, double beta2, double eps_num) {
    validate_step_inputs(theta, grad, state, lr, "adam_step");
    validate_betas(beta1, beta2, eps_num, "adam_step");
    state.step += 1;
    const double bias1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bias2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double g = grad[i];
        state.first_moment[i] = beta1 * state.first_moment[i] + (1.0 - beta1) * g;
        state.second_moment[i] = beta2 * state.second_moment[i] + (1.0 - beta2) * (g * g);
        const double m_hat = state.first_moment[i] / bias1;
        const double v_hat = state.second_moment[i] / bias2;
        theta[i] -= lr * m_hat / (std::sqrt(v_hat) + eps_num);
    }
}

void adamw_step(ParameterVector& theta, const ParameterVector& grad, OptimizerState& state,
                double lr, double beta1, double beta2, double eps_num, double weight_decay) {
    validate_step_inputs(theta, grad, state, lr, "adamw_step");
    validate_betas(beta1, beta2, eps_num, "adamw_step");
    if (weight_decay < 0.0) {
        throw std::invalid_argument("adamw_step: weight_decay must be non-negative");
    }
    state.step += 1;
    const double bias1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bias2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double g = grad[i];
        state.first_moment[i] = beta1 * state.first_moment[i] + (1.0 - beta1) * g;
        state.second_moment[i] = beta2 * state.second_moment[i] + (1.0 - beta2) * (g * g);
        const double m_hat = state.first_moment[i] / bias1;
        const double v_hat = state.second_moment[i] / bias2;
        theta[i] -= lr * weight_decay * theta[i];  // decoupled decay before the adaptive step
        theta[i] -= lr * m_hat / (std::sqrt(v_hat) + eps_num);
    }
}

}  // namespace dpopt
