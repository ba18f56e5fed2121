#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "dpopt/optim.hpp"

using namespace dpopt;

namespace {

ParameterVector random_vector(std::mt19937_64& rng, std::size_t n, double scale) {
    ParameterVector v(n);
    for (double& x : v) {
        x = scale * (2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0);
    }
    return v;
}

}  // namespace

TEST_CASE("sgd with zero momentum is plain gradient descent") {
    ParameterVector theta{1.0};
    OptimizerState state(1);
    sgd_momentum_step(theta, {2.0}, state, 0.5, 0.0);
    CHECK(theta[0] == 0.0);
    CHECK(state.step == 1);
}

TEST_CASE("sgd momentum buffer follows the moving-average recurrence") {
    // beta=0.9, m0=0, g=1, lr=1: m1 = 0.1, theta drops by 0.1
    ParameterVector theta{0.0};
    OptimizerState state(1);
    sgd_momentum_step(theta, {1.0}, state, 1.0, 0.9);
    CHECK(state.momentum[0] == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(theta[0] == doctest::Approx(-0.1).epsilon(1e-15));
}

TEST_CASE("sgd zero gradient decays the momentum buffer and moves theta by it") {
    ParameterVector theta{1.0};
    OptimizerState state(1);
    state.momentum[0] = 1.0;
    sgd_momentum_step(theta, {0.0}, state, 1.0, 0.5);
    CHECK(state.momentum[0] == 0.5);
    CHECK(theta[0] == 0.5);
}

TEST_CASE("sgd rejects bad inputs") {
    ParameterVector theta{1.0, 2.0};
    OptimizerState state(2);
    CHECK_THROWS_AS(sgd_momentum_step(theta, {1.0}, state, 0.1, 0.9), std::invalid_argument);
    CHECK_THROWS_AS(
        sgd_momentum_step(theta, {1.0, std::numeric_limits<double>::quiet_NaN()}, state, 0.1, 0.9),
        std::invalid_argument);
    CHECK_THROWS_AS(sgd_momentum_step(theta, {1.0, 2.0}, state, 0.1, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(sgd_momentum_step(theta, {1.0, 2.0}, state, 0.0, 0.9), std::invalid_argument);
    CHECK(state.step == 0);
}

TEST_CASE("adam first step matches the hand-evaluated update") {
    // t=1: m_hat = g, v_hat = g^2, update = lr * g/(|g| + eps)
    ParameterVector theta{0.0};
    OptimizerState state(1);
    adam_step(theta, {1.0}, state, 0.1, 0.9, 0.999, 1e-8);
    const double expected = -(0.1 * 1.0 / (1.0 + 1e-8));
    CHECK(theta[0] == doctest::Approx(expected).epsilon(1e-15));
    CHECK(theta[0] == doctest::Approx(-0.0999999990).epsilon(1e-9));
}

TEST_CASE("adam zero gradient from zero state is a fixed point forever") {
    ParameterVector theta{3.0, -2.0};
    const ParameterVector frozen = theta;
    OptimizerState state(2);
    for (int t = 0; t < 25; ++t) {
        adam_step(theta, {0.0, 0.0}, state, 0.1, 0.9, 0.999, 1e-8);
    }
    CHECK(theta == frozen);
}

TEST_CASE("adam steps at the same gradient differ across t (bias correction)") {
    ParameterVector theta{0.0};
    OptimizerState state(1);
    adam_step(theta, {1.0}, state, 0.1, 0.9, 0.999, 1e-8);
    const double first_move = theta[0];
    adam_step(theta, {1.0}, state, 0.1, 0.9, 0.999, 1e-8);
    const double second_move = theta[0] - first_move;
    CHECK(first_move != second_move);
}

TEST_CASE("adam first-step movement is bounded by the learning rate") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        ParameterVector theta = random_vector(rng, 8, 5.0);
        const ParameterVector before = theta;
        OptimizerState state(8);
        ParameterVector grad = random_vector(rng, 8, 100.0);
        adam_step(theta, grad, state, 0.1, 0.9, 0.999, 1e-8);
        for (std::size_t i = 0; i < theta.size(); ++i) {
            CHECK(std::fabs(theta[i] - before[i]) <= 0.1 * (1.0 + 1e-6));
        }
    }
}

TEST_CASE("adam rejects bad hyperparameters") {
    ParameterVector theta{0.0};
    OptimizerState state(1);
    CHECK_THROWS_AS(adam_step(theta, {1.0}, state, 0.1, 1.0, 0.999, 1e-8), std::invalid_argument);
    CHECK_THROWS_AS(adam_step(theta, {1.0}, state, 0.1, 0.9, -0.1, 1e-8), std::invalid_argument);
    CHECK_THROWS_AS(adam_step(theta, {1.0}, state, 0.1, 0.9, 0.999, 0.0), std::invalid_argument);
}

TEST_CASE("adamw with zero decay is bitwise-identical to adam") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        ParameterVector theta = random_vector(rng, 16, 2.0);
        ParameterVector theta_w = theta;
        OptimizerState state_a(16);
        OptimizerState state_w(16);
        for (int step = 0; step < 5; ++step) {
            ParameterVector grad = random_vector(rng, 16, 1.0);
            adam_step(theta, grad, state_a, 0.05, 0.9, 0.999, 1e-8);
            adamw_step(theta_w, grad, state_w, 0.05, 0.9, 0.999, 1e-8, 0.0);
        }
        CHECK(theta == theta_w);
        CHECK(state_a.first_moment == state_w.first_moment);
        CHECK(state_a.second_moment == state_w.second_moment);
    }
}

TEST_CASE("adamw decoupled decay acts before the adaptive step") {
    SUBCASE("full decay with zero gradient zeroes theta") {
        ParameterVector theta{5.0};
        OptimizerState state(1);
        adamw_step(theta, {0.0}, state, 1.0, 0.9, 0.999, 1e-8, 1.0);
        CHECK(theta[0] == 0.0);
    }
    SUBCASE("small decay shrinks theta by lr*decay") {
        ParameterVector theta{1.0};
        OptimizerState state(1);
        adamw_step(theta, {0.0}, state, 0.1, 0.9, 0.999, 1e-8, 0.01);
        CHECK(theta[0] == doctest::Approx(0.999).epsilon(1e-15));
    }
    SUBCASE("negative decay is rejected") {
        ParameterVector theta{1.0};
        OptimizerState state(1);
        CHECK_THROWS_AS(adamw_step(theta, {0.0}, state, 0.1, 0.9, 0.999, 1e-8, -1e-3),
                        std::invalid_argument);
    }
}

TEST_CASE("optimizer steps are deterministic in their inputs") {
    std::mt19937_64 rng(23);
    const ParameterVector theta0 = random_vector(rng, 12, 1.0);
    const ParameterVector grad = random_vector(rng, 12, 1.0);

    ParameterVector a = theta0;
    ParameterVector b = theta0;
    OptimizerState sa(12);
    OptimizerState sb(12);
    adam_step(a, grad, sa, 0.01, 0.9, 0.999, 1e-8);
    adam_step(b, grad, sb, 0.01, 0.9, 0.999, 1e-8);
    CHECK(a == b);
    CHECK(sa.first_moment == sb.first_moment);
    CHECK(sa.second_moment == sb.second_moment);
    CHECK(sa.step == sb.step);
}
