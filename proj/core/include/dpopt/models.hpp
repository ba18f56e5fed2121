#pragma once

// Small differentiable models with hand-derived exact gradients. A fixed
// zoo instead of an autodiff system: the optimizers and the accountant are
// the subject here, so the gradient surface stays minimal and exactly
// testable against finite differences.

#include <cstdint>
#include <span>

#include "dpopt/data.hpp"
#include "dpopt/vec.hpp"

namespace dpopt {

enum class ModelKind { kLogisticRegression, kMlpRegressor, kCharMlpLm };

const char* model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(const std::string& name);

// Shapes only; the flat parameter layout is fixed by kind:
//   logistic_regression: [w (input_dim), b]
//   mlp_regressor:       [W1 (hidden x input, row-major), b1, w2, b2] with tanh hidden
//   char_mlp_lm:         [embeddings (vocab x embed), W1 (hidden x window*embed),
//                         b1, W2 (vocab x hidden), b2], tanh hidden, softmax out
struct ModelSpec {
    ModelKind kind = ModelKind::kLogisticRegression;
    int input_dim = 20;   // logistic / mlp feature count
    int hidden_dim = 16;  // mlp / char lm
    int vocab_size = 28;  // char lm, <= 64
    int window = 8;       // char lm context length
    int embed_dim = 8;    // char lm

    std::size_t parameter_count() const;
    TaskKind task() const;
    void validate() const;
};

// Deterministic initial parameters: zeros for logistic regression, scaled
// uniform weights (zero biases) for the networks.
ParameterVector init_params(const ModelSpec& spec, std::uint64_t seed);

struct LossGrad {
    double loss;
    ParameterVector grad;
};

// Mean loss over the microbatch (cross-entropy for classification and the
// char LM, squared error for regression) and its exact gradient.
LossGrad loss_and_grad(const ModelSpec& spec, const ParameterVector& theta, const Dataset& ds,
                       std::span<const int> microbatch);

// Mean loss only; same reduction as loss_and_grad.
double mean_loss(const ModelSpec& spec, const ParameterVector& theta, const Dataset& ds,
                 std::span<const int> microbatch);

}  // namespace dpopt
