#include "dpopt/models.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace dpopt {

namespace {

double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + e^z) without overflow.
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::fabs(z))); }

void check_microbatch(const Dataset& ds, std::span<const int> microbatch, const char* what) {
    if (microbatch.empty()) {
        throw std::invalid_argument(std::string(what) + ": empty microbatch");
    }
    for (int idx : microbatch) {
        if (idx < 0 || idx >= ds.size()) {
            throw std::invalid_argument(std::string(what) + ": example index out of range");
        }
    }
}

// ---- logistic regression: theta = [w (d), b] --------------------------------

double logistic_forward(const ModelSpec& spec, const ParameterVector& theta,
                        std::span<const double> x) {
    double z = theta[spec.input_dim];
    for (int d = 0; d < spec.input_dim; ++d) {
        z += theta[d] * x[d];
    }
    return z;
}

LossGrad logistic_loss_grad(const ModelSpec& spec, const ParameterVector& theta,
                            const Dataset& ds, std::span<const int> microbatch,
                            bool want_grad) {
    LossGrad out{0.0, ParameterVector(want_grad ? theta.size() : 0, 0.0)};
    for (int idx : microbatch) {
        const auto& x = ds.inputs[idx];
        const double y = ds.targets[idx];
        const double z = logistic_forward(spec, theta, x);
        out.loss += softplus(z) - y * z;  // cross-entropy with label in {0,1}
        if (!want_grad) {
            continue;
        }
        const double dz = sigmoid(z) - y;
        for (int d = 0; d < spec.input_dim; ++d) {
            out.grad[d] += dz * x[d];
        }
        out.grad[spec.input_dim] += dz;
    }
    const double inv = 1.0 / static_cast<double>(microbatch.size());
    out.loss *= inv;
    for (double& g : out.grad) {
        g *= inv;
    }
    return out;
}

// ---- tanh MLP regressor: theta = [W1 (h x d), b1 (h), w2 (h), b2] -----------

struct MlpLayout {
    int w1 = 0, b1 = 0, w2 = 0, b2 = 0;  // offsets
};

MlpLayout mlp_layout(const ModelSpec& spec) {
    MlpLayout l;
    l.w1 = 0;
    l.b1 = spec.hidden_dim * spec.input_dim;
    l.w2 = l.b1 + spec.hidden_dim;
    l.b2 = l.w2 + spec.hidden_dim;
    return l;
}

LossGrad mlp_loss_grad(const ModelSpec& spec, const ParameterVector& theta, const Dataset& ds,
                       std::span<const int> microbatch, bool want_grad) {
    const MlpLayout l = mlp_layout(spec);
    LossGrad out{0.0, ParameterVector(want_grad ? theta.size() : 0, 0.0)};
    std::vector<double> hidden(spec.hidden_dim);
    for (int idx : microbatch) {
        const auto& x = ds.inputs[idx];
        const double y = ds.targets[idx];
        for (int h = 0; h < spec.hidden_dim; ++h) {
            double a = theta[l.b1 + h];
            const double* row = &theta[l.w1 + h * spec.input_dim];
            for (int d = 0; d < spec.input_dim; ++d) {
                a += row[d] * x[d];
            }
            hidden[h] = std::tanh(a);
        }
        double y_hat = theta[l.b2];
        for (int h = 0; h < spec.hidden_dim; ++h) {
            y_hat += theta[l.w2 + h] * hidden[h];
        }
        const double err = y_hat - y;
        out.loss += err * err;
        if (!want_grad) {
            continue;
        }
        const double dy = 2.0 * err;
        out.grad[l.b2] += dy;
        for (int h = 0; h < spec.hidden_dim; ++h) {
            out.grad[l.w2 + h] += dy * hidden[h];
            const double da = dy * theta[l.w2 + h] * (1.0 - hidden[h] * hidden[h]);
            out.grad[l.b1 + h] += da;
            double* grow = &out.grad[l.w1 + h * spec.input_dim];
            for (int d = 0; d < spec.input_dim; ++d) {
                grow[d] += da * x[d];
            }
        }
    }
    const double inv = 1.0 / static_cast<double>(microbatch.size());
    out.loss *= inv;
    for (double& g : out.grad) {
        g *= inv;
    }
    return out;
}

// ---- char MLP language model ------------------------------------------------
// theta = [E (V x e), W1 (h x window*e), b1 (h), W2 (V x h), b2 (V)]

struct CharLayout {
    int emb = 0, w1 = 0, b1 = 0, w2 = 0, b2 = 0;
    int concat = 0;  // window * embed
};

CharLayout char_layout(const ModelSpec& spec) {
    CharLayout l;
    l.concat = spec.window * spec.embed_dim;
    l.emb = 0;
    l.w1 = spec.vocab_size * spec.embed_dim;
    l.b1 = l.w1 + spec.hidden_dim * l.concat;
    l.w2 = l.b1 + spec.hidden_dim;
    l.b2 = l.w2 + spec.vocab_size * spec.hidden_dim;
    return l;
}

int token_at(const Dataset& ds, int example, int pos, int vocab) {
    const double raw = ds.inputs[example][pos];
    const int tok = static_cast<int>(raw);
    if (tok < 0 || tok >= vocab || static_cast<double>(tok) != raw) {
        throw std::invalid_argument("char_mlp_lm: token id out of vocabulary");
    }
    return tok;
}

LossGrad char_loss_grad(const ModelSpec& spec, const ParameterVector& theta, const Dataset& ds,
                        std::span<const int> microbatch, bool want_grad) {
    const CharLayout l = char_layout(spec);
    LossGrad out{0.0, ParameterVector(want_grad ? theta.size() : 0, 0.0)};
    std::vector<double> concat(l.concat);
    std::vector<double> hidden(spec.hidden_dim);
    std::vector<double> logits(spec.vocab_size);
    std::vector<double> probs(spec.vocab_size);
    std::vector<double> d_hidden(spec.hidden_dim);
    std::vector<double> d_concat(l.concat);

    for (int idx : microbatch) {
        for (int p = 0; p < spec.window; ++p) {
            const int tok = token_at(ds, idx, p, spec.vocab_size);
            const double* e = &theta[l.emb + tok * spec.embed_dim];
            for (int k = 0; k < spec.embed_dim; ++k) {
                concat[p * spec.embed_dim + k] = e[k];
            }
        }
        for (int h = 0; h < spec.hidden_dim; ++h) {
            double a = theta[l.b1 + h];
            const double* row = &theta[l.w1 + h * l.concat];
            for (int c = 0; c < l.concat; ++c) {
                a += row[c] * concat[c];
            }
            hidden[h] = std::tanh(a);
        }
        double max_logit = -1e300;
        for (int v = 0; v < spec.vocab_size; ++v) {
            double z = theta[l.b2 + v];
            const double* row = &theta[l.w2 + v * spec.hidden_dim];
            for (int h = 0; h < spec.hidden_dim; ++h) {
                z += row[h] * hidden[h];
            }
            logits[v] = z;
            max_logit = std::max(max_logit, z);
        }
        double sum_exp = 0.0;
        for (int v = 0; v < spec.vocab_size; ++v) {
            probs[v] = std::exp(logits[v] - max_logit);
            sum_exp += probs[v];
        }
        const double log_z = max_logit + std::log(sum_exp);
        const int target = static_cast<int>(ds.targets[idx]);
        if (target < 0 || target >= spec.vocab_size) {
            throw std::invalid_argument("char_mlp_lm: target token out of vocabulary");
        }
        out.loss += log_z - logits[target];
        if (!want_grad) {
            continue;
        }
        const double inv_sum = 1.0 / sum_exp;
        std::fill(d_hidden.begin(), d_hidden.end(), 0.0);
        for (int v = 0; v < spec.vocab_size; ++v) {
            const double dz = probs[v] * inv_sum - (v == target ? 1.0 : 0.0);
            out.grad[l.b2 + v] += dz;
            double* grow = &out.grad[l.w2 + v * spec.hidden_dim];
            const double* row = &theta[l.w2 + v * spec.hidden_dim];
            for (int h = 0; h < spec.hidden_dim; ++h) {
                grow[h] += dz * hidden[h];
                d_hidden[h] += dz * row[h];
            }
        }
        std::fill(d_concat.begin(), d_concat.end(), 0.0);
        for (int h = 0; h < spec.hidden_dim; ++h) {
            const double da = d_hidden[h] * (1.0 - hidden[h] * hidden[h]);
            out.grad[l.b1 + h] += da;
            double* grow = &out.grad[l.w1 + h * l.concat];
            const double* row = &theta[l.w1 + h * l.concat];
            for (int c = 0; c < l.concat; ++c) {
                grow[c] += da * concat[c];
                d_concat[c] += da * row[c];
            }
        }
        for (int p = 0; p < spec.window; ++p) {
            const int tok = token_at(ds, idx, p, spec.vocab_size);
            double* ge = &out.grad[l.emb + tok * spec.embed_dim];
            for (int k = 0; k < spec.embed_dim; ++k) {
                ge[k] += d_concat[p * spec.embed_dim + k];
            }
        }
    }
    const double inv = 1.0 / static_cast<double>(microbatch.size());
    out.loss *= inv;
    for (double& g : out.grad) {
        g *= inv;
    }
    return out;
}

LossGrad dispatch(const ModelSpec& spec, const ParameterVector& theta, const Dataset& ds,
                  std::span<const int> microbatch, bool want_grad) {
    spec.validate();
    if (ds.kind != spec.task()) {
        throw std::invalid_argument("loss_and_grad: dataset task does not match model kind");
    }
    const int expected_dims =
        spec.kind == ModelKind::kCharMlpLm ? spec.window : spec.input_dim;
    if (ds.dims != expected_dims) {
        throw std::invalid_argument("loss_and_grad: dataset dims " + std::to_string(ds.dims) +
                                    " do not match the model input width " +
                                    std::to_string(expected_dims));
    }
    require_same_size(theta.size(), spec.parameter_count(), "loss_and_grad");
    check_microbatch(ds, microbatch, "loss_and_grad");
    LossGrad out;
    switch (spec.kind) {
        case ModelKind::kLogisticRegression:
            out = logistic_loss_grad(spec, theta, ds, microbatch, want_grad);
            break;
        case ModelKind::kMlpRegressor:
            out = mlp_loss_grad(spec, theta, ds, microbatch, want_grad);
            break;
        case ModelKind::kCharMlpLm:
            out = char_loss_grad(spec, theta, ds, microbatch, want_grad);
            break;
    }
    if (!std::isfinite(out.loss)) {
        throw std::runtime_error("loss_and_grad: non-finite loss");
    }
    return out;
}

}  // namespace

const char* model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::kLogisticRegression: return "logistic_regression";
        case ModelKind::kMlpRegressor: return "mlp_regressor";
        case ModelKind::kCharMlpLm: return "char_mlp_lm";
    }
    throw std::logic_error("model_kind_name: unknown kind");
}

ModelKind model_kind_from_name(const std::string& name) {
    if (name == "logistic_regression") return ModelKind::kLogisticRegression;
    if (name == "mlp_regressor") return ModelKind::kMlpRegressor;
    if (name == "char_mlp_lm") return ModelKind::kCharMlpLm;
    throw std::invalid_argument("unknown model kind: " + name);
}

std::size_t ModelSpec::parameter_count() const {
    switch (kind) {
        case ModelKind::kLogisticRegression:
            return static_cast<std::size_t>(input_dim) + 1;
        case ModelKind::kMlpRegressor:
            return static_cast<std::size_t>(hidden_dim) * input_dim + 2ULL * hidden_dim + 1;
        case ModelKind::kCharMlpLm: {
            const std::size_t concat = static_cast<std::size_t>(window) * embed_dim;
            return static_cast<std::size_t>(vocab_size) * embed_dim + hidden_dim * concat +
                   hidden_dim + static_cast<std::size_t>(vocab_size) * hidden_dim + vocab_size;
        }
    }
    throw std::logic_error("parameter_count: unknown kind");
}

TaskKind ModelSpec::task() const {
    switch (kind) {
        case ModelKind::kLogisticRegression: return TaskKind::kBinaryClassification;
        case ModelKind::kMlpRegressor: return TaskKind::kRegression;
        case ModelKind::kCharMlpLm: return TaskKind::kCharSequence;
    }
    throw std::logic_error("task: unknown kind");
}

void ModelSpec::validate() const {
    switch (kind) {
        case ModelKind::kLogisticRegression:
            if (input_dim < 1) {
                throw std::invalid_argument("ModelSpec: input_dim must be >= 1");
            }
            return;
        case ModelKind::kMlpRegressor:
            if (input_dim < 1 || hidden_dim < 1) {
                throw std::invalid_argument("ModelSpec: input_dim and hidden_dim must be >= 1");
            }
            return;
        case ModelKind::kCharMlpLm:
            if (vocab_size < 2 || vocab_size > 64 || window < 1 || embed_dim < 1 ||
                hidden_dim < 1) {
                throw std::invalid_argument("ModelSpec: bad char_mlp_lm shape (vocab in [2,64])");
            }
            return;
    }
    throw std::logic_error("validate: unknown kind");
}

ParameterVector init_params(const ModelSpec& spec, std::uint64_t seed) {
    spec.validate();
    ParameterVector theta(spec.parameter_count(), 0.0);
    if (spec.kind == ModelKind::kLogisticRegression) {
        return theta;  // zeros: uniform predictive distribution
    }
    std::mt19937_64 rng(seed ^ 0xD1F0C0DEULL);
    auto uniform = [&rng](double scale) {
        return scale * (2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0);
    };
    if (spec.kind == ModelKind::kMlpRegressor) {
        const MlpLayout l = mlp_layout(spec);
        const double s1 = 1.0 / std::sqrt(static_cast<double>(spec.input_dim));
        const double s2 = 1.0 / std::sqrt(static_cast<double>(spec.hidden_dim));
        for (int i = 0; i < spec.hidden_dim * spec.input_dim; ++i) {
            theta[l.w1 + i] = uniform(s1);
        }
        for (int h = 0; h < spec.hidden_dim; ++h) {
            theta[l.w2 + h] = uniform(s2);
        }
        return theta;
    }
    const CharLayout l = char_layout(spec);
    const double se = 0.1;
    const double s1 = 1.0 / std::sqrt(static_cast<double>(l.concat));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(spec.hidden_dim));
    for (int i = 0; i < spec.vocab_size * spec.embed_dim; ++i) {
        theta[l.emb + i] = uniform(se);
    }
    for (int i = 0; i < spec.hidden_dim * l.concat; ++i) {
        theta[l.w1 + i] = uniform(s1);
    }
    for (int i = 0; i < spec.vocab_size * spec.hidden_dim; ++i) {
        theta[l.w2 + i] = uniform(s2);
    }
    return theta;
}

LossGrad loss_and_grad(const ModelSpec& spec, const ParameterVector& theta, const Dataset& ds,
                       std::span<const int> microbatch) {
    return dispatch(spec, theta, ds, microbatch, true);
}

double mean_loss(const ModelSpec& spec, const ParameterVector& theta, const Dataset& ds,
                 std::span<const int> microbatch) {
    return dispatch(spec, theta, ds, microbatch, false).loss;
}

}  // namespace dpopt
