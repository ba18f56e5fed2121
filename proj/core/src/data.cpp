#include "dpopt/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace dpopt {

namespace {

constexpr int kCharWindow = 8;
constexpr int kCharVocab = 28;  // 'a'..'z' = 0..25, ' ' = 26, '.' = 27

// Two template pools with disjoint letter ranges ('a'-'m' vs 'n'-'z'), so the
// two tones never share a word.
constexpr std::array<const char*, 12> kWarmWords = {
    "calm", "glad", "ideal", "gleam", "amble", "fable",
    "medal", "beam",  "jade",  "chime", "blade", "heal",
};
constexpr std::array<const char*, 12> kSourWords = {
    "snort", "worst", "snout", "spout", "worn", "sour",
    "rot",   "spurn", "torn",  "runt",  "stunt", "trout",
};

int char_to_token(char c) {
    if (c >= 'a' && c <= 'z') {
        return c - 'a';
    }
    if (c == ' ') {
        return 26;
    }
    if (c == '.') {
        return 27;
    }
    throw std::invalid_argument("char_sequence: unmapped character");
}

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Box-Muller without caching; generation cost is irrelevant here and the
// stateless form keeps the layout of draws easy to reason about.
double normal(std::mt19937_64& rng) {
    const double u1 = 1.0 - uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

Dataset gen_classification(const SyntheticArgs& args) {
    std::vector<double> sep = planted_separator(args.dims, args.seed);
    std::mt19937_64 rng(args.seed * 0x9E3779B97F4A7C15ULL + 1);
    Dataset ds;
    ds.kind = TaskKind::kBinaryClassification;
    ds.dims = args.dims;
    ds.inputs.reserve(args.n);
    ds.targets.reserve(args.n);
    for (int i = 0; i < args.n; ++i) {
        std::vector<double> x(args.dims);
        for (double& v : x) {
            v = normal(rng);
        }
        double s = sep[args.dims];  // bias
        for (int d = 0; d < args.dims; ++d) {
            s += sep[d] * x[d];
        }
        const bool positive = s >= 0.0;
        // Shift along the separator normal so |w.x + b| >= margin.
        const double shift = positive ? args.margin : -args.margin;
        for (int d = 0; d < args.dims; ++d) {
            x[d] += shift * sep[d];
        }
        ds.inputs.push_back(std::move(x));
        ds.targets.push_back(positive ? 1.0 : 0.0);
    }
    return ds;
}

Dataset gen_regression(const SyntheticArgs& args) {
    std::vector<double> sep = planted_separator(args.dims, args.seed);
    std::mt19937_64 rng(args.seed * 0x9E3779B97F4A7C15ULL + 2);
    Dataset ds;
    ds.kind = TaskKind::kRegression;
    ds.dims = args.dims;
    ds.inputs.reserve(args.n);
    ds.targets.reserve(args.n);
    for (int i = 0; i < args.n; ++i) {
        std::vector<double> x(args.dims);
        for (double& v : x) {
            v = normal(rng);
        }
        double y = sep[args.dims];
        for (int d = 0; d < args.dims; ++d) {
            y += sep[d] * x[d];
        }
        y += args.target_noise * normal(rng);
        ds.inputs.push_back(std::move(x));
        ds.targets.push_back(y);
    }
    return ds;
}

Dataset gen_char_sequence(const SyntheticArgs& args) {
    std::mt19937_64 rng(args.seed * 0x9E3779B97F4A7C15ULL + 3);
    // Build text until it covers n windows, line by line; each line samples
    // one tone pool.
    std::vector<int> tokens;
    tokens.reserve(static_cast<std::size_t>(args.n) + 64);
    while (tokens.size() < static_cast<std::size_t>(args.n) + kCharWindow) {
        const bool warm = (rng() & 1ULL) == 0ULL;
        const auto& pool = warm ? kWarmWords : kSourWords;
        const int words = 3 + static_cast<int>(rng() % 6);
        for (int w = 0; w < words; ++w) {
            const char* word = pool[rng() % pool.size()];
            for (const char* c = word; *c != '\0'; ++c) {
                tokens.push_back(char_to_token(*c));
            }
            tokens.push_back(w + 1 == words ? char_to_token('.') : char_to_token(' '));
        }
    }
    Dataset ds;
    ds.kind = TaskKind::kCharSequence;
    ds.dims = kCharWindow;
    ds.inputs.reserve(args.n);
    ds.targets.reserve(args.n);
    for (int i = 0; i < args.n; ++i) {
        std::vector<double> window(kCharWindow);
        for (int k = 0; k < kCharWindow; ++k) {
            window[k] = static_cast<double>(tokens[i + k]);
        }
        ds.inputs.push_back(std::move(window));
        ds.targets.push_back(static_cast<double>(tokens[i + kCharWindow]));
    }
    return ds;
}

}  // namespace

const char* task_kind_name(TaskKind kind) {
    switch (kind) {
        case TaskKind::kBinaryClassification: return "binary_classification";
        case TaskKind::kRegression: return "regression";
        case TaskKind::kCharSequence: return "char_sequence";
    }
    throw std::logic_error("task_kind_name: unknown kind");
}

TaskKind task_kind_from_name(const std::string& name) {
    if (name == "binary_classification") return TaskKind::kBinaryClassification;
    if (name == "regression") return TaskKind::kRegression;
    if (name == "char_sequence") return TaskKind::kCharSequence;
    throw std::invalid_argument("unknown task kind: " + name);
}

std::vector<double> planted_separator(int dims, std::uint64_t seed) {
    if (dims < 1) {
        throw std::invalid_argument("planted_separator: dims must be >= 1");
    }
    std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL);
    std::vector<double> sep(dims + 1);
    double norm_sq = 0.0;
    for (int d = 0; d < dims; ++d) {
        sep[d] = normal(rng);
        norm_sq += sep[d] * sep[d];
    }
    const double inv_norm = 1.0 / std::sqrt(norm_sq);
    for (int d = 0; d < dims; ++d) {
        sep[d] *= inv_norm;
    }
    sep[dims] = 0.25 * normal(rng);  // bias
    return sep;
}

int char_vocab_size() { return kCharVocab; }
int char_window() { return kCharWindow; }

Dataset gen_synthetic(const SyntheticArgs& args) {
    if (args.n < 1) {
        throw std::invalid_argument("gen_synthetic: need n >= 1");
    }
    if (args.kind != TaskKind::kCharSequence && args.dims < 1) {
        throw std::invalid_argument("gen_synthetic: need dims >= 1");
    }
    switch (args.kind) {
        case TaskKind::kBinaryClassification: return gen_classification(args);
        case TaskKind::kRegression: return gen_regression(args);
        case TaskKind::kCharSequence: return gen_char_sequence(args);
    }
    throw std::logic_error("gen_synthetic: unknown kind");
}

Dataset gen_synthetic(TaskKind kind, int n, int dims, std::uint64_t seed) {
    SyntheticArgs args;
    args.kind = kind;
    args.n = n;
    args.dims = dims;
    args.seed = seed;
    return gen_synthetic(args);
}

std::vector<Batch> make_batches(const Dataset& ds, int batch_size, int microbatch_size,
                                std::uint64_t epoch_seed) {
    const int n = ds.size();
    if (batch_size < 1 || microbatch_size < 1 || microbatch_size > batch_size ||
        batch_size > n) {
        throw std::invalid_argument("make_batches: need 1 <= microbatch_size <= batch_size <= n");
    }
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(epoch_seed);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<Batch> batches;
    batches.reserve(static_cast<std::size_t>((n + batch_size - 1) / batch_size));
    for (int start = 0; start < n; start += batch_size) {
        const int realized = std::min(batch_size, n - start);
        Batch batch;
        batch.batch_size = realized;
        for (int mb_start = 0; mb_start < realized; mb_start += microbatch_size) {
            const int mb_len = std::min(microbatch_size, realized - mb_start);
            std::vector<int> microbatch(order.begin() + start + mb_start,
                                        order.begin() + start + mb_start + mb_len);
            batch.microbatches.push_back(std::move(microbatch));
        }
        batches.push_back(std::move(batch));
    }
    return batches;
}

void save_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("save_dataset: cannot open " + path);
    }
    out << task_kind_name(ds.kind) << ' ' << ds.dims << '\n';
    char buf[32];
    for (int i = 0; i < ds.size(); ++i) {
        std::string line;
        for (double v : ds.inputs[i]) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            line += buf;
            line += ' ';
        }
        std::snprintf(buf, sizeof buf, "%.17g", ds.targets[i]);
        line += buf;
        out << line << '\n';
    }
    if (!out) {
        throw std::runtime_error("save_dataset: write failed for " + path);
    }
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("load_dataset: cannot open " + path);
    }
    Dataset ds;
    std::string kind_name;
    if (!(in >> kind_name >> ds.dims)) {
        throw std::runtime_error("load_dataset: bad header in " + path);
    }
    ds.kind = task_kind_from_name(kind_name);
    if (ds.dims < 1) {
        throw std::runtime_error("load_dataset: bad dims in " + path);
    }
    std::string line;
    std::getline(in, line);  // consume the header newline
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::istringstream row(line);
        std::vector<double> values;
        double v;
        while (row >> v) {
            values.push_back(v);
        }
        if (values.size() != static_cast<std::size_t>(ds.dims) + 1) {
            throw std::runtime_error("load_dataset: row with wrong field count in " + path);
        }
        ds.targets.push_back(values.back());
        values.pop_back();
        ds.inputs.push_back(std::move(values));
    }
    if (ds.inputs.empty()) {
        throw std::runtime_error("load_dataset: no examples in " + path);
    }
    return ds;
}

}  // namespace dpopt
