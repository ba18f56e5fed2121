#pragma once

// Deterministic synthetic datasets and the batching utilities.
//
// Three task kinds:
//   binary_classification — Gaussian features pushed away from a planted
//     separating hyperplane, so the data is linearly separable at a
//     configured margin by construction;
//   regression — Gaussian features with a noisy linear target;
//   char_sequence — next-character prediction windows over text assembled
//     from two tone template pools with disjoint word vocabularies.
//
// Generation is a pure function of its arguments; the same seed always
// yields the same bytes.

#include <cstdint>
#include <string>
#include <vector>

namespace dpopt {

enum class TaskKind { kBinaryClassification, kRegression, kCharSequence };

const char* task_kind_name(TaskKind kind);
TaskKind task_kind_from_name(const std::string& name);

struct Dataset {
    TaskKind kind = TaskKind::kBinaryClassification;
    int dims = 0;  // feature count; context window length for char_sequence
    std::vector<std::vector<double>> inputs;
    std::vector<double> targets;  // class in {0,1}, real target, or next-token id

    int size() const { return static_cast<int>(inputs.size()); }
};

struct SyntheticArgs {
    TaskKind kind = TaskKind::kBinaryClassification;
    int n = 10000;
    int dims = 20;
    std::uint64_t seed = 1;
    double margin = 1.0;          // classification: minimum signed distance to the separator
    double target_noise = 0.05;   // regression: stddev of target noise
};

Dataset gen_synthetic(const SyntheticArgs& args);
Dataset gen_synthetic(TaskKind kind, int n, int dims, std::uint64_t seed);

// The hyperplane the classification generator plants; exposed so a separator
// can be exhibited without training. Returns dims weights followed by a bias.
std::vector<double> planted_separator(int dims, std::uint64_t seed);

// Character vocabulary of the char_sequence generator: 'a'..'z', space, '.'.
int char_vocab_size();
int char_window();  // context length of generated windows

// One logical batch: microbatches hold example indices in iteration order.
struct Batch {
    std::vector<std::vector<int>> microbatches;
    int batch_size = 0;  // realized B_t (the final batch of an epoch may be short)
};

// Shuffles the dataset once with epoch_seed and cuts it into batches of
// batch_size (last one possibly short), each split into ceil(B_t/microbatch_size)
// microbatches. Every example appears exactly once per epoch.
std::vector<Batch> make_batches(const Dataset& ds, int batch_size, int microbatch_size,
                                std::uint64_t epoch_seed);

// Plain-text round trip: a one-line header (task kind and dims), then one
// example per line (inputs then target, space separated, full precision).
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace dpopt
