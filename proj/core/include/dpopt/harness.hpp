#pragma once

// Experiment runner: configuration, single runs, noise-multiplier sweeps,
// per-step telemetry, and file outputs.
//
// Output layout (one unique directory per run, never overwriting an earlier
// run's files):
//   <out>/<run-id>/steps.csv       one row per optimizer step
//   <out>/<run-id>/summary.json    final epsilon, seeds, timing, config echo
//   <out>/<run-id>/loss_series.csv raw and smoothed loss
//   <out>/<run-id>/qt_log.csv      per-step sampling rates for offline replay
//   <out>/sweep_summary.csv        one row per sweep member
//
// steps.csv header (fixed schema):
//   step,raw_loss,eval_loss_ema,clip_rate,clip_norm,lr_multiplier,q_t,cum_epsilon
// cum_epsilon is inf for sigma = 0 runs: no noise means no DP guarantee.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dpopt/accountant.hpp"
#include "dpopt/controllers.hpp"
#include "dpopt/data.hpp"
#include "dpopt/dp_engine.hpp"
#include "dpopt/models.hpp"

namespace dpopt {

enum class LrSchedule { kConstant, kCosineWarmup };

struct RunConfig {
    std::string name = "run";

    ModelSpec model;
    SyntheticArgs data;            // data.kind must match model.task()
    std::string dataset_file;      // when set, load this file instead of generating
    std::string dataset_export;    // when set, write the training dataset here

    int batch_size = 32;
    int microbatch_size = 8;
    int epochs = 1;

    LrSchedule schedule = LrSchedule::kConstant;
    double lr_base = 3e-4;
    int warmup_steps = 0;          // cosine schedule only

    double sigma = 0.0;
    ClipMode clip_mode = ClipMode::kSizeScaled;
    double clip_init = 3.0;
    double clip_min = 1e-3;
    double clip_max = 10.0;
    double target_clip_rate = 0.20;
    int history_capacity = 512;

    LrController::Params gamma;

    double ema_decay = 0.999;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_num = 1e-8;

    double delta = 1e-5;
    int order_min = 2;
    int order_max = 64;

    std::uint64_t data_seed = 1;
    std::uint64_t epoch_seed = 2;
    std::uint64_t noise_seed = 3;

    int eval_every = 10;           // EMA-swap evaluation cadence, in steps
    int median_window = 21;
    int ma_window = 50;

    void validate() const;  // throws std::invalid_argument on the first bad field
    std::vector<int> orders() const;
};

// JSON round trip. Parsing rejects unknown keys so config typos fail loudly.
RunConfig config_from_json_text(const std::string& text);
RunConfig config_from_json_file(const std::string& path);
std::string config_to_json_text(const RunConfig& cfg);

struct StepRow {
    long step;
    double raw_loss;
    double eval_loss_ema;  // latest EMA-swap evaluation, carried between evals
    double clip_rate;
    double clip_norm;      // C in effect during the step
    double lr_multiplier;  // gamma in effect during the step
    double q;              // realized B_t / N
    double cum_epsilon;    // inf when sigma == 0
};

struct RunSummary {
    std::string run_name;
    double sigma = 0.0;
    long steps = 0;
    double initial_loss = 0.0;        // full-dataset loss at theta_0
    double final_raw_loss = 0.0;
    double final_smoothed_loss = 0.0; // last point of smooth_series(raw_loss)
    double final_eval_loss = 0.0;     // last EMA-swap evaluation
    double epsilon = 0.0;             // inf when sigma == 0
    int best_order = 0;
    double delta = 0.0;
    double wall_seconds = 0.0;
    long peak_rss_bytes = -1;         // -1 when the platform probe is unavailable
    std::string rng_algorithm;
    std::string config_json;          // effective config echo
};

struct RunLog {
    std::vector<StepRow> rows;
    RunSummary summary;
};

// One full training run. Any step failure aborts with a diagnostic that
// names the step index and the failing operation; nothing is written to disk.
RunLog run(const RunConfig& cfg);

// Writes the per-run files listed above into a fresh directory under out_dir
// and returns that directory's path.
std::string write_outputs(const RunLog& log, const std::string& out_dir);

struct SweepEntry {
    double sigma = 0.0;
    bool ok = false;
    std::string error;    // failure diagnostic when !ok
    std::string run_dir;  // output directory when ok
    RunLog log;           // valid when ok
};

// Runs base once per sigma with identical data/epoch seeds; the noise seed
// is offset by the index in the sigma list. Individual failures are recorded
// and the sweep continues. Emits <out_dir>/sweep_summary.csv.
std::vector<SweepEntry> sweep(const RunConfig& base, std::span<const double> sigmas,
                              const std::string& out_dir);

struct ReplayResult {
    double sigma = 0.0;
    double delta = 0.0;
    long steps = 0;
    bool has_guarantee = false;  // false for sigma == 0
    double epsilon = 0.0;
    int best_order = 0;
};

// Offline accountant replay of a qt_log.csv file. sigma_override, when set,
// wins over the sigma recorded in the file header.
ReplayResult replay_q_log(const std::string& path, std::optional<double> sigma_override,
                          double delta, const std::vector<int>& orders);

}  // namespace dpopt
