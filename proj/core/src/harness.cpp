#include "dpopt/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "dpopt/smoothing.hpp"

#if defined(__unix__) || defined(__APPLE__)
#include <sys/resource.h>
#endif

namespace dpopt {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

long peak_rss_bytes() {
#if defined(__unix__) || defined(__APPLE__)
    rusage usage{};
    if (getrusage(RUSAGE_SELF, &usage) == 0 && usage.ru_maxrss > 0) {
#if defined(__APPLE__)
        return static_cast<long>(usage.ru_maxrss);  // bytes
#else
        return static_cast<long>(usage.ru_maxrss) * 1024L;  // kilobytes
#endif
    }
#endif
    return -1;
}

double lr_base_at(const RunConfig& cfg, long step, long total_steps) {
    if (cfg.schedule == LrSchedule::kConstant) {
        return cfg.lr_base;
    }
    if (cfg.warmup_steps > 0 && step <= cfg.warmup_steps) {
        return cfg.lr_base * static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
    }
    const double span = std::max<long>(1, total_steps - cfg.warmup_steps);
    const double progress =
        std::clamp(static_cast<double>(step - cfg.warmup_steps) / span, 0.0, 1.0);
    // Floor at 1% of base so the effective rate stays positive at the end.
    const double factor = std::max(0.01, 0.5 * (1.0 + std::cos(std::numbers::pi * progress)));
    return cfg.lr_base * factor;
}

const char* schedule_name(LrSchedule s) {
    return s == LrSchedule::kConstant ? "constant" : "cosine_warmup";
}

LrSchedule schedule_from_name(const std::string& name) {
    if (name == "constant") return LrSchedule::kConstant;
    if (name == "cosine_warmup") return LrSchedule::kCosineWarmup;
    throw std::invalid_argument("unknown lr schedule: " + name);
}

const char* clip_mode_name(ClipMode m) {
    return m == ClipMode::kSizeScaled ? "size_scaled" : "fixed";
}

ClipMode clip_mode_from_name(const std::string& name) {
    if (name == "size_scaled") return ClipMode::kSizeScaled;
    if (name == "fixed") return ClipMode::kFixed;
    throw std::invalid_argument("unknown clip mode: " + name);
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& where) {
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* key : allowed) {
            if (item.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw std::invalid_argument("config: unknown key '" + item.key() + "' in " + where);
        }
    }
}

template <typename T>
void read_if(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) {
        out = obj.at(key).get<T>();
    }
}

// Atomic-ish write: everything lands in a temp file that is renamed into
// place, so readers never observe a partial file.
void write_file_atomic(const fs::path& path, const std::string& contents) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("write_outputs: cannot open " + tmp.string());
        }
        out << contents;
        if (!out) {
            throw std::runtime_error("write_outputs: write failed for " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

fs::path claim_unique_dir(const fs::path& parent, const std::string& base) {
    for (int k = 1; k < 100000; ++k) {
        fs::path candidate = parent / (k == 1 ? base : base + "-" + std::to_string(k));
        std::error_code ec;
        if (fs::create_directory(candidate, ec) && !ec) {
            return candidate;
        }
    }
    throw std::runtime_error("write_outputs: could not claim a run directory under " +
                             parent.string());
}

fs::path claim_unique_file(const fs::path& parent, const std::string& stem,
                           const std::string& ext) {
    for (int k = 1; k < 100000; ++k) {
        fs::path candidate =
            parent / (k == 1 ? stem + ext : stem + "-" + std::to_string(k) + ext);
        if (!fs::exists(candidate)) {
            return candidate;
        }
    }
    throw std::runtime_error("sweep: could not claim a summary file under " + parent.string());
}

}  // namespace

std::vector<int> RunConfig::orders() const {
    std::vector<int> out(static_cast<std::size_t>(order_max - order_min + 1));
    std::iota(out.begin(), out.end(), order_min);
    return out;
}

void RunConfig::validate() const {
    model.validate();
    if (dataset_file.empty()) {
        if (data.kind != model.task()) {
            throw std::invalid_argument("config: data.kind does not match the model's task");
        }
        if (data.n < 1) {
            throw std::invalid_argument("config: data.n must be >= 1");
        }
        if (data.kind != TaskKind::kCharSequence && data.dims < 1) {
            throw std::invalid_argument("config: data.dims must be >= 1");
        }
        if (data.kind != TaskKind::kCharSequence && data.dims != model.input_dim) {
            throw std::invalid_argument("config: data.dims must equal model.input_dim");
        }
        if (data.margin < 0.0 || data.target_noise < 0.0) {
            throw std::invalid_argument("config: data.margin and data.target_noise must be >= 0");
        }
        if (batch_size > data.n) {
            throw std::invalid_argument("config: batch_size exceeds dataset size");
        }
    }
    if (microbatch_size < 1 || microbatch_size > batch_size) {
        throw std::invalid_argument("config: need 1 <= microbatch_size <= batch_size");
    }
    if (epochs < 1) {
        throw std::invalid_argument("config: epochs must be >= 1");
    }
    if (!(lr_base > 0.0) || !std::isfinite(lr_base)) {
        throw std::invalid_argument("config: lr.base must be positive");
    }
    if (warmup_steps < 0) {
        throw std::invalid_argument("config: lr.warmup_steps must be >= 0");
    }
    if (sigma < 0.0 || !std::isfinite(sigma)) {
        throw std::invalid_argument("config: sigma must be finite and >= 0");
    }
    if (!(clip_min > 0.0) || !(clip_min <= clip_max)) {
        throw std::invalid_argument("config: need 0 < clip.min <= clip.max");
    }
    if (!(clip_init >= clip_min && clip_init <= clip_max)) {
        throw std::invalid_argument("config: clip.init must lie in [clip.min, clip.max]");
    }
    if (!(target_clip_rate > 0.0 && target_clip_rate < 1.0)) {
        throw std::invalid_argument("config: clip.target_rate must lie in (0,1)");
    }
    if (history_capacity < 1) {
        throw std::invalid_argument("config: clip.history must be >= 1");
    }
    if (!(gamma.gamma_min > 0.0) || !(gamma.gamma_min <= gamma.gamma_max)) {
        throw std::invalid_argument("config: need 0 < gamma.min <= gamma.max");
    }
    if (!(gamma.up_factor > 1.0) || !(gamma.down_factor > 0.0 && gamma.down_factor < 1.0)) {
        throw std::invalid_argument("config: need gamma.up > 1 and gamma.down in (0,1)");
    }
    if (!(gamma.rho_low >= 0.0 && gamma.rho_low < gamma.rho_high && gamma.rho_high <= 1.0)) {
        throw std::invalid_argument("config: need 0 <= gamma.rho_low < gamma.rho_high <= 1");
    }
    if (!(ema_decay >= 0.0 && ema_decay < 1.0)) {
        throw std::invalid_argument("config: ema_decay must lie in [0,1)");
    }
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
        throw std::invalid_argument("config: adam betas must lie in [0,1)");
    }
    if (!(eps_num > 0.0)) {
        throw std::invalid_argument("config: adam.eps must be positive");
    }
    if (!(delta > 0.0 && delta < 1.0)) {
        throw std::invalid_argument("config: privacy.delta must lie in (0,1)");
    }
    if (order_min < 2 || order_min > order_max) {
        throw std::invalid_argument("config: need 2 <= privacy.order_min <= privacy.order_max");
    }
    if (eval_every < 1) {
        throw std::invalid_argument("config: eval_every must be >= 1");
    }
    if (median_window < 1 || median_window % 2 == 0) {
        throw std::invalid_argument("config: smoothing.median_window must be odd and >= 1");
    }
    if (ma_window < 1) {
        throw std::invalid_argument("config: smoothing.ma_window must be >= 1");
    }
}

RunConfig config_from_json_text(const std::string& text) {
    json root = json::parse(text);
    RunConfig cfg;
    check_keys(root,
               {"name", "model", "data", "batch_size", "microbatch_size", "epochs", "lr",
                "sigma", "clip_mode", "clip", "gamma", "ema_decay", "adam", "privacy", "seeds",
                "eval_every", "smoothing"},
               "top level");
    read_if(root, "name", cfg.name);
    if (root.contains("model")) {
        const json& m = root.at("model");
        check_keys(m, {"kind", "input_dim", "hidden_dim", "vocab_size", "window", "embed_dim"},
                   "model");
        std::string kind = model_kind_name(cfg.model.kind);
        read_if(m, "kind", kind);
        cfg.model.kind = model_kind_from_name(kind);
        read_if(m, "input_dim", cfg.model.input_dim);
        read_if(m, "hidden_dim", cfg.model.hidden_dim);
        read_if(m, "vocab_size", cfg.model.vocab_size);
        read_if(m, "window", cfg.model.window);
        read_if(m, "embed_dim", cfg.model.embed_dim);
    }
    cfg.data.kind = cfg.model.task();
    if (root.contains("data")) {
        const json& d = root.at("data");
        check_keys(d, {"kind", "n", "dims", "margin", "target_noise", "file", "export"}, "data");
        if (d.contains("kind")) {
            cfg.data.kind = task_kind_from_name(d.at("kind").get<std::string>());
        }
        read_if(d, "n", cfg.data.n);
        read_if(d, "dims", cfg.data.dims);
        read_if(d, "margin", cfg.data.margin);
        read_if(d, "target_noise", cfg.data.target_noise);
        read_if(d, "file", cfg.dataset_file);
        read_if(d, "export", cfg.dataset_export);
    }
    read_if(root, "batch_size", cfg.batch_size);
    read_if(root, "microbatch_size", cfg.microbatch_size);
    read_if(root, "epochs", cfg.epochs);
    if (root.contains("lr")) {
        const json& l = root.at("lr");
        check_keys(l, {"schedule", "base", "warmup_steps"}, "lr");
        if (l.contains("schedule")) {
            cfg.schedule = schedule_from_name(l.at("schedule").get<std::string>());
        }
        read_if(l, "base", cfg.lr_base);
        read_if(l, "warmup_steps", cfg.warmup_steps);
    }
    read_if(root, "sigma", cfg.sigma);
    if (root.contains("clip_mode")) {
        cfg.clip_mode = clip_mode_from_name(root.at("clip_mode").get<std::string>());
    }
    if (root.contains("clip")) {
        const json& c = root.at("clip");
        check_keys(c, {"init", "min", "max", "target_rate", "history"}, "clip");
        read_if(c, "init", cfg.clip_init);
        read_if(c, "min", cfg.clip_min);
        read_if(c, "max", cfg.clip_max);
        read_if(c, "target_rate", cfg.target_clip_rate);
        read_if(c, "history", cfg.history_capacity);
    }
    if (root.contains("gamma")) {
        const json& g = root.at("gamma");
        check_keys(g, {"min", "max", "up", "down", "rho_low", "rho_high"}, "gamma");
        read_if(g, "min", cfg.gamma.gamma_min);
        read_if(g, "max", cfg.gamma.gamma_max);
        read_if(g, "up", cfg.gamma.up_factor);
        read_if(g, "down", cfg.gamma.down_factor);
        read_if(g, "rho_low", cfg.gamma.rho_low);
        read_if(g, "rho_high", cfg.gamma.rho_high);
    }
    read_if(root, "ema_decay", cfg.ema_decay);
    if (root.contains("adam")) {
        const json& a = root.at("adam");
        check_keys(a, {"beta1", "beta2", "eps"}, "adam");
        read_if(a, "beta1", cfg.beta1);
        read_if(a, "beta2", cfg.beta2);
        read_if(a, "eps", cfg.eps_num);
    }
    if (root.contains("privacy")) {
        const json& p = root.at("privacy");
        check_keys(p, {"delta", "order_min", "order_max"}, "privacy");
        read_if(p, "delta", cfg.delta);
        read_if(p, "order_min", cfg.order_min);
        read_if(p, "order_max", cfg.order_max);
    }
    if (root.contains("seeds")) {
        const json& s = root.at("seeds");
        check_keys(s, {"data", "epoch", "noise"}, "seeds");
        read_if(s, "data", cfg.data_seed);
        read_if(s, "epoch", cfg.epoch_seed);
        read_if(s, "noise", cfg.noise_seed);
    }
    read_if(root, "eval_every", cfg.eval_every);
    if (root.contains("smoothing")) {
        const json& s = root.at("smoothing");
        check_keys(s, {"median_window", "ma_window"}, "smoothing");
        read_if(s, "median_window", cfg.median_window);
        read_if(s, "ma_window", cfg.ma_window);
    }
    cfg.validate();
    return cfg;
}

RunConfig config_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("config: cannot open " + path);
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return config_from_json_text(buffer.str());
}

std::string config_to_json_text(const RunConfig& cfg) {
    json root;
    root["name"] = cfg.name;
    root["model"] = {{"kind", model_kind_name(cfg.model.kind)},
                     {"input_dim", cfg.model.input_dim},
                     {"hidden_dim", cfg.model.hidden_dim},
                     {"vocab_size", cfg.model.vocab_size},
                     {"window", cfg.model.window},
                     {"embed_dim", cfg.model.embed_dim}};
    root["data"] = {{"kind", task_kind_name(cfg.data.kind)},
                    {"n", cfg.data.n},
                    {"dims", cfg.data.dims},
                    {"margin", cfg.data.margin},
                    {"target_noise", cfg.data.target_noise},
                    {"file", cfg.dataset_file},
                    {"export", cfg.dataset_export}};
    root["batch_size"] = cfg.batch_size;
    root["microbatch_size"] = cfg.microbatch_size;
    root["epochs"] = cfg.epochs;
    root["lr"] = {{"schedule", schedule_name(cfg.schedule)},
                  {"base", cfg.lr_base},
                  {"warmup_steps", cfg.warmup_steps}};
    root["sigma"] = cfg.sigma;
    root["clip_mode"] = clip_mode_name(cfg.clip_mode);
    root["clip"] = {{"init", cfg.clip_init},
                    {"min", cfg.clip_min},
                    {"max", cfg.clip_max},
                    {"target_rate", cfg.target_clip_rate},
                    {"history", cfg.history_capacity}};
    root["gamma"] = {{"min", cfg.gamma.gamma_min},   {"max", cfg.gamma.gamma_max},
                     {"up", cfg.gamma.up_factor},    {"down", cfg.gamma.down_factor},
                     {"rho_low", cfg.gamma.rho_low}, {"rho_high", cfg.gamma.rho_high}};
    root["ema_decay"] = cfg.ema_decay;
    root["adam"] = {{"beta1", cfg.beta1}, {"beta2", cfg.beta2}, {"eps", cfg.eps_num}};
    root["privacy"] = {
        {"delta", cfg.delta}, {"order_min", cfg.order_min}, {"order_max", cfg.order_max}};
    root["seeds"] = {{"data", cfg.data_seed}, {"epoch", cfg.epoch_seed}, {"noise", cfg.noise_seed}};
    root["eval_every"] = cfg.eval_every;
    root["smoothing"] = {{"median_window", cfg.median_window}, {"ma_window", cfg.ma_window}};
    return root.dump(2);
}

RunLog run(const RunConfig& cfg) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();

    Dataset ds;
    if (cfg.dataset_file.empty()) {
        SyntheticArgs args = cfg.data;
        args.seed = cfg.data_seed;
        ds = gen_synthetic(args);
    } else {
        ds = load_dataset(cfg.dataset_file);
    }
    if (ds.kind != cfg.model.task()) {
        throw std::invalid_argument("run: dataset task does not match the model kind");
    }
    const int expected_dims = cfg.model.kind == ModelKind::kCharMlpLm ? cfg.model.window
                                                                      : cfg.model.input_dim;
    if (ds.dims != expected_dims) {
        throw std::invalid_argument("run: dataset dims do not match the model input width");
    }
    if (cfg.batch_size > ds.size()) {
        throw std::invalid_argument("run: batch_size exceeds dataset size");
    }
    if (!cfg.dataset_export.empty()) {
        save_dataset(ds, cfg.dataset_export);
    }

    const long n = ds.size();
    const long steps_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
    const long total_steps = steps_per_epoch * cfg.epochs;

    ParameterVector theta = init_params(cfg.model, cfg.data_seed);
    OptimizerState state(theta.size());
    ClipController clip(cfg.clip_init, cfg.clip_min, cfg.clip_max, cfg.target_clip_rate,
                        static_cast<std::size_t>(cfg.history_capacity));
    LrController lr(cfg.gamma);
    EmaShadow ema(theta, cfg.ema_decay);
    GaussianSampler rng(cfg.noise_seed);
    const NoiseConfig noise{cfg.sigma, cfg.noise_seed, cfg.clip_mode};
    const DpAdamParams adam{cfg.beta1, cfg.beta2, cfg.eps_num};
    std::optional<PrivacyLedger> ledger;
    if (cfg.sigma > 0.0) {
        ledger.emplace(cfg.orders(), cfg.sigma);
    }

    std::vector<int> all_examples(ds.size());
    std::iota(all_examples.begin(), all_examples.end(), 0);
    const double initial_loss = mean_loss(cfg.model, theta, ds, all_examples);
    double eval_loss = initial_loss;

    const LossGradFn loss_grad = [&](std::span<const int> microbatch) {
        LossGrad lg = loss_and_grad(cfg.model, theta, ds, microbatch);
        return MicrobatchGrad{lg.loss, std::move(lg.grad)};
    };

    RunLog log;
    log.rows.reserve(static_cast<std::size_t>(total_steps));
    long t = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const std::vector<Batch> plan = make_batches(
            ds, cfg.batch_size, cfg.microbatch_size, cfg.epoch_seed + static_cast<std::uint64_t>(epoch));
        for (const Batch& batch : plan) {
            ++t;
            StepTelemetry tele;
            try {
                tele = dp_adam_ac_step(loss_grad, batch.microbatches, theta, state, clip, lr,
                                       ema, adam, lr_base_at(cfg, t, total_steps), noise, rng);
            } catch (const std::exception& ex) {
                throw std::runtime_error("run '" + cfg.name + "' aborted at step " +
                                         std::to_string(t) + ": " + ex.what());
            }
            const double q = static_cast<double>(batch.batch_size) / static_cast<double>(n);
            double cum_epsilon = kInf;
            if (ledger) {
                ledger->record_step(q);
                cum_epsilon = ledger->epsilon(cfg.delta).epsilon;
            }
            if (t == 1 || t % cfg.eval_every == 0 || t == total_steps) {
                ema.swap_for_eval(theta);
                eval_loss = mean_loss(cfg.model, theta, ds, all_examples);
                ema.restore(theta);
            }
            log.rows.push_back(StepRow{t, tele.loss, eval_loss, tele.clip_rate, tele.clip_norm,
                                       tele.lr_multiplier, q, cum_epsilon});
        }
    }

    std::vector<double> raw_losses(log.rows.size());
    for (std::size_t i = 0; i < log.rows.size(); ++i) {
        raw_losses[i] = log.rows[i].raw_loss;
    }
    const std::vector<double> smoothed =
        smooth_series(raw_losses, cfg.median_window, cfg.ma_window);

    RunSummary& s = log.summary;
    s.run_name = cfg.name;
    s.sigma = cfg.sigma;
    s.steps = t;
    s.initial_loss = initial_loss;
    s.final_raw_loss = raw_losses.back();
    s.final_smoothed_loss = smoothed.back();
    s.final_eval_loss = eval_loss;
    if (ledger) {
        const OrderEpsilon oe = ledger->epsilon(cfg.delta);
        s.epsilon = oe.epsilon;
        s.best_order = oe.best_order;
    } else {
        s.epsilon = kInf;
        s.best_order = 0;
    }
    s.delta = cfg.delta;
    s.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    s.peak_rss_bytes = peak_rss_bytes();
    s.rng_algorithm = GaussianSampler::kAlgorithm;
    s.config_json = config_to_json_text(cfg);
    return log;
}

std::string write_outputs(const RunLog& log, const std::string& out_dir) {
    fs::create_directories(out_dir);
    const fs::path dir = claim_unique_dir(out_dir, log.summary.run_name);

    {
        std::string csv = "step,raw_loss,eval_loss_ema,clip_rate,clip_norm,lr_multiplier,q_t,cum_epsilon\n";
        for (const StepRow& r : log.rows) {
            csv += std::to_string(r.step);
            csv += ',';
            csv += fmt_double(r.raw_loss);
            csv += ',';
            csv += fmt_double(r.eval_loss_ema);
            csv += ',';
            csv += fmt_double(r.clip_rate);
            csv += ',';
            csv += fmt_double(r.clip_norm);
            csv += ',';
            csv += fmt_double(r.lr_multiplier);
            csv += ',';
            csv += fmt_double(r.q);
            csv += ',';
            csv += fmt_double(r.cum_epsilon);
            csv += '\n';
        }
        write_file_atomic(dir / "steps.csv", csv);
    }
    {
        std::vector<double> raw(log.rows.size());
        for (std::size_t i = 0; i < log.rows.size(); ++i) {
            raw[i] = log.rows[i].raw_loss;
        }
        // Window sizes are echoed in the config; re-derive them from the summary.
        json cfg = json::parse(log.summary.config_json);
        const int median_window = cfg.at("smoothing").at("median_window").get<int>();
        const int ma_window = cfg.at("smoothing").at("ma_window").get<int>();
        const std::vector<double> smoothed = smooth_series(raw, median_window, ma_window);
        std::string csv = "step,raw_loss,smoothed_loss\n";
        for (std::size_t i = 0; i < raw.size(); ++i) {
            csv += std::to_string(log.rows[i].step);
            csv += ',';
            csv += fmt_double(raw[i]);
            csv += ',';
            csv += fmt_double(smoothed[i]);
            csv += '\n';
        }
        write_file_atomic(dir / "loss_series.csv", csv);
    }
    {
        std::string csv = "# sigma=" + fmt_double(log.summary.sigma) + "\nstep,q\n";
        for (const StepRow& r : log.rows) {
            csv += std::to_string(r.step);
            csv += ',';
            csv += fmt_double(r.q);
            csv += '\n';
        }
        write_file_atomic(dir / "qt_log.csv", csv);
    }
    {
        const RunSummary& s = log.summary;
        json summary;
        summary["run_name"] = s.run_name;
        summary["run_dir"] = dir.filename().string();
        summary["sigma"] = s.sigma;
        summary["steps"] = s.steps;
        summary["initial_loss"] = s.initial_loss;
        summary["final_raw_loss"] = s.final_raw_loss;
        summary["final_smoothed_loss"] = s.final_smoothed_loss;
        summary["final_eval_loss"] = s.final_eval_loss;
        if (s.sigma > 0.0) {
            summary["epsilon"] = s.epsilon;
            summary["best_order"] = s.best_order;
        } else {
            summary["epsilon"] = "n/a";  // no noise, no DP guarantee
            summary["best_order"] = "n/a";
        }
        summary["delta"] = s.delta;
        summary["wall_seconds"] = s.wall_seconds;
        if (s.peak_rss_bytes >= 0) {
            summary["peak_rss_bytes"] = s.peak_rss_bytes;
        } else {
            summary["peak_rss_bytes"] = "unavailable";
        }
        summary["seeds"] = json::parse(s.config_json).at("seeds");
        summary["noise_rng"] = s.rng_algorithm;
        summary["config"] = json::parse(s.config_json);
        write_file_atomic(dir / "summary.json", summary.dump(2) + "\n");
    }
    return dir.string();
}

std::vector<SweepEntry> sweep(const RunConfig& base, std::span<const double> sigmas,
                              const std::string& out_dir) {
    if (sigmas.empty()) {
        throw std::invalid_argument("sweep: empty sigma list");
    }
    base.validate();
    fs::create_directories(out_dir);

    std::vector<SweepEntry> entries;
    entries.reserve(sigmas.size());
    for (std::size_t i = 0; i < sigmas.size(); ++i) {
        RunConfig cfg = base;
        cfg.sigma = sigmas[i];
        cfg.noise_seed = base.noise_seed + i;  // documented offset: index in the sigma list
        {
            char suffix[32];
            std::snprintf(suffix, sizeof suffix, "-sigma%g", sigmas[i]);
            cfg.name = base.name + suffix;
        }
        SweepEntry entry;
        entry.sigma = sigmas[i];
        try {
            entry.log = run(cfg);
            entry.run_dir = write_outputs(entry.log, out_dir);
            entry.ok = true;
        } catch (const std::exception& ex) {
            entry.ok = false;
            entry.error = ex.what();
        }
        entries.push_back(std::move(entry));
    }

    std::string csv =
        "sigma,run_dir,steps,final_raw_loss,final_smoothed_loss,final_eval_loss,epsilon,"
        "best_order,status\n";
    for (const SweepEntry& e : entries) {
        csv += fmt_double(e.sigma);
        csv += ',';
        if (e.ok) {
            const RunSummary& s = e.log.summary;
            csv += fs::path(e.run_dir).filename().string();
            csv += ',';
            csv += std::to_string(s.steps);
            csv += ',';
            csv += fmt_double(s.final_raw_loss);
            csv += ',';
            csv += fmt_double(s.final_smoothed_loss);
            csv += ',';
            csv += fmt_double(s.final_eval_loss);
            csv += ',';
            if (e.sigma > 0.0) {
                csv += fmt_double(s.epsilon);
                csv += ',';
                csv += std::to_string(s.best_order);
            } else {
                csv += "n/a,n/a";
            }
            csv += ",ok\n";
        } else {
            std::string reason = e.error;
            std::replace(reason.begin(), reason.end(), ',', ';');
            csv += ",,,,,,error: " + reason + "\n";
        }
    }
    write_file_atomic(claim_unique_file(out_dir, "sweep_summary", ".csv"), csv);
    return entries;
}

ReplayResult replay_q_log(const std::string& path, std::optional<double> sigma_override,
                          double delta, const std::vector<int>& orders) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("replay_q_log: cannot open " + path);
    }
    std::optional<double> file_sigma;
    std::vector<double> qs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        if (line.rfind("# sigma=", 0) == 0) {
            file_sigma = std::stod(line.substr(8));
            continue;
        }
        if (line.rfind("step,", 0) == 0 || line[0] == '#') {
            continue;
        }
        const auto comma = line.find(',');
        const std::string q_text = comma == std::string::npos ? line : line.substr(comma + 1);
        qs.push_back(std::stod(q_text));
    }
    if (qs.empty()) {
        throw std::runtime_error("replay_q_log: no q values in " + path);
    }

    ReplayResult result;
    result.delta = delta;
    result.steps = static_cast<long>(qs.size());
    if (sigma_override) {
        result.sigma = *sigma_override;
    } else if (file_sigma) {
        result.sigma = *file_sigma;
    } else {
        throw std::runtime_error("replay_q_log: no sigma in file header; pass one explicitly");
    }
    if (result.sigma < 0.0) {
        throw std::invalid_argument("replay_q_log: sigma must be >= 0");
    }
    if (result.sigma == 0.0) {
        result.has_guarantee = false;
        result.epsilon = kInf;
        return result;
    }
    PrivacyLedger ledger(orders, result.sigma);
    for (double q : qs) {
        ledger.record_step(q);
    }
    const OrderEpsilon oe = ledger.epsilon(delta);
    result.has_guarantee = true;
    result.epsilon = oe.epsilon;
    result.best_order = oe.best_order;
    return result;
}

}  // namespace dpopt
