// dpopt command line: run single experiments, sweep noise multipliers,
// replay privacy ledgers offline, and smooth exported loss series.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dpopt/harness.hpp"
#include "dpopt/smoothing.hpp"

namespace {

dpopt::RunConfig load_config(const std::string& path) {
    if (path.empty()) {
        return dpopt::RunConfig{};
    }
    return dpopt::config_from_json_file(path);
}

void apply_seed(dpopt::RunConfig& cfg, const std::optional<std::uint64_t>& seed) {
    if (seed) {
        cfg.data_seed = *seed;
        cfg.epoch_seed = *seed + 1;
        cfg.noise_seed = *seed + 2;
    }
}

void print_run_summary(const dpopt::RunSummary& s, const std::string& dir) {
    std::printf("run %s: %ld steps, loss %.6f -> %.6f (smoothed %.6f)\n", s.run_name.c_str(),
                s.steps, s.initial_loss, s.final_raw_loss, s.final_smoothed_loss);
    if (s.sigma > 0.0) {
        std::printf("  sigma=%g epsilon=%.6f (alpha*=%d, delta=%g)\n", s.sigma, s.epsilon,
                    s.best_order, s.delta);
    } else {
        std::printf("  sigma=0: non-private baseline, no epsilon\n");
    }
    std::printf("  wall=%.2fs rss=%s outputs=%s\n", s.wall_seconds,
                s.peak_rss_bytes >= 0 ? (std::to_string(s.peak_rss_bytes) + " bytes").c_str()
                                      : "unavailable",
                dir.c_str());
}

std::vector<double> read_series(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("smooth: cannot open " + path);
    }
    std::vector<double> values;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        values.push_back(std::stod(line));
    }
    if (values.empty()) {
        throw std::runtime_error("smooth: no values in " + path);
    }
    return values;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dpopt: differentially private optimization toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<double> sigma_override;

    auto* run_cmd = app.add_subcommand("run", "Execute one training run");
    run_cmd->add_option("--config", config_path, "JSON config file (defaults apply when omitted)");
    run_cmd->add_option("--out", out_dir, "Output directory");
    run_cmd->add_option("--sigma", sigma_override, "Override the config noise multiplier");
    run_cmd->add_option("--seed", seed, "Master seed: sets data/epoch/noise seeds to s, s+1, s+2");

    std::vector<double> sweep_sigmas{0.0, 0.1, 0.5, 0.7, 1.0};
    auto* sweep_cmd = app.add_subcommand("sweep", "Run the config once per noise multiplier");
    sweep_cmd->add_option("--config", config_path, "JSON config file");
    sweep_cmd->add_option("--out", out_dir, "Output directory");
    sweep_cmd->add_option("--sigma", sweep_sigmas, "Noise multipliers to sweep")
        ->delimiter(',');
    sweep_cmd->add_option("--seed", seed, "Master seed: sets data/epoch/noise seeds to s, s+1, s+2");

    std::string qlog_path;
    double delta = 1e-5;
    int order_min = 2;
    int order_max = 64;
    auto* eps_cmd = app.add_subcommand("epsilon", "Replay a qt_log.csv through the accountant");
    eps_cmd->add_option("--qlog", qlog_path, "qt_log.csv produced by a run")->required();
    eps_cmd->add_option("--sigma", sigma_override, "Noise multiplier (overrides the file header)");
    eps_cmd->add_option("--delta", delta, "Target delta");
    eps_cmd->add_option("--order-min", order_min, "Smallest Renyi order");
    eps_cmd->add_option("--order-max", order_max, "Largest Renyi order");

    std::string series_in;
    std::string series_out;
    int median_window = 21;
    int ma_window = 50;
    auto* smooth_cmd = app.add_subcommand("smooth", "Smooth a one-value-per-line series");
    smooth_cmd->add_option("--in", series_in, "Input series file")->required();
    smooth_cmd->add_option("--out", series_out, "Output file (stdout when omitted)");
    smooth_cmd->add_option("--median-window", median_window, "Rolling median window (odd)");
    smooth_cmd->add_option("--ma-window", ma_window, "Moving average window");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            dpopt::RunConfig cfg = load_config(config_path);
            apply_seed(cfg, seed);
            if (sigma_override) {
                cfg.sigma = *sigma_override;
            }
            const dpopt::RunLog log = dpopt::run(cfg);
            const std::string dir = dpopt::write_outputs(log, out_dir);
            print_run_summary(log.summary, dir);
        } else if (*sweep_cmd) {
            dpopt::RunConfig cfg = load_config(config_path);
            apply_seed(cfg, seed);
            const auto entries = dpopt::sweep(cfg, sweep_sigmas, out_dir);
            int failed = 0;
            for (const auto& e : entries) {
                if (e.ok) {
                    const auto& s = e.log.summary;
                    if (e.sigma > 0.0) {
                        std::printf("sigma=%-5g final_loss=%.6f epsilon=%.6f  %s\n", e.sigma,
                                    s.final_smoothed_loss, s.epsilon, e.run_dir.c_str());
                    } else {
                        std::printf("sigma=%-5g final_loss=%.6f epsilon=n/a  %s\n", e.sigma,
                                    s.final_smoothed_loss, e.run_dir.c_str());
                    }
                } else {
                    ++failed;
                    std::printf("sigma=%-5g FAILED: %s\n", e.sigma, e.error.c_str());
                }
            }
            std::printf("sweep complete: %zu/%zu runs ok, summary in %s/sweep_summary.csv\n",
                        entries.size() - failed, entries.size(), out_dir.c_str());
            if (failed == static_cast<int>(entries.size())) {
                return 1;
            }
        } else if (*eps_cmd) {
            std::vector<int> orders;
            for (int a = order_min; a <= order_max; ++a) {
                orders.push_back(a);
            }
            const dpopt::ReplayResult r =
                dpopt::replay_q_log(qlog_path, sigma_override, delta, orders);
            if (r.has_guarantee) {
                std::printf("steps=%ld sigma=%.17g delta=%.17g epsilon=%.17g alpha_star=%d\n",
                            r.steps, r.sigma, r.delta, r.epsilon, r.best_order);
            } else {
                std::printf("steps=%ld sigma=0: no noise was added, no epsilon applies\n",
                            r.steps);
            }
        } else if (*smooth_cmd) {
            const std::vector<double> values = read_series(series_in);
            const std::vector<double> smoothed =
                dpopt::smooth_series(values, median_window, ma_window);
            if (series_out.empty()) {
                for (double v : smoothed) {
                    std::printf("%.17g\n", v);
                }
            } else {
                std::ofstream out(series_out);
                if (!out) {
                    throw std::runtime_error("smooth: cannot open " + series_out);
                }
                char buf[40];
                for (double v : smoothed) {
                    std::snprintf(buf, sizeof buf, "%.17g\n", v);
                    out << buf;
                }
            }
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}
