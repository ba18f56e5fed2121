#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "dpopt/accountant.hpp"
#include "dpopt/controllers.hpp"
#include "dpopt/data.hpp"
#include "dpopt/dp_engine.hpp"
#include "dpopt/models.hpp"
#include "dpopt/optim.hpp"
#include "dpopt/smoothing.hpp"

namespace {

dpopt::ParameterVector random_vector(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    dpopt::ParameterVector v(n);
    for (double& x : v) {
        x = 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
    }
    return v;
}

void BM_RdpSubsampledGaussian(benchmark::State& state) {
    const int alpha = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(dpopt::rdp_subsampled_gaussian(alpha, 0.0128, 1.0));
    }
}
BENCHMARK(BM_RdpSubsampledGaussian)->Arg(2)->Arg(16)->Arg(64);

void BM_LedgerStep(benchmark::State& state) {
    dpopt::PrivacyLedger ledger(dpopt::PrivacyLedger::default_orders(), 1.0);
    for (auto _ : state) {
        ledger.record_step(0.0128);
    }
}
BENCHMARK(BM_LedgerStep);

void BM_ClipGradient(benchmark::State& state) {
    const auto grad = random_vector(static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(dpopt::clip_gradient(grad, 0.5));
    }
}
BENCHMARK(BM_ClipGradient)->Arg(1024)->Arg(65536);

void BM_AdamStep(benchmark::State& state) {
    const std::size_t dim = static_cast<std::size_t>(state.range(0));
    auto theta = random_vector(dim, 2);
    const auto grad = random_vector(dim, 3);
    dpopt::OptimizerState opt(dim);
    for (auto _ : state) {
        dpopt::adam_step(theta, grad, opt, 3e-4, 0.9, 0.999, 1e-8);
    }
}
BENCHMARK(BM_AdamStep)->Arg(1024)->Arg(65536);

void BM_ClipControllerUpdate(benchmark::State& state) {
    dpopt::ClipController cc(3.0, 1e-3, 10.0, 0.2, 512);
    std::mt19937_64 rng(4);
    dpopt::MicrobatchReport report;
    for (int i = 0; i < 4; ++i) {
        report.pre_norms.push_back(1.0 + static_cast<double>(rng() % 100) / 25.0);
        report.sizes.push_back(8);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(cc.record_and_update(report));
    }
}
BENCHMARK(BM_ClipControllerUpdate);

void BM_SmoothSeries(benchmark::State& state) {
    const auto series = random_vector(static_cast<std::size_t>(state.range(0)), 5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(dpopt::smooth_series(series, 21, 50));
    }
}
BENCHMARK(BM_SmoothSeries)->Arg(512)->Arg(4096);

void BM_CharLmLossGrad(benchmark::State& state) {
    dpopt::ModelSpec spec;
    spec.kind = dpopt::ModelKind::kCharMlpLm;
    spec.vocab_size = dpopt::char_vocab_size();
    spec.window = dpopt::char_window();
    spec.hidden_dim = 16;
    spec.embed_dim = 8;
    const dpopt::Dataset ds = dpopt::gen_synthetic(dpopt::TaskKind::kCharSequence, 256, 0, 6);
    const auto theta = dpopt::init_params(spec, 7);
    const std::vector<int> microbatch{0, 31, 64, 99, 130, 170, 200, 230};
    for (auto _ : state) {
        benchmark::DoNotOptimize(dpopt::loss_and_grad(spec, theta, ds, microbatch));
    }
}
BENCHMARK(BM_CharLmLossGrad);

}  // namespace

BENCHMARK_MAIN();
