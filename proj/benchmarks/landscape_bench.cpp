#include <benchmark/benchmark.h>

#include "landscape/common.hpp"
#include "landscape/mixture.hpp"
#include "landscape/models.hpp"
#include "landscape/nonparametric.hpp"
#include "landscape/simulator.hpp"

namespace {

using namespace landscape;

SimOutput bench_data(std::uint64_t n) {
    SimConfig cfg = benchmark_sim_config(7);
    cfg.n_records = n;
    return generate(cfg);
}

void BM_QuantizedWinLogprob(benchmark::State& state) {
    const GaussianMixture gm{{0.4, 0.6}, {120.0, 260.0}, {18.0, 35.0}};
    std::int64_t w = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(quantized_win_logprob(gm, 50 + (w++ % 300)));
    }
}
BENCHMARK(BM_QuantizedWinLogprob);

void BM_MixtureLogSf(benchmark::State& state) {
    const GaussianMixture gm{{0.4, 0.6}, {120.0, 260.0}, {18.0, 35.0}};
    std::int64_t b = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(mixture_log_sf(gm, static_cast<double>(b++ % 400)));
    }
}
BENCHMARK(BM_MixtureLogSf);

void BM_CrBatchGradient(benchmark::State& state) {
    static const SimOutput sim = bench_data(4096);
    Rng rng(3);
    CrParams params = CrParams::zeros(sim.vocab.dimension);
    for (double& v : params.values) v = rng.normal() * 0.01;
    params.mean_weights()[0] = 180.0;
    params.log_sigma() = 4.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(cr_negloglik(params, sim.dataset, 1e-6));
    }
}
BENCHMARK(BM_CrBatchGradient);

void BM_McnetBatchGradient(benchmark::State& state) {
    static const SimOutput sim = bench_data(1024);
    Rng rng(4);
    McnetParams params = McnetParams::zeros(sim.vocab.dimension, 64, 2);
    for (double& v : params.values) v = rng.normal() * 0.01;
    for (auto _ : state) {
        benchmark::DoNotOptimize(mcnet_negloglik(params, sim.dataset, 1e-6));
    }
}
BENCHMARK(BM_McnetBatchGradient);

void BM_KmFit(benchmark::State& state) {
    static const SimOutput sim = bench_data(50000);
    for (auto _ : state) {
        benchmark::DoNotOptimize(km_fit(sim.dataset));
    }
}
BENCHMARK(BM_KmFit);

void BM_SimGenerate(benchmark::State& state) {
    SimConfig cfg = benchmark_sim_config(11);
    cfg.n_records = static_cast<std::uint64_t>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(generate(cfg));
    }
}
BENCHMARK(BM_SimGenerate)->Arg(1000)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
