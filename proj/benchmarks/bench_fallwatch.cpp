#include <benchmark/benchmark.h>

#include <random>

#include "fallwatch/autoencoder.hpp"
#include "fallwatch/evaluation.hpp"
#include "fallwatch/preprocess.hpp"
#include "fallwatch/scoring.hpp"

using namespace fallwatch;

namespace {

std::vector<float> random_window(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> unit(0.0f, 1.0f);
    std::vector<float> v(n);
    for (auto& x : v) x = unit(rng);
    return v;
}

void BM_AutoencoderForward(benchmark::State& state) {
    Autoencoder3d<float> model(ModelConfig{});
    auto ws = model.make_workspace();
    const auto in = random_window(model.window_elements(), 1);
    std::vector<float> out(in.size());
    for (auto _ : state) {
        model.forward(in, out, ws);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_AutoencoderForward)->Unit(benchmark::kMillisecond);

void BM_AutoencoderTrainStep(benchmark::State& state) {
    Autoencoder3d<float> model(ModelConfig{});
    auto ws = model.make_workspace();
    const auto in = random_window(model.window_elements(), 2);
    std::vector<float> grad(model.parameters().size());
    for (auto _ : state) {
        benchmark::DoNotOptimize(model.accumulate_gradient(in, grad, 1.0, ws));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_AutoencoderTrainStep)->Unit(benchmark::kMillisecond);

void BM_AucRoc(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> scores(n);
    std::vector<std::uint8_t> truths(n);
    for (std::size_t i = 0; i < n; ++i) {
        scores[i] = unit(rng);
        truths[i] = unit(rng) < 0.01;
    }
    truths[0] = 1;
    for (auto _ : state) benchmark::DoNotOptimize(auc_roc(scores, truths));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}
BENCHMARK(BM_AucRoc)->Arg(1 << 10)->Arg(1 << 17);

void BM_AucPr(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> scores(n);
    std::vector<std::uint8_t> truths(n);
    for (std::size_t i = 0; i < n; ++i) {
        scores[i] = unit(rng);
        truths[i] = unit(rng) < 0.01;
    }
    truths[0] = 1;
    for (auto _ : state) benchmark::DoNotOptimize(auc_pr(scores, truths));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}
BENCHMARK(BM_AucPr)->Arg(1 << 10)->Arg(1 << 17);

void BM_CrossContext(benchmark::State& state) {
    const auto frames = static_cast<std::size_t>(state.range(0));
    const WindowSpec spec{8, 1};
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> err(0.0, 0.1);
    ErrorMatrix e;
    e.length = spec.length;
    for (std::size_t w = 0; w < window_count(frames, spec); ++w) {
        e.starts.push_back(w);
        for (std::size_t t = 0; t < spec.length; ++t) e.values.push_back(err(rng));
    }
    const std::vector<std::uint8_t> labels(frames, 0);
    for (auto _ : state) benchmark::DoNotOptimize(cross_context(e, labels, spec));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(frames));
}
BENCHMARK(BM_CrossContext)->Arg(256)->Arg(4096);

void BM_InpaintDepth(benchmark::State& state) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<float> depth(0.2f, 1.0f);
    std::bernoulli_distribution hole(static_cast<double>(state.range(0)) / 100.0);
    Frame f(240, 320);
    for (auto& v : f.pixels) v = hole(rng) ? 0.0f : depth(rng);
    for (auto _ : state) benchmark::DoNotOptimize(inpaint_depth(f));
}
BENCHMARK(BM_InpaintDepth)->Arg(5)->Arg(30)->Unit(benchmark::kMillisecond);

void BM_ResizeFrame(benchmark::State& state) {
    Frame f(480, 640);
    const auto px = random_window(f.size(), 7);
    f.pixels = px;
    for (auto _ : state) benchmark::DoNotOptimize(resize_frame(f));
}
BENCHMARK(BM_ResizeFrame);

}  // namespace

BENCHMARK_MAIN();
