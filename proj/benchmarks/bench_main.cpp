#include <benchmark/benchmark.h>

#include <random>

#include "expand/networks.hpp"
#include "expand/pixel_taxi.hpp"
#include "expand/replay.hpp"
#include "expand/saliency_augment.hpp"

using namespace expand;

namespace {

StackedState rendered_state() {
    const taxi::TaxiConfig c;
    auto [s, raw] = taxi::reset(c, 7);
    return StackedState::from_first_frame(preprocess(raw));
}

void BM_GaussianBlur(benchmark::State& st) {
    const auto s = rendered_state();
    const BlurFilter f{static_cast<int>(st.range(0)), 5.0};
    for (auto _ : st) benchmark::DoNotOptimize(gaussian_blur(s.frame(0), f));
}
BENCHMARK(BM_GaussianBlur)->Arg(5)->Arg(11)->Arg(21);

void BM_PerturbState(benchmark::State& st) {
    const auto s = rendered_state();
    const std::vector<BoundingBox> boxes{{24, 36, 12, 12}, {60, 12, 12, 12}};
    const auto mask = build_mask(boxes);
    const BlurFilter f{11, 5.0};
    for (auto _ : st) benchmark::DoNotOptimize(perturb_state(s, mask, f));
}
BENCHMARK(BM_PerturbState);

void BM_EnvStep(benchmark::State& st) {
    const taxi::TaxiConfig c;
    auto [s, raw] = taxi::reset(c, 3);
    int a = 0;
    for (auto _ : st) {
        auto [next, r] = taxi::step(c, s, static_cast<taxi::Action>(a++ % 4));
        s = r.terminal ? taxi::reset(c, 3).first : next;
        benchmark::DoNotOptimize(r);
    }
}
BENCHMARK(BM_EnvStep);

void BM_QForward(benchmark::State& st) {
    at::set_num_threads(1);
    torch::NoGradGuard g;
    QNetwork net(QNetworkSpec{});
    const auto x = torch::rand({st.range(0), kStackDepth, kFrameSide, kFrameSide});
    for (auto _ : st) benchmark::DoNotOptimize(net.forward(x));
}
BENCHMARK(BM_QForward)->Arg(1)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_ReplaySample(benchmark::State& st) {
    PrioritizedReplay replay(100000, 0.6);
    std::mt19937_64 rng(1);
    for (int i = 0; i < 100000; ++i) replay.add(Transition{});
    for (auto _ : st) benchmark::DoNotOptimize(replay.sample(32, 0.4, rng));
}
BENCHMARK(BM_ReplaySample);

}  // namespace

BENCHMARK_MAIN();
