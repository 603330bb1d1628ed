#include <benchmark/benchmark.h>

#include <random>

#include "remove_eval/analysis.hpp"
#include "remove_eval/encoders.hpp"
#include "remove_eval/metric.hpp"
#include "remove_eval/preprocess.hpp"

using namespace remove_eval;

namespace {

RgbImage noise_image(int w, int h, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    RgbImage im(w, h);
    for (auto& v : im.data) v = u(rng);
    return im;
}

EraseMask box_mask(int w, int h, int x0, int y0, int bw, int bh) {
    EraseMask m(w, h);
    for (int y = y0; y < y0 + bh; ++y)
        for (int x = x0; x < x0 + bw; ++x) m.at(x, y) = 1;
    return m;
}

void BM_RemoveScoreMock(benchmark::State& state) {
    MetricConfig cfg;
    cfg.input_side = static_cast<int>(state.range(0));
    cfg.use_crop = state.range(1) != 0;
    const MockPoolingEncoder enc(cfg.input_side, cfg.patch_size);
    EditedImage sample;
    sample.id = "bench";
    sample.pixels = noise_image(512, 384, 1);
    const auto mask = box_mask(512, 384, 200, 150, 60, 40);
    for (auto _ : state) benchmark::DoNotOptimize(remove_score(sample, mask, enc, cfg).score);
}
BENCHMARK(BM_RemoveScoreMock)->Args({256, 1})->Args({1024, 1})->Args({1024, 0})->Unit(benchmark::kMillisecond);

void BM_ComputeCrop(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const auto mask = box_mask(side, side, side / 3, side / 4, side / 8, side / 5);
    const MetricConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(compute_crop(mask, cfg).box.side);
}
BENCHMARK(BM_ComputeCrop)->Arg(256)->Arg(1024);

void BM_ResizeBilinear(benchmark::State& state) {
    const auto im = noise_image(640, 480, 2);
    const int side = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(resize_bilinear(im, side, side).data.data());
}
BENCHMARK(BM_ResizeBilinear)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_BinByReference(benchmark::State& state) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<EvaluationRecord> recs(static_cast<std::size_t>(state.range(0)));
    for (std::size_t i = 0; i < recs.size(); ++i) {
        recs[i].id = std::to_string(i);
        recs[i].remove_score = u(rng);
        recs[i].baselines["LPIPS"] = u(rng);
    }
    const auto ref = metric_ref("LPIPS");
    for (auto _ : state) benchmark::DoNotOptimize(bin_by_reference(recs, ref, "ReMOVE", 20).means.data());
}
BENCHMARK(BM_BinByReference)->Arg(1000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
