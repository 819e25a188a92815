#include <benchmark/benchmark.h>

#include "coc/features.hpp"
#include "coc/forest.hpp"
#include "coc/preprocess.hpp"
#include "coc/rng.hpp"
#include "coc/segmentation.hpp"
#include "coc/synthdata.hpp"

using namespace coc;

namespace {

synth::Phantom phantom(Grade g, std::uint64_t seed) {
    synth::PhantomSpec spec;
    spec.grade = g;
    spec.seed = seed;
    return synth::generate(spec);
}

rf::FeatureMatrix random_features(int n, std::uint64_t seed) {
    Rng rng(seed);
    rf::FeatureMatrix x(n);
    for (auto& row : x)
        for (double& v : row) v = rng.next_double();
    return x;
}

std::vector<Grade> random_labels(int n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Grade> y(n);
    for (Grade& g : y) g = static_cast<Grade>(rng.next_below(4));
    return y;
}

} // namespace

static void BM_AnisotropicDiffuse(benchmark::State& state) {
    const synth::Phantom ph = phantom(Grade::B, 1);
    pre::DiffusionParams p;
    p.iterations = static_cast<int>(state.range(0));
    for (auto _ : state) {
        auto out = pre::anisotropic_diffuse(ph.image, p);
        benchmark::DoNotOptimize(out.data.data());
    }
}
BENCHMARK(BM_AnisotropicDiffuse)->Arg(5)->Arg(20);

static void BM_SnakeSegmentation(benchmark::State& state) {
    const synth::Phantom ph = phantom(Grade::B, 2);
    const auto diffused = pre::anisotropic_diffuse(ph.image, pre::DiffusionParams{});
    for (auto _ : state) {
        auto res = seg::snake_outer_boundary(diffused, seg::SnakeParams{});
        benchmark::DoNotOptimize(res.contour.points.data());
    }
}
BENCHMARK(BM_SnakeSegmentation);

static void BM_SegmentFull(benchmark::State& state) {
    const synth::Phantom ph = phantom(Grade::C, 3);
    for (auto _ : state) {
        auto s = seg::segment(ph.image, seg::SegmentationConfig{});
        benchmark::DoNotOptimize(s.outer_mask.bits.data());
    }
}
BENCHMARK(BM_SegmentFull);

static void BM_FeatureExtract(benchmark::State& state) {
    const synth::Phantom ph = phantom(Grade::A, 4);
    const auto s = seg::segment(ph.image, seg::SegmentationConfig{});
    for (auto _ : state) {
        auto f = feat::extract(ph.image, s);
        benchmark::DoNotOptimize(f.values.data());
    }
}
BENCHMARK(BM_FeatureExtract);

static void BM_ForestTrain(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto x = random_features(n, 5);
    const auto y = random_labels(n, 6);
    rf::ForestParams p;
    p.n_trees = 100;
    for (auto _ : state) {
        auto m = rf::train(x, y, p);
        benchmark::DoNotOptimize(m.oob_error);
    }
}
BENCHMARK(BM_ForestTrain)->Arg(60)->Arg(200);

static void BM_ForestPredict(benchmark::State& state) {
    const auto x = random_features(200, 7);
    const auto y = random_labels(200, 8);
    rf::ForestParams p;
    p.n_trees = 100;
    const auto model = rf::train(x, y, p);
    std::size_t i = 0;
    for (auto _ : state) {
        auto post = rf::posterior(model, x[i++ % x.size()]);
        benchmark::DoNotOptimize(post.p.data());
    }
}
BENCHMARK(BM_ForestPredict);

BENCHMARK_MAIN();
