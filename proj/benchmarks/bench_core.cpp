#include <benchmark/benchmark.h>

#include <numeric>

#include "spnn/beam.hpp"
#include "spnn/device.hpp"
#include "spnn/image_task.hpp"
#include "spnn/netcore.hpp"
#include "spnn/random.hpp"
#include "spnn/spectral.hpp"
#include "spnn/train.hpp"

namespace {

const spnn::CMatrix& mesh() {
    static const spnn::CMatrix m = spnn::synth_coupler_mesh({}).matrix;
    return m;
}

spnn::CMatrix random_inputs(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    spnn::Rng rng(seed);
    spnn::CMatrix x(rows, cols);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = spnn::Complex(rng.normal(), rng.normal());
    return x;
}

void BM_Propagate(benchmark::State& state) {
    const auto net = spnn::make_stack(mesh(), 3, 3);
    const auto x = random_inputs(32, state.range(0), 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(spnn::propagate(net, x));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Propagate)->Arg(1)->Arg(64);

void BM_BatchGradient(benchmark::State& state) {
    spnn::ImagePipelineConfig cfg;
    const auto model = spnn::make_image_model(cfg, mesh());
    std::vector<spnn::Sample> samples(static_cast<std::size_t>(state.range(0)));
    for (std::size_t i = 0; i < samples.size(); ++i) {
        samples[i].inputs = random_inputs(32, 1, i);
        samples[i].label = i % cfg.classes;
    }
    std::vector<std::size_t> idx(samples.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (auto _ : state) {
        benchmark::DoNotOptimize(spnn::batch_gradient(model, samples, idx));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BatchGradient)->Arg(64);

void BM_BeamLossGradient(benchmark::State& state) {
    const auto net = spnn::make_stack(mesh(), 3, 1);
    const auto grid = spnn::make_far_field_grid(spnn::ArrayGeometry::half_wave());
    const auto x = spnn::beam_excitation();
    for (auto _ : state) {
        benchmark::DoNotOptimize(spnn::beam_loss_gradient(net, grid, x, 20.0));
    }
}
BENCHMARK(BM_BeamLossGradient);

void BM_SpectralBins(benchmark::State& state) {
    const auto spec = spnn::SpectralInputSpec::closest_to_dc();
    spnn::Rng rng(3);
    spnn::RMatrix image(28, 28);
    for (Eigen::Index i = 0; i < image.size(); ++i) image.data()[i] = rng.uniform(0.0, 1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(spnn::spectral_bins(image, spec));
    }
}
BENCHMARK(BM_SpectralBins);

}  // namespace
BENCHMARK_MAIN();
