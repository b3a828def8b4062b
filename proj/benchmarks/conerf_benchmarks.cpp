// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "conerf/mlp.hpp"
#include "conerf/ops.hpp"
#include "conerf/rendering.hpp"
#include "conerf/synthetic.hpp"
#include "conerf/training.hpp"

namespace conerf {
namespace {

void BM_MlpForward(benchmark::State& state) {
    const ad::Index rows = state.range(0);
    Rng rng = make_rng(1);
    const ad::Mlp mlp("bench", ad::make_mlp_spec(64, {64, 64, 64, 64}, 32, {2}), rng);
    ad::Tensor input = ad::Tensor::matrix(rows, 64);
    for (double& v : input.values()) v = uniform(rng, -1.0, 1.0);
    for (auto _ : state) {
        ad::Tape tape(ad::Tape::Mode::kInference);
        benchmark::DoNotOptimize(mlp.apply(tape, tape.constant(input)).value().data());
    }
    state.SetItemsProcessed(state.iterations() * rows);
}
BENCHMARK(BM_MlpForward)->Arg(256)->Arg(2048);

void BM_MlpForwardBackward(benchmark::State& state) {
    const ad::Index rows = state.range(0);
    Rng rng = make_rng(2);
    const ad::Mlp mlp("bench", ad::make_mlp_spec(64, {64, 64, 64, 64}, 32, {2}), rng);
    ad::Tensor input = ad::Tensor::matrix(rows, 64);
    for (double& v : input.values()) v = uniform(rng, -1.0, 1.0);
    for (auto _ : state) {
        ad::Tape tape;
        const ad::Var loss = ad::mean(ad::square(mlp.apply(tape, tape.constant(input))));
        benchmark::DoNotOptimize(tape.backward(loss).size());
    }
    state.SetItemsProcessed(state.iterations() * rows);
}
BENCHMARK(BM_MlpForwardBackward)->Arg(256)->Arg(2048);

const SyntheticDataset& desk_scene() {
    static const SyntheticDataset data = [] {
        SyntheticSceneSpec spec = SyntheticSceneSpec::defaults(FieldMode::k2D);
        spec.train_frames = 40;
        spec.test_frames = 4;
        spec.annotation_fraction = 0.1;
        return generate_synthetic(spec);
    }();
    return data;
}

void BM_TrainStep2d(benchmark::State& state) {
    const Dataset& train = desk_scene().train;
    TrainConfig config = desk_train_config(FieldMode::k2D);
    config.batch_rays = static_cast<int>(state.range(0));
    config.total_steps = 1000000;
    Trainer trainer(train, model_config_for(train, config), config);
    for (auto _ : state) benchmark::DoNotOptimize(trainer.step().total);
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TrainStep2d)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_RenderImage2d(benchmark::State& state) {
    const Dataset& train = desk_scene().train;
    const TrainConfig config = desk_train_config(FieldMode::k2D);
    const ConerfModel model(model_config_for(train, config), 3);
    RenderSettings settings;
    settings.threads = 1;
    const FrameCodes codes = frame_codes(model, 0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(render_image_2d(model, 64, 64, codes, settings).rgb.data());
    }
    state.SetItemsProcessed(state.iterations() * 64 * 64);
}
BENCHMARK(BM_RenderImage2d)->Unit(benchmark::kMillisecond);

void BM_RenderImage3d(benchmark::State& state) {
    const ConerfModel model(ModelConfig::desk(FieldMode::k3D, 3, 4), 4);
    const Camera camera = Camera::orbit(30.0, 20.0, 4.0, 16, 16, 40.0, 2.0, 6.0);
    RenderSettings settings;
    settings.samples_per_ray = static_cast<int>(state.range(0));
    settings.threads = 1;
    const FrameCodes codes = frame_codes(model, 0);
    for (auto _ : state) benchmark::DoNotOptimize(render_image(model, camera, codes, settings).rgb.data());
    state.SetItemsProcessed(state.iterations() * 16 * 16);
}
BENCHMARK(BM_RenderImage3d)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace conerf

BENCHMARK_MAIN();
