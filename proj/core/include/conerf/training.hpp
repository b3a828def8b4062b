// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "conerf/adam.hpp"
#include "conerf/dataset.hpp"
#include "conerf/losses.hpp"
#include "conerf/model.hpp"
#include "conerf/rendering.hpp"

namespace conerf {

struct TrainConfig {
    int batch_rays = 512;
    std::int64_t total_steps = 10000;
    double annotated_quota = 0.10;
    // Share of the quota rays drawn from inside the union of a frame's
    // annotated masks; 0 disables the focus.
    double mask_focus = 0.5;
    int samples_per_ray = 128;
    bool stratified = true;
    LastInterval last_interval{};
    std::array<double, 3> background{1.0, 1.0, 1.0};
    std::uint64_t seed = 0;
    // Encoding windows are stretched by this factor; 0 means total_steps / 250000.
    double schedule_scale = 0.0;
    LossWeights weights{};
    FocalSpec focal{};
    double lr_initial = 1e-4;
    double lr_final = 1e-5;

    void validate() const;
    double effective_schedule_scale() const;
    ad::LearningRateSchedule learning_rate() const { return {lr_initial, lr_final, total_steps}; }
};

std::string train_config_to_json(const TrainConfig& config);
/// Defaults tuned for the desk-scale scenes: short 2D runs at a higher
/// learning rate, library defaults for 3D.
TrainConfig desk_train_config(FieldMode mode);

/// Missing fields keep the values of `defaults`.
TrainConfig train_config_from_json(const std::string& text, const TrainConfig& defaults = {});

/// Rays for one optimisation step. 2D batches fill `plane`, 3D batches `rays`.
struct RayBatch {
    std::vector<int> frames;
    std::vector<PixelCoord> pixels;
    std::vector<bool> from_quota;  // drawn by the annotated-frame quota
    std::vector<Ray> rays;
    ad::Tensor plane;        // [R,2]
    ad::Tensor colors;       // [R,3]
    ad::Tensor mask_target;  // [R,A]
    ad::Tensor mask_weight;  // [R,A]; 1/count per annotated (frame, attribute), else 0

    int size() const { return static_cast<int>(frames.size()); }
};

RayBatch sample_ray_batch(const Dataset& dataset, const TrainConfig& config, Rng& rng);

struct LossReport {
    std::int64_t step = 0;  // step the update was taken at
    double total = 0.0;
    double recon = 0.0;
    double enc = 0.0;
    double attr = 0.0;
    double mask = 0.0;
    double learning_rate = 0.0;
};

struct Checkpoint {
    std::int64_t step = 0;
    ModelConfig model;
    TrainConfig train;
    std::map<std::string, ad::Tensor> parameters;
    ad::AdamState optimizer;
    // Dataset metadata needed to serve renders.
    std::vector<std::string> attributes;
    int image_width = 0;
    int image_height = 0;
};

/// Model config sized for `dataset`, with windows scaled for `train`.
ModelConfig model_config_for(const Dataset& dataset, const TrainConfig& train, bool full_size = false);

/// Rebuilds a frozen model from a checkpoint.
ConerfModel model_from_checkpoint(const Checkpoint& checkpoint);

/// Auto-decoding optimisation of the network weights jointly with the
/// per-frame latent and appearance codes.
class Trainer {
public:
    Trainer(const Dataset& dataset, ModelConfig model_config, TrainConfig config);
    /// Resumes from `checkpoint`; the dataset must match its frame and attribute counts.
    Trainer(const Dataset& dataset, const Checkpoint& checkpoint);

    /// Differentiable loss terms for `batch` at the current step.
    LossTerms build_losses(ad::Tape& tape, const RayBatch& batch) const;
    /// Samples the step's batch and applies one Adam update.
    LossReport step();

    std::int64_t current_step() const { return step_; }
    const ConerfModel& model() const { return model_; }
    ConerfModel& model() { return model_; }
    const TrainConfig& config() const { return config_; }
    const ad::Adam& optimizer() const { return adam_; }
    Checkpoint checkpoint() const;

private:
    const Dataset& dataset_;
    TrainConfig config_;
    ConerfModel model_;
    ad::Adam adam_;
    std::int64_t step_ = 0;
    ad::Tensor attribute_target_;     // [C,A]
    ad::Tensor attribute_indicator_;  // [C,A]
};

struct FitOptions {
    std::filesystem::path out_dir;  // checkpoints and metrics.csv; empty = nothing written
    std::int64_t log_every = 50;
    std::int64_t validation_every = 500;
    std::int64_t checkpoint_every = 0;  // 0 = final checkpoint only
    int validation_frame = 0;
    int validation_crop = 32;  // side of the centred validation crop, pixels
    std::function<void(const LossReport&, std::optional<double> psnr)> on_log;
};

/// PSNR of a centred crop of a training frame rendered with its learned codes.
double validation_psnr(const ConerfModel& model, const Dataset& dataset, const RenderSettings& settings, int frame,
                       int crop);

/// Deterministic render settings matching a checkpoint's training setup and
/// encoding windows.
RenderSettings inference_settings(const Checkpoint& checkpoint);

/// Runs `trainer` to its configured total. Returns the per-step loss trace.
std::vector<LossReport> fit(Trainer& trainer, const Dataset& dataset, const FitOptions& options);

}  // namespace conerf
