// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "conerf/dataset.hpp"
#include "conerf/image_io.hpp"
#include "conerf/model.hpp"
#include "conerf/rendering.hpp"

namespace conerf {

inline constexpr double kPsnrCap = 100.0;

double mse(const Image& a, const Image& b);
/// 10 log10(1 / MSE), capped at kPsnrCap when MSE < 1e-10.
double psnr(const Image& a, const Image& b);

inline constexpr std::array<double, 5> kMsSsimWeights{0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

/// Largest scale count s <= 5 whose coarsest level still fits the 11-tap window.
int max_ms_ssim_scales(int width, int height);

/// Multi-scale SSIM (Gaussian 11x11 window, sigma 1.5, K1 = 0.01, K2 = 0.03,
/// data range 1), averaged over channels. Without `scales` the largest
/// fitting count is used and the scale weights renormalized; asking for more
/// scales than fit throws.
double ms_ssim(const Image& a, const Image& b, std::optional<int> scales = std::nullopt);

/// Intersection over union after thresholding both masks; 1 when both are empty.
double mask_iou(const Image& predicted, const Image& truth, double threshold = 0.5);

/// Least-squares affine map from attribute values to latent codes, fitted on
/// a model trained without control losses.
struct AttributeRegressor {
    Eigen::MatrixXd weights;  // (A+1) x B, last row is the offset

    std::vector<double> latent(std::span<const double> attributes) const;
};

/// Rows come from annotated training frames. Attributes a frame does not
/// annotate are filled with the mean annotated value of that attribute.
AttributeRegressor fit_attribute_regressor(const ConerfModel& model, const Dataset& train);

struct ProtocolResult {
    std::string protocol;
    int frames = 0;
    double psnr = 0.0;
    double ms_ssim = 0.0;
    double mask_iou = 0.0;  // NaN without ground-truth masks
};

struct EvaluationOptions {
    RenderSettings settings{};
    int max_frames = 0;  // 0 = every frame
    double mask_threshold = 0.5;
};

/// Test index i maps to training frame round(i (C_train - 1) / (C_test - 1)).
int nearest_training_frame(int test_index, int test_count, int train_count);

/// Held-out frames rendered with their ground-truth attribute values and the
/// codes of the nearest training frame.
ProtocolResult evaluate_attributes(const ConerfModel& model, const Dataset& train, const Dataset& test,
                                   const EvaluationOptions& options);
/// Training frames rendered from their learned codes and regressed attributes.
ProtocolResult evaluate_reconstruction(const ConerfModel& model, const Dataset& train,
                                       const EvaluationOptions& options);
/// Every odd training frame rendered from the average of its neighbours' codes.
ProtocolResult evaluate_interpolation(const ConerfModel& model, const Dataset& train,
                                      const EvaluationOptions& options);
/// Held-out frames rendered from latent codes predicted by `regressor`.
ProtocolResult evaluate_regressor(const ConerfModel& model, const AttributeRegressor& regressor,
                                  const Dataset& test, const EvaluationOptions& options);

std::string metrics_csv(const std::vector<ProtocolResult>& rows);
void write_metrics_csv(const std::filesystem::path& path, const std::vector<ProtocolResult>& rows);

/// Rendered colour as an Image; mask channel `channel` (0 = background) as a gray Image.
Image to_image(const RenderedImage& rendered);
Image mask_image(const RenderedImage& rendered, int channel);

/// Renders `codes` for the frame geometry of `frame` (its camera in 3D).
RenderedImage render_frame(const ConerfModel& model, const Dataset& dataset, int frame, const FrameCodes& codes,
                           const RenderSettings& settings);

}  // namespace conerf
