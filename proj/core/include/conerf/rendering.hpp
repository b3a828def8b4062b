// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "conerf/camera.hpp"
#include "conerf/model.hpp"
#include "conerf/random.hpp"

namespace conerf {

/// Length assigned to the last sample's interval.
struct LastInterval {
    enum class Kind { kMedianMultiple, kToFar, kFixed };
    Kind kind = Kind::kMedianMultiple;
    double value = 10.0;

    static LastInterval median_multiple(double k) { return {Kind::kMedianMultiple, k}; }
    static LastInterval to_far() { return {Kind::kToFar, 0.0}; }
    static LastInterval fixed(double length) { return {Kind::kFixed, length}; }
};

/// n depths in [near, far], sorted. For n >= 2 the nodes are evenly spaced
/// from near to far inclusive; stratified mode draws one depth uniformly from
/// each node's cell, bounded by the midpoints to its neighbours (and by
/// near/far at the ends). A single sample sits in the middle of the range.
std::vector<double> sample_ray(const Ray& ray, int samples, bool stratified, Rng* rng);

/// delta_i = t_{i+1} - t_i, last from `last`. Throws on unsorted depths.
std::vector<double> interval_lengths(std::span<const double> depths, double far, LastInterval last);

struct CompositeResult {
    std::vector<double> payload;  // K channels
    std::vector<double> weights;  // one per sample
    double opacity = 0.0;
};

/// Quadrature of the emission-absorption integral for one ray:
/// a_i = 1 - exp(-sigma_i delta_i), T_i = prod_{j<i}(1 - a_j), w_i = T_i a_i.
/// `payload` holds samples x channels values, row-major.
CompositeResult composite(std::span<const double> depths, std::span<const double> sigma,
                          std::span<const double> payload, int channels, double far, LastInterval last);

/// Differentiable batched form: sigma[R,S], deltas[R,S], payload[R*S,K] -> [R,K].
ad::Var composite(ad::Var sigma, const ad::Tensor& deltas, ad::Var payload);

struct RenderSettings {
    int samples_per_ray = 128;
    bool stratified = false;
    std::uint64_t seed = 0;
    LastInterval last_interval{};
    std::array<double, 3> background{1.0, 1.0, 1.0};
    bool force_zero_masks = false;
    std::optional<EncodingAlphas> alphas;  // fully open when empty
    int threads = 0;                       // 0 = hardware concurrency
    int chunk_rays = 512;
};

/// Rays (3D) or image-plane points (2D) plus per-ray codes, ready to be
/// evaluated on a tape.
struct RayQuery {
    std::vector<Ray> rays;  // 3D
    ad::Tensor plane;       // [R,2] in 2D
    ad::Var latents;        // [R,B]
    ad::Var attributes;     // [R,A]
    ad::Var appearance;     // [R,P]
};

struct RayOutputs {
    ad::Var rgb;      // [R,3], composited onto the background in 3D
    ad::Var masks;    // [R,A+1]
    ad::Var opacity;  // [R,1]
};

/// Builds the render graph. Mask channels are composited against
/// stop_gradient(sigma). `rng` drives stratified sampling.
RayOutputs render_rays(ad::Tape& tape, const ConerfModel& model, const RayQuery& query,
                       const RenderSettings& settings, Rng* rng);

/// Frame-level conditioning for inference.
struct FrameCodes {
    std::vector<double> latent;                     // B
    std::vector<double> appearance;                 // P; zeros when empty
    std::optional<std::vector<double>> attributes;  // override of the regressed values
};

/// Learned latent code of a training frame; appearance zeroed.
FrameCodes frame_codes(const ConerfModel& model, int frame, std::optional<std::vector<double>> attributes = {});

/// Attribute values regressed from a latent code.
std::vector<double> regress_attributes(const ConerfModel& model, std::span<const double> latent);

struct PixelRender {
    std::array<double, 3> color{};
    std::vector<double> masks;  // A+1 channels, m_0 first
    double opacity = 0.0;
};

PixelRender render_pixel(const ConerfModel& model, const Ray& ray, const FrameCodes& codes,
                         const RenderSettings& settings);
/// 2D mode: one field query at the image-plane point, no compositing.
PixelRender render_pixel_2d(const ConerfModel& model, std::array<double, 2> plane_point, const FrameCodes& codes,
                            const RenderSettings& settings);

struct RenderedImage {
    int width = 0;
    int height = 0;
    std::vector<double> rgb;                 // H*W*3
    std::vector<std::vector<double>> masks;  // A+1 maps of H*W
    std::vector<double> opacity;             // H*W
};

RenderedImage render_image(const ConerfModel& model, const Camera& camera, const FrameCodes& codes,
                           const RenderSettings& settings);
RenderedImage render_image_2d(const ConerfModel& model, int width, int height, const FrameCodes& codes,
                              const RenderSettings& settings);

}  // namespace conerf
