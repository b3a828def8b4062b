// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "conerf/encoding.hpp"
#include "conerf/mlp.hpp"
#include "conerf/tape.hpp"

namespace conerf {

enum class FieldMode { k2D, k3D };

std::string to_string(FieldMode mode);
FieldMode parse_field_mode(const std::string& text);

struct NetworkLayout {
    std::vector<int> hidden;
    std::vector<int> skips;
};

struct ModelConfig {
    FieldMode mode = FieldMode::k2D;
    int num_attributes = 3;
    int num_frames = 1;
    int latent_dim = 8;       // per-frame code width
    int appearance_dim = 4;   // per-frame appearance code width
    int hyper_dim = 8;        // width of every lifted code

    NetworkLayout canonicalizer;
    NetworkLayout attribute_map;
    NetworkLayout hypermap;
    NetworkLayout attribute_hypermap;
    NetworkLayout mask;
    NetworkLayout trunk;
    int color_width = 128;
    double canonicalizer_final_scale = 1e-4;

    EncodingSpec warp_position{8, true, {0.0, 80000.0}};
    EncodingSpec field_position{8, true, {0.0, 0.0}};
    EncodingSpec hyper_position{1, true, {0.0, 80000.0}};
    EncodingSpec code{1, false, {1000.0, 10000.0}};
    EncodingSpec view{4, true, {0.0, 0.0}};

    /// Network sizes of the reference architecture.
    static ModelConfig full_size(FieldMode mode, int num_attributes, int num_frames);
    /// Narrower networks for CPU-scale runs; same topology.
    static ModelConfig desk(FieldMode mode, int num_attributes, int num_frames);

    int spatial_dim() const { return mode == FieldMode::k2D ? 2 : 3; }
    /// Stretches every encoding window by `factor`.
    ModelConfig with_schedule_scale(double factor) const;
    void validate() const;
};

std::string model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const std::string& text);

/// Window positions for the encodings at one training step.
struct EncodingAlphas {
    double warp_position = 0.0;
    double hyper_position = 0.0;
    double code = 0.0;

    static EncodingAlphas at_step(const ModelConfig& config, std::int64_t step);
    /// All windows fully open.
    static EncodingAlphas open(const ModelConfig& config);
};

/// Per-point inputs, all with N rows.
struct FieldInputs {
    ad::Var points;      // [N, D] observation-space positions
    ad::Var latents;     // [N, B] frame codes
    ad::Var attributes;  // [N, A] attribute values
    ad::Var views;       // [N, 3] unit view directions; unused in 2D
    ad::Var appearance;  // [N, P]
};

struct FieldOptions {
    EncodingAlphas alphas;
    bool force_zero_masks = false;
};

struct MaskOutputs {
    ad::Var raw;       // [N, A] sigmoid outputs m_a
    ad::Var channels;  // [N, A+1] = m_0 (+) m
};

struct RadianceOutputs {
    ad::Var rgb;    // [N, 3]
    ad::Var sigma;  // [N, 1]; unbound in 2D
};

struct FieldOutputs {
    ad::Var canonical;
    ad::Var lifted_latent;
    ad::Var lifted_attributes;  // [N, A*d]
    MaskOutputs masks;
    RadianceOutputs radiance;
};

/// m_0 = clamp(1 - sum_a m_a, 0, 1), returned first: [N, A+1].
ad::Var partition_of_unity(ad::Var raw_masks);

/// The controllable field: canonicalizer, attribute map, global and
/// per-attribute hypermaps, masking field and radiance head, plus the
/// per-frame latent and appearance codes.
class ConerfModel {
public:
    ConerfModel(ModelConfig config, std::uint64_t seed);

    const ModelConfig& config() const noexcept { return config_; }

    std::vector<ad::Parameter*> parameters();
    std::vector<const ad::Parameter*> parameters() const;
    ad::Parameter* find_parameter(const std::string& name);

    ad::Parameter& latent_codes() noexcept { return latent_codes_; }
    const ad::Parameter& latent_codes() const noexcept { return latent_codes_; }
    ad::Parameter& appearance_codes() noexcept { return appearance_codes_; }
    const ad::Parameter& appearance_codes() const noexcept { return appearance_codes_; }

    ad::Mlp& canonicalizer_net() noexcept { return canonicalizer_; }
    ad::Mlp& attribute_net() noexcept { return attribute_map_; }
    ad::Mlp& hypermap_net() noexcept { return hypermap_; }
    ad::Mlp& attribute_hypermap_net(int a) { return attribute_hypermaps_.at(static_cast<std::size_t>(a)); }
    ad::Mlp& mask_net() noexcept { return mask_; }
    ad::Mlp& trunk_net() noexcept { return trunk_; }
    ad::Mlp& density_head() noexcept { return density_; }
    ad::Mlp& bottleneck_net() noexcept { return bottleneck_; }
    ad::Mlp& color_net() noexcept { return color_; }

    /// x -> R(q) x + t (3D) or R(angle) x + t (2D), with the rigid motion
    /// regressed from (encode(x), beta).
    ad::Var canonicalize(ad::Tape& tape, ad::Var x, ad::Var beta, const EncodingAlphas& alphas) const;
    /// beta[M,B] -> alpha[M,A] in [-1, 1].
    ad::Var attribute_map(ad::Tape& tape, ad::Var beta) const;
    ad::Var lift_global(ad::Tape& tape, ad::Var x, ad::Var beta, const EncodingAlphas& alphas) const;
    ad::Var lift_attribute(ad::Tape& tape, ad::Var x, ad::Var attribute_value, int attribute,
                           const EncodingAlphas& alphas) const;
    MaskOutputs mask_field(ad::Tape& tape, ad::Var canonical, ad::Var lifted_latent, ad::Var lifted_attributes,
                           const EncodingAlphas& alphas) const;
    RadianceOutputs radiance_field(ad::Tape& tape, ad::Var canonical, const MaskOutputs& masks,
                                   ad::Var lifted_latent, ad::Var lifted_attributes, ad::Var views,
                                   ad::Var appearance, const EncodingAlphas& alphas) const;

    /// Full per-point chain.
    FieldOutputs evaluate(ad::Tape& tape, const FieldInputs& inputs, const FieldOptions& options) const;

    /// All-zero masks for N points (m_0 = 1): the global-code-only field.
    MaskOutputs zero_masks(ad::Tape& tape, ad::Index n) const;

private:
    ModelConfig config_;
    ad::Parameter latent_codes_;
    ad::Parameter appearance_codes_;
    ad::Mlp canonicalizer_;
    ad::Mlp attribute_map_;
    ad::Mlp hypermap_;
    std::vector<ad::Mlp> attribute_hypermaps_;
    ad::Mlp mask_;
    ad::Mlp trunk_;
    ad::Mlp density_;
    ad::Mlp bottleneck_;
    ad::Mlp color_;
};

}  // namespace conerf
