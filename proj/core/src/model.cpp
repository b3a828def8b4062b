// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#include "conerf/model.hpp"

#include <cmath>
#include <json.hpp>

#include "conerf/error.hpp"
#include "conerf/ops.hpp"

namespace conerf {
namespace {

using ad::Var;
using nlohmann::json;

ad::MlpSpec spec_for(int input, const NetworkLayout& layout, int output, ad::Activation act = ad::Activation::kNone) {
    return ad::make_mlp_spec(input, layout.hidden, output, layout.skips, act);
}

int mask_input_width(const ModelConfig& c) {
    return c.field_position.output_width(c.spatial_dim()) + c.code.output_width(c.hyper_dim) +
           c.num_attributes * c.code.output_width(c.hyper_dim);
}

int trunk_feature_width(const ModelConfig& c) { return c.trunk.hidden.back(); }

NetworkLayout trunk_body(const NetworkLayout& trunk) {
    // The last hidden width is the feature width; the Mlp's output layer produces it.
    NetworkLayout body{std::vector<int>(trunk.hidden.begin(), trunk.hidden.end() - 1), trunk.skips};
    return body;
}

json layout_json(const NetworkLayout& l) { return json{{"hidden", l.hidden}, {"skips", l.skips}}; }
NetworkLayout layout_from(const json& j) {
    return NetworkLayout{j.at("hidden").get<std::vector<int>>(), j.at("skips").get<std::vector<int>>()};
}
json encoding_json(const EncodingSpec& e) {
    return json{{"frequencies", e.frequencies},
                {"identity", e.include_identity},
                {"window_start", e.window.start},
                {"window_duration", e.window.duration}};
}
EncodingSpec encoding_from(const json& j) {
    EncodingSpec e;
    e.frequencies = j.at("frequencies").get<int>();
    e.include_identity = j.at("identity").get<bool>();
    e.window.start = j.at("window_start").get<double>();
    e.window.duration = j.at("window_duration").get<double>();
    return e;
}

}  // namespace

std::string to_string(FieldMode mode) { return mode == FieldMode::k2D ? "2d" : "3d"; }

FieldMode parse_field_mode(const std::string& text) {
    if (text == "2d" || text == "2D") return FieldMode::k2D;
    if (text == "3d" || text == "3D") return FieldMode::k3D;
    throw DataError("unknown field mode '" + text + "' (expected 2d or 3d)");
}

ModelConfig ModelConfig::full_size(FieldMode mode, int num_attributes, int num_frames) {
    ModelConfig c;
    c.mode = mode;
    c.num_attributes = num_attributes;
    c.num_frames = num_frames;
    c.canonicalizer = {{128, 128, 128, 128, 128, 128}, {4}};
    c.attribute_map = {{32, 32, 32, 32, 32, 32}, {4}};
    c.hypermap = {{64, 64, 64, 64, 64, 64}, {4}};
    c.attribute_hypermap = c.hypermap;
    c.mask = {{128, 128, 128, 128, 64}, {4}};
    c.trunk = {{256, 256, 256, 256, 256, 256, 256, 256}, {4}};
    c.color_width = 128;
    return c;
}

ModelConfig ModelConfig::desk(FieldMode mode, int num_attributes, int num_frames) {
    ModelConfig c = full_size(mode, num_attributes, num_frames);
    c.canonicalizer = {{32, 32, 32, 32}, {2}};
    c.hypermap = {{32, 32, 32, 32}, {2}};
    c.attribute_hypermap = c.hypermap;
    c.mask = {{64, 64, 64, 64, 32}, {4}};
    c.trunk = {{64, 64, 64, 64}, {2}};
    c.color_width = 32;
    c.appearance_dim = 0;
    return c;
}

ModelConfig ModelConfig::with_schedule_scale(double factor) const {
    ModelConfig c = *this;
    c.warp_position = warp_position.scaled(factor);
    c.field_position = field_position.scaled(factor);
    c.hyper_position = hyper_position.scaled(factor);
    c.code = code.scaled(factor);
    c.view = view.scaled(factor);
    return c;
}

void ModelConfig::validate() const {
    require(num_attributes >= 1, "model needs at least one attribute");
    require(num_frames >= 1, "model needs at least one frame");
    require(latent_dim >= 1 && hyper_dim >= 1 && appearance_dim >= 0, "code widths must be positive");
    require(!trunk.hidden.empty(), "radiance trunk needs at least one hidden layer");
    for (const EncodingSpec* e : {&warp_position, &field_position, &hyper_position, &code, &view}) e->validate();
}

std::string model_config_to_json(const ModelConfig& c) {
    json j{{"mode", to_string(c.mode)},
           {"num_attributes", c.num_attributes},
           {"num_frames", c.num_frames},
           {"latent_dim", c.latent_dim},
           {"appearance_dim", c.appearance_dim},
           {"hyper_dim", c.hyper_dim},
           {"canonicalizer", layout_json(c.canonicalizer)},
           {"attribute_map", layout_json(c.attribute_map)},
           {"hypermap", layout_json(c.hypermap)},
           {"attribute_hypermap", layout_json(c.attribute_hypermap)},
           {"mask", layout_json(c.mask)},
           {"trunk", layout_json(c.trunk)},
           {"color_width", c.color_width},
           {"canonicalizer_final_scale", c.canonicalizer_final_scale},
           {"warp_position", encoding_json(c.warp_position)},
           {"field_position", encoding_json(c.field_position)},
           {"hyper_position", encoding_json(c.hyper_position)},
           {"code", encoding_json(c.code)},
           {"view", encoding_json(c.view)}};
    return j.dump();
}

ModelConfig model_config_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        ModelConfig c;
        c.mode = parse_field_mode(j.at("mode").get<std::string>());
        c.num_attributes = j.at("num_attributes").get<int>();
        c.num_frames = j.at("num_frames").get<int>();
        c.latent_dim = j.at("latent_dim").get<int>();
        c.appearance_dim = j.at("appearance_dim").get<int>();
        c.hyper_dim = j.at("hyper_dim").get<int>();
        c.canonicalizer = layout_from(j.at("canonicalizer"));
        c.attribute_map = layout_from(j.at("attribute_map"));
        c.hypermap = layout_from(j.at("hypermap"));
        c.attribute_hypermap = layout_from(j.at("attribute_hypermap"));
        c.mask = layout_from(j.at("mask"));
        c.trunk = layout_from(j.at("trunk"));
        c.color_width = j.at("color_width").get<int>();
        c.canonicalizer_final_scale = j.at("canonicalizer_final_scale").get<double>();
        c.warp_position = encoding_from(j.at("warp_position"));
        c.field_position = encoding_from(j.at("field_position"));
        c.hyper_position = encoding_from(j.at("hyper_position"));
        c.code = encoding_from(j.at("code"));
        c.view = encoding_from(j.at("view"));
        c.validate();
        return c;
    } catch (const json::exception& e) {
        throw DataError(std::string("invalid model config: ") + e.what());
    }
}

EncodingAlphas EncodingAlphas::at_step(const ModelConfig& config, std::int64_t step) {
    return EncodingAlphas{schedule_alpha(step, config.warp_position), schedule_alpha(step, config.hyper_position),
                          schedule_alpha(step, config.code)};
}

EncodingAlphas EncodingAlphas::open(const ModelConfig& config) {
    return EncodingAlphas{static_cast<double>(config.warp_position.frequencies),
                          static_cast<double>(config.hyper_position.frequencies),
                          static_cast<double>(config.code.frequencies)};
}

Var partition_of_unity(Var raw_masks) {
    Var background = ad::clamp(ad::add_scalar(ad::neg(ad::row_sum(raw_masks)), 1.0), 0.0, 1.0);
    return ad::concat_cols({background, raw_masks});
}

namespace {

struct Builder {
    const ModelConfig& c;
    Rng& rng;

    ad::Mlp canonicalizer() {
        const int out = c.mode == FieldMode::k3D ? 7 : 3;
        return ad::Mlp("canonicalizer",
                       spec_for(c.warp_position.output_width(c.spatial_dim()) + c.latent_dim, c.canonicalizer, out),
                       rng, ad::OutputInit::uniform(c.canonicalizer_final_scale));
    }
    ad::Mlp attribute_map() {
        return ad::Mlp("attribute_map", spec_for(c.latent_dim, c.attribute_map, c.num_attributes, ad::Activation::kTanh),
                       rng);
    }
    ad::Mlp hypermap() {
        return ad::Mlp("hypermap",
                       spec_for(c.hyper_position.output_width(c.spatial_dim()) + c.latent_dim, c.hypermap, c.hyper_dim),
                       rng);
    }
    std::vector<ad::Mlp> attribute_hypermaps() {
        std::vector<ad::Mlp> nets;
        for (int a = 0; a < c.num_attributes; ++a) {
            nets.emplace_back("attribute_hypermap" + std::to_string(a),
                              spec_for(c.hyper_position.output_width(c.spatial_dim()) + 1, c.attribute_hypermap,
                                       c.hyper_dim),
                              rng);
        }
        return nets;
    }
    ad::Mlp mask() {
        return ad::Mlp("mask", spec_for(mask_input_width(c), c.mask, c.num_attributes, ad::Activation::kSigmoid), rng);
    }
    ad::Mlp trunk() {
        return ad::Mlp("trunk", spec_for(mask_input_width(c), trunk_body(c.trunk), trunk_feature_width(c)), rng,
                       ad::OutputInit::he());
    }
    ad::Mlp density() { return ad::Mlp("density", ad::make_mlp_spec(trunk_feature_width(c), {}, 1), rng); }
    ad::Mlp bottleneck() {
        return ad::Mlp("bottleneck", ad::make_mlp_spec(trunk_feature_width(c), {}, trunk_feature_width(c)), rng);
    }
    ad::Mlp color() {
        const int view_width = c.mode == FieldMode::k3D ? c.view.output_width(3) : 0;
        return ad::Mlp("color",
                       ad::make_mlp_spec(trunk_feature_width(c) + view_width + c.appearance_dim, {c.color_width}, 3, {},
                                         ad::Activation::kSigmoid),
                       rng);
    }
};

ModelConfig validated(ModelConfig c) {
    c.validate();
    return c;
}

}  // namespace

ConerfModel::ConerfModel(ModelConfig config, std::uint64_t seed)
    : config_(validated(std::move(config))),
      latent_codes_{"latent_codes", ad::Tensor::matrix(config_.num_frames, config_.latent_dim)},
      appearance_codes_{"appearance_codes", ad::Tensor::matrix(config_.num_frames, config_.appearance_dim)},
      canonicalizer_([&] {
          Rng rng = make_rng(seed, 1);
          return Builder{config_, rng}.canonicalizer();
      }()),
      attribute_map_([&] {
          Rng rng = make_rng(seed, 2);
          return Builder{config_, rng}.attribute_map();
      }()),
      hypermap_([&] {
          Rng rng = make_rng(seed, 3);
          return Builder{config_, rng}.hypermap();
      }()),
      attribute_hypermaps_([&] {
          Rng rng = make_rng(seed, 4);
          return Builder{config_, rng}.attribute_hypermaps();
      }()),
      mask_([&] {
          Rng rng = make_rng(seed, 5);
          return Builder{config_, rng}.mask();
      }()),
      trunk_([&] {
          Rng rng = make_rng(seed, 6);
          return Builder{config_, rng}.trunk();
      }()),
      density_([&] {
          Rng rng = make_rng(seed, 7);
          return Builder{config_, rng}.density();
      }()),
      bottleneck_([&] {
          Rng rng = make_rng(seed, 8);
          return Builder{config_, rng}.bottleneck();
      }()),
      color_([&] {
          Rng rng = make_rng(seed, 9);
          return Builder{config_, rng}.color();
      }()) {}

std::vector<ad::Parameter*> ConerfModel::parameters() {
    std::vector<ad::Parameter*> out{&latent_codes_, &appearance_codes_};
    canonicalizer_.collect(out);
    attribute_map_.collect(out);
    hypermap_.collect(out);
    for (ad::Mlp& net : attribute_hypermaps_) net.collect(out);
    mask_.collect(out);
    trunk_.collect(out);
    if (config_.mode == FieldMode::k3D) density_.collect(out);
    bottleneck_.collect(out);
    color_.collect(out);
    return out;
}

std::vector<const ad::Parameter*> ConerfModel::parameters() const {
    std::vector<const ad::Parameter*> out{&latent_codes_, &appearance_codes_};
    canonicalizer_.collect(out);
    attribute_map_.collect(out);
    hypermap_.collect(out);
    for (const ad::Mlp& net : attribute_hypermaps_) net.collect(out);
    mask_.collect(out);
    trunk_.collect(out);
    if (config_.mode == FieldMode::k3D) density_.collect(out);
    bottleneck_.collect(out);
    color_.collect(out);
    return out;
}

ad::Parameter* ConerfModel::find_parameter(const std::string& name) {
    for (ad::Parameter* p : parameters())
        if (p->name == name) return p;
    return nullptr;
}

Var ConerfModel::canonicalize(ad::Tape& tape, Var x, Var beta, const EncodingAlphas& alphas) const {
    const int dim = config_.spatial_dim();
    require(x.cols() == dim, "canonicalize: points must have " + std::to_string(dim) + " coordinates");
    require(beta.cols() == config_.latent_dim && beta.rows() == x.rows(), "canonicalize: latent code shape mismatch");
    Var encoded = positional_encode(x, config_.warp_position, alphas.warp_position);
    Var motion = canonicalizer_.apply(tape, ad::concat_cols({encoded, beta}));
    if (config_.mode == FieldMode::k3D) {
        return ad::quaternion_rigid_transform(ad::slice_cols(motion, 0, 4), ad::slice_cols(motion, 4, 3), x);
    }
    return ad::planar_rigid_transform(ad::slice_cols(motion, 0, 1), ad::slice_cols(motion, 1, 2), x);
}

Var ConerfModel::attribute_map(ad::Tape& tape, Var beta) const {
    require(beta.cols() == config_.latent_dim, "attribute_map: latent width mismatch");
    return attribute_map_.apply(tape, beta);
}

Var ConerfModel::lift_global(ad::Tape& tape, Var x, Var beta, const EncodingAlphas& alphas) const {
    Var encoded = positional_encode(x, config_.hyper_position, alphas.hyper_position);
    return hypermap_.apply(tape, ad::concat_cols({encoded, beta}));
}

Var ConerfModel::lift_attribute(ad::Tape& tape, Var x, Var attribute_value, int attribute,
                                const EncodingAlphas& alphas) const {
    require(attribute >= 0 && attribute < config_.num_attributes,
            "attribute index " + std::to_string(attribute) + " out of range");
    require(attribute_value.cols() == 1 && attribute_value.rows() == x.rows(), "lift_attribute: expects [N,1] values");
    Var encoded = positional_encode(x, config_.hyper_position, alphas.hyper_position);
    return attribute_hypermaps_[static_cast<std::size_t>(attribute)].apply(tape,
                                                                           ad::concat_cols({encoded, attribute_value}));
}

MaskOutputs ConerfModel::mask_field(ad::Tape& tape, Var canonical, Var lifted_latent, Var lifted_attributes,
                                    const EncodingAlphas& alphas) const {
    Var input = ad::concat_cols({positional_encode(canonical, config_.field_position,
                                                   static_cast<double>(config_.field_position.frequencies)),
                                 positional_encode(lifted_latent, config_.code, alphas.code),
                                 positional_encode(lifted_attributes, config_.code, alphas.code)});
    Var raw = mask_.apply(tape, input);
    return MaskOutputs{raw, partition_of_unity(raw)};
}

MaskOutputs ConerfModel::zero_masks(ad::Tape& tape, ad::Index n) const {
    Var raw = tape.constant(ad::Tensor::matrix(n, config_.num_attributes));
    return MaskOutputs{raw, partition_of_unity(raw)};
}

RadianceOutputs ConerfModel::radiance_field(ad::Tape& tape, Var canonical, const MaskOutputs& masks,
                                            Var lifted_latent, Var lifted_attributes, Var views, Var appearance,
                                            const EncodingAlphas& alphas) const {
    const int a_count = config_.num_attributes;
    const int d = config_.hyper_dim;
    require(lifted_attributes.cols() == a_count * d, "radiance_field: lifted attribute width mismatch");
    std::vector<Var> parts;
    parts.push_back(positional_encode(canonical, config_.field_position,
                                      static_cast<double>(config_.field_position.frequencies)));
    parts.push_back(ad::mul(ad::slice_cols(masks.channels, 0, 1),
                            positional_encode(lifted_latent, config_.code, alphas.code)));
    for (int a = 0; a < a_count; ++a) {
        Var code = positional_encode(ad::slice_cols(lifted_attributes, a * d, d), config_.code, alphas.code);
        parts.push_back(ad::mul(ad::slice_cols(masks.channels, a + 1, 1), code));
    }
    Var feature = ad::relu(trunk_.apply(tape, ad::concat_cols(parts)));

    RadianceOutputs out;
    std::vector<Var> color_in{bottleneck_.apply(tape, feature)};
    if (config_.mode == FieldMode::k3D) {
        out.sigma = ad::softplus(density_.apply(tape, feature));
        color_in.push_back(positional_encode(views, config_.view, static_cast<double>(config_.view.frequencies)));
    }
    if (config_.appearance_dim > 0) color_in.push_back(appearance);
    out.rgb = color_.apply(tape, ad::concat_cols(color_in));
    return out;
}

FieldOutputs ConerfModel::evaluate(ad::Tape& tape, const FieldInputs& in, const FieldOptions& options) const {
    const ad::Index n = in.points.rows();
    require(in.attributes.cols() == config_.num_attributes && in.attributes.rows() == n,
            "field attributes must be [N, A]");
    FieldOutputs out;
    out.canonical = canonicalize(tape, in.points, in.latents, options.alphas);
    out.lifted_latent = lift_global(tape, in.points, in.latents, options.alphas);
    std::vector<Var> lifted;
    for (int a = 0; a < config_.num_attributes; ++a) {
        lifted.push_back(lift_attribute(tape, in.points, ad::slice_cols(in.attributes, a, 1), a, options.alphas));
    }
    out.lifted_attributes = ad::concat_cols(lifted);
    out.masks = options.force_zero_masks
                    ? zero_masks(tape, n)
                    : mask_field(tape, out.canonical, out.lifted_latent, out.lifted_attributes, options.alphas);
    out.radiance = radiance_field(tape, out.canonical, out.masks, out.lifted_latent, out.lifted_attributes, in.views,
                                  in.appearance, options.alphas);
    return out;
}

}  // namespace conerf
