// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

#include "conerf/encoding.hpp"
#include "conerf/losses.hpp"
#include "conerf/mlp.hpp"
#include "conerf/model.hpp"
#include "conerf/ops.hpp"
#include "conerf/rendering.hpp"
#include "conerf/synthetic.hpp"
#include "conerf/training.hpp"

namespace conerf::testing {

using ad::Index;
using ad::Parameter;
using ad::Tape;
using ad::Tensor;
using ad::Var;

namespace {

double evaluate(const GradCase& c) {
    Tape tape(Tape::Mode::kInference);
    return c.loss(tape).value().item();
}

struct Inputs {
    std::vector<std::unique_ptr<Parameter>> params;
    std::vector<Tensor> constants;
};

Tensor random_tensor(Rng& rng, Index rows, Index cols, double lo, double hi) {
    Tensor t = Tensor::matrix(rows, cols);
    for (double& v : t.values()) v = uniform(rng, lo, hi);
    return t;
}

// Magnitudes in [lo, hi] with random sign, keeping clear of kinks at zero.
Tensor signed_tensor(Rng& rng, Index rows, Index cols, double lo, double hi) {
    Tensor t = random_tensor(rng, rows, cols, lo, hi);
    for (double& v : t.values())
        if (uniform01(rng) < 0.5) v = -v;
    return t;
}

// Projects any output onto a fixed random direction so every entry contributes.
struct Projection {
    Tensor weights;
    Var operator()(Var out) {
        Tape& tape = *out.tape();
        if (weights.empty()) throw std::logic_error("projection used before sizing");
        return ad::sum(ad::mul(out, tape.constant(weights)));
    }
};

using OpFn = std::function<Var(Tape&, const std::vector<Var>&)>;

GradCase op_case(std::string name, Rng& rng, std::vector<Tensor> values, OpFn fn) {
    auto inputs = std::make_shared<Inputs>();
    for (std::size_t i = 0; i < values.size(); ++i) {
        inputs->params.push_back(
            std::make_unique<Parameter>(Parameter{"x" + std::to_string(i), std::move(values[i])}));
    }
    auto projection = std::make_shared<Projection>();
    auto forward = [inputs, fn](Tape& tape) {
        std::vector<Var> vars;
        for (auto& p : inputs->params) vars.push_back(tape.leaf(*p));
        return fn(tape, vars);
    };
    {
        Tape probe(Tape::Mode::kInference);
        const Tensor& out = forward(probe).value();
        projection->weights = random_tensor(rng, out.rows(), out.cols(), -1.0, 1.0);
    }
    GradCase c;
    c.name = std::move(name);
    c.owner = std::make_shared<std::pair<std::shared_ptr<Inputs>, std::shared_ptr<Projection>>>(inputs, projection);
    for (auto& p : inputs->params) c.params.push_back(p.get());
    c.loss = [forward, projection](Tape& tape) { return (*projection)(forward(tape)); };
    return c;
}

// Model whose weights are pushed away from their initial values so no
// network sits at an identity-like or zero-output point.
std::shared_ptr<ConerfModel> random_model(FieldMode mode, std::uint64_t seed) {
    ModelConfig config = ModelConfig::desk(mode, 2, 3);
    config.canonicalizer = {{16, 16, 16}, {1}};
    config.attribute_map = {{12, 12}, {}};
    config.hypermap = {{12, 12, 12}, {1}};
    config.attribute_hypermap = config.hypermap;
    config.mask = {{16, 16, 16}, {2}};
    config.trunk = {{16, 16, 16}, {1}};
    config.color_width = 12;
    config.appearance_dim = 2;
    config.hyper_dim = 3;
    config.latent_dim = 4;
    auto model = std::make_shared<ConerfModel>(config, seed);
    Rng rng = make_rng(seed, 0x7065727475726221);
    for (Parameter* p : model->parameters())
        for (double& v : p->value.values()) v += 0.15 * standard_normal(rng);
    return model;
}

EncodingAlphas partial_alphas(const ModelConfig& config) {
    EncodingAlphas a = EncodingAlphas::open(config);
    a.warp_position = 0.5 * config.warp_position.frequencies + 0.3;
    a.hyper_position = 0.6;
    a.code = 0.4;
    return a;
}

struct NetworkInputs {
    std::shared_ptr<ConerfModel> model;
    std::vector<std::unique_ptr<Parameter>> inputs;
};

GradCase network_case(std::string name, FieldMode mode, std::uint64_t seed, std::vector<Tensor> values,
                      std::function<Var(Tape&, const ConerfModel&, const std::vector<Var>&)> fn) {
    auto owner = std::make_shared<NetworkInputs>();
    owner->model = random_model(mode, seed);
    for (std::size_t i = 0; i < values.size(); ++i) {
        owner->inputs.push_back(std::make_unique<Parameter>(Parameter{"in" + std::to_string(i), std::move(values[i])}));
    }
    Rng rng = make_rng(seed, 0x70726f6a);
    auto projection = std::make_shared<Projection>();
    auto forward = [owner, fn](Tape& tape) {
        std::vector<Var> vars;
        for (auto& p : owner->inputs) vars.push_back(tape.leaf(*p));
        return fn(tape, *owner->model, vars);
    };
    {
        Tape probe(Tape::Mode::kInference);
        const Tensor& out = forward(probe).value();
        projection->weights = random_tensor(rng, out.rows(), out.cols(), -1.0, 1.0);
    }
    GradCase c;
    c.name = std::move(name);
    c.owner = std::make_shared<std::pair<std::shared_ptr<NetworkInputs>, std::shared_ptr<Projection>>>(owner,
                                                                                                         projection);
    for (auto& p : owner->inputs) c.params.push_back(p.get());
    for (Parameter* p : owner->model->parameters()) c.params.push_back(p);
    c.loss = [forward, projection](Tape& tape) { return (*projection)(forward(tape)); };
    c.entries_per_param = 4;
    return c;
}

struct EndToEnd {
    Dataset dataset;
    std::unique_ptr<Trainer> trainer;
    RayBatch batch;
};

GradCase pixel_2d_case(std::uint64_t seed) {
    SyntheticSceneSpec spec = SyntheticSceneSpec::defaults(FieldMode::k2D);
    spec.width = 8;
    spec.height = 8;
    spec.train_frames = 6;
    spec.test_frames = 2;
    spec.annotation_fraction = 0.5;
    spec.supersample = 1;
    spec.seed = seed;
    auto owner = std::make_shared<EndToEnd>();
    owner->dataset = generate_synthetic(spec).train;
    ModelConfig mc = random_model(FieldMode::k2D, seed)->config();
    mc.num_attributes = owner->dataset.num_attributes();
    mc.num_frames = owner->dataset.num_frames();
    TrainConfig tc;
    tc.batch_rays = 12;
    tc.annotated_quota = 0.5;
    tc.seed = seed;
    tc.total_steps = 1000;
    owner->trainer = std::make_unique<Trainer>(owner->dataset, mc, tc);
    Rng rng = make_rng(seed, 0x62617463);
    for (Parameter* p : owner->trainer->model().parameters())
        for (double& v : p->value.values()) v += 0.15 * standard_normal(rng);
    owner->batch = sample_ray_batch(owner->dataset, tc, rng);

    GradCase c;
    c.name = "pixel_2d_end_to_end";
    c.owner = owner;
    for (Parameter* p : owner->trainer->model().parameters()) c.params.push_back(p);
    const EndToEnd* e = owner.get();
    c.loss = [e](Tape& tape) {
        return total_loss(e->trainer->build_losses(tape, e->batch), e->trainer->config().weights);
    };
    c.entries_per_param = 4;
    return c;
}

GradCase ray_3d_case(std::uint64_t seed) {
    Rng rng = make_rng(seed, 0x72617933);
    const int rays = 3;
    RayQuery query;
    for (int r = 0; r < rays; ++r) {
        Ray ray;
        ray.origin = Eigen::Vector3d(uniform(rng, -0.3, 0.3), uniform(rng, -0.3, 0.3), -1.5);
        ray.direction = Eigen::Vector3d(uniform(rng, -0.2, 0.2), uniform(rng, -0.2, 0.2), 1.0).normalized();
        ray.near = 1.0;
        ray.far = 2.0;
        query.rays.push_back(ray);
    }
    const ModelConfig config = random_model(FieldMode::k3D, seed)->config();
    std::vector<Tensor> values{random_tensor(rng, rays, config.latent_dim, -0.5, 0.5),
                               random_tensor(rng, rays, config.num_attributes, -0.9, 0.9),
                               random_tensor(rng, rays, config.appearance_dim, -0.5, 0.5)};
    return network_case("ray_3d_end_to_end", FieldMode::k3D, seed, std::move(values),
                        [query](Tape& tape, const ConerfModel& model, const std::vector<Var>& in) {
                            RayQuery q = query;
                            q.latents = in[0];
                            q.attributes = in[1];
                            q.appearance = in[2];
                            RenderSettings settings;
                            settings.samples_per_ray = 6;
                            settings.alphas = partial_alphas(model.config());
                            const RayOutputs out = render_rays(tape, model, q, settings, nullptr);
                            // Mask channels see sigma only through a stop-gradient.
                            return ad::concat_cols({out.rgb, out.opacity});
                        });
}

using Factory = std::function<GradCase(std::uint64_t)>;

const std::map<std::string, Factory>& factories() {
    static const std::map<std::string, Factory> table = [] {
        std::map<std::string, Factory> t;
        auto unary_case = [&t](const std::string& name, double lo, double hi, bool signed_values,
                               std::function<Var(Var)> fn) {
            t[name] = [=](std::uint64_t seed) {
                Rng rng = make_rng(seed, std::hash<std::string>{}(name));
                Tensor x = signed_values ? signed_tensor(rng, 3, 4, lo, hi) : random_tensor(rng, 3, 4, lo, hi);
                return op_case(name, rng, {x}, [fn](Tape&, const std::vector<Var>& v) { return fn(v[0]); });
            };
        };
        auto binary_case = [&t](const std::string& name, Index ar, Index ac, Index br, Index bc,
                                std::function<Var(Var, Var)> fn) {
            t[name] = [=](std::uint64_t seed) {
                Rng rng = make_rng(seed, std::hash<std::string>{}(name));
                return op_case(name, rng, {random_tensor(rng, ar, ac, -1, 1), random_tensor(rng, br, bc, -1, 1)},
                               [fn](Tape&, const std::vector<Var>& v) { return fn(v[0], v[1]); });
            };
        };

        binary_case("add", 3, 4, 3, 4, ad::add);
        binary_case("add_broadcast_row", 3, 4, 1, 4, ad::add);
        binary_case("sub_broadcast_col", 3, 4, 3, 1, ad::sub);
        binary_case("mul", 3, 4, 3, 4, ad::mul);
        binary_case("mul_broadcast_scalar", 3, 4, 1, 1, ad::mul);
        binary_case("matmul", 3, 4, 4, 2, ad::matmul);
        unary_case("neg", -1, 1, false, ad::neg);
        unary_case("scale", -1, 1, false, [](Var a) { return ad::scale(a, -2.5); });
        unary_case("add_scalar", -1, 1, false, [](Var a) { return ad::add_scalar(a, 0.7); });
        unary_case("relu", 0.05, 1, true, ad::relu);
        unary_case("sigmoid", -3, 3, false, ad::sigmoid);
        unary_case("tanh", -2, 2, false, ad::tanh);
        unary_case("softplus", -3, 3, false, ad::softplus);
        unary_case("exp", -2, 2, false, ad::exp);
        unary_case("log", 0.1, 3, false, ad::log);
        unary_case("sin", -3, 3, false, ad::sin);
        unary_case("cos", -3, 3, false, ad::cos);
        unary_case("square", -2, 2, false, ad::square);
        unary_case("clamp", 0.0, 1.0, false, [](Var a) { return ad::clamp(a, 0.25, 0.75); });
        unary_case("sum", -1, 1, false, ad::sum);
        unary_case("mean", -1, 1, false, ad::mean);
        unary_case("row_sum", -1, 1, false, ad::row_sum);
        unary_case("slice_cols", -1, 1, false, [](Var a) { return ad::slice_cols(a, 1, 2); });
        unary_case("reshape", -1, 1, false, [](Var a) { return ad::reshape(a, 6, 2); });
        unary_case("gather_rows", -1, 1, false, [](Var a) {
            const std::vector<Index> idx{2, 0, 2, 1, 2};
            return ad::gather_rows(a, idx);
        });
        binary_case("concat_cols", 3, 2, 3, 3, [](Var a, Var b) { return ad::concat_cols({a, b, a}); });
        binary_case("linear_chain", 5, 3, 3, 4, [](Var x, Var w) {
            Tape& tape = *x.tape();
            Tensor b = Tensor::matrix(1, 4);
            for (Index i = 0; i < 4; ++i) b[i] = 0.1 * static_cast<double>(i) - 0.2;
            return ad::tanh(ad::linear(x, w, tape.constant(b)));
        });
        t["linear"] = [](std::uint64_t seed) {
            Rng rng = make_rng(seed, 0x6c696e);
            return op_case("linear", rng,
                           {random_tensor(rng, 5, 3, -1, 1), random_tensor(rng, 3, 4, -1, 1),
                            random_tensor(rng, 1, 4, -1, 1)},
                           [](Tape&, const std::vector<Var>& v) { return ad::linear(v[0], v[1], v[2]); });
        };
        t["quaternion_rigid_transform"] = [](std::uint64_t seed) {
            Rng rng = make_rng(seed, 0x71756174);
            return op_case("quaternion_rigid_transform", rng,
                           {random_tensor(rng, 4, 4, -0.6, 0.6), random_tensor(rng, 4, 3, -1, 1),
                            random_tensor(rng, 4, 3, -1, 1)},
                           [](Tape&, const std::vector<Var>& v) {
                               return ad::quaternion_rigid_transform(v[0], v[1], v[2]);
                           });
        };
        t["planar_rigid_transform"] = [](std::uint64_t seed) {
            Rng rng = make_rng(seed, 0x706c616e);
            return op_case("planar_rigid_transform", rng,
                           {random_tensor(rng, 4, 1, -3, 3), random_tensor(rng, 4, 2, -1, 1),
                            random_tensor(rng, 4, 2, -1, 1)},
                           [](Tape&, const std::vector<Var>& v) {
                               return ad::planar_rigid_transform(v[0], v[1], v[2]);
                           });
        };
        t["positional_encode"] = [](std::uint64_t seed) {
            Rng rng = make_rng(seed, 0x656e63);
            const double alpha = uniform(rng, 0.0, 4.0);
            return op_case("positional_encode", rng, {random_tensor(rng, 3, 3, -1, 1)},
                           [alpha](Tape&, const std::vector<Var>& v) {
                               return positional_encode(v[0], EncodingSpec{4, true, {}}, alpha);
                           });
        };
        t["composite"] = [](std::uint64_t seed) {
            Rng rng = make_rng(seed, 0x636f6d70);
            const Index rays = 3;
            const Index samples = 5;
            Tensor deltas = random_tensor(rng, rays, samples, 0.05, 0.4);
            return op_case("composite", rng,
                           {random_tensor(rng, rays, samples, 0.0, 3.0), random_tensor(rng, rays * samples, 4, 0, 1)},
                           [deltas](Tape&, const std::vector<Var>& v) { return conerf::composite(v[0], deltas, v[1]); });
        };
        t["partition_of_unity"] = [](std::uint64_t seed) {
            Rng rng = make_rng(seed, 0x706f75);
            return op_case("partition_of_unity", rng, {random_tensor(rng, 4, 3, 0.0, 0.3)},
                           [](Tape&, const std::vector<Var>& v) { return partition_of_unity(v[0]); });
        };
        t["partition_of_unity_saturated"] = [](std::uint64_t seed) {
            Rng rng = make_rng(seed, 0x706f7573);
            return op_case("partition_of_unity_saturated", rng, {random_tensor(rng, 4, 3, 0.4, 0.9)},
                           [](Tape&, const std::vector<Var>& v) { return partition_of_unity(v[0]); });
        };
        t["recon_loss"] = [](std::uint64_t seed) {
            Rng rng = make_rng(seed, 0x7265636f);
            Tensor target = random_tensor(rng, 5, 3, 0, 1);
            return op_case("recon_loss", rng, {random_tensor(rng, 5, 3, 0, 1)},
                           [target](Tape& tape, const std::vector<Var>& v) {
                               return recon_loss(v[0], tape.constant(target));
                           });
        };
        t["latent_prior_loss"] = [](std::uint64_t seed) {
            Rng rng = make_rng(seed, 0x6c617465);
            return op_case("latent_prior_loss", rng, {random_tensor(rng, 4, 6, -1, 1)},
                           [](Tape&, const std::vector<Var>& v) { return latent_prior_loss(v[0]); });
        };
        t["attr_loss"] = [](std::uint64_t seed) {
            Rng rng = make_rng(seed, 0x61747472);
            Tensor target = random_tensor(rng, 5, 3, -1, 1);
            Tensor indicator = Tensor::matrix(5, 3);
            for (double& v : indicator.values()) v = uniform01(rng) < 0.5 ? 1.0 : 0.0;
            return op_case("attr_loss", rng, {random_tensor(rng, 5, 3, -1, 1)},
                           [target, indicator](Tape&, const std::vector<Var>& v) {
                               return attr_loss(v[0], target, indicator);
                           });
        };
        t["mask_loss"] = [](std::uint64_t seed) {
            Rng rng = make_rng(seed, 0x6d61736b);
            Tensor target = Tensor::matrix(6, 2);
            Tensor weights = random_tensor(rng, 6, 2, 0, 1);
            for (double& v : target.values()) v = uniform01(rng) < 0.5 ? 1.0 : 0.0;
            return op_case("mask_loss", rng, {random_tensor(rng, 6, 2, 0.05, 0.95)},
                           [target, weights](Tape&, const std::vector<Var>& v) {
                               return mask_loss(v[0], target, weights, FocalSpec{});
                           });
        };
        t["mlp"] = [](std::uint64_t seed) {
            Rng rng = make_rng(seed, 0x6d6c70);
            auto owner = std::make_shared<ad::Mlp>(
                "net", ad::make_mlp_spec(3, {8, 8, 8}, 2, {1}, ad::Activation::kTanh), rng);
            std::vector<Parameter*> params;
            owner->collect(params);
            for (Parameter* p : params)
                for (double& v : p->value.values()) v += 0.1 * standard_normal(rng);
            auto input = std::make_shared<Parameter>(Parameter{"input", random_tensor(rng, 4, 3, -1, 1)});
            auto projection = std::make_shared<Projection>();
            projection->weights = random_tensor(rng, 4, 2, -1, 1);
            GradCase c;
            c.name = "mlp";
            c.owner = std::make_shared<std::tuple<std::shared_ptr<ad::Mlp>, std::shared_ptr<Parameter>,
                                                  std::shared_ptr<Projection>>>(owner, input, projection);
            c.params = params;
            c.params.push_back(input.get());
            const ad::Mlp* net = owner.get();
            const Parameter* in = input.get();
            c.loss = [net, in, projection](Tape& tape) { return (*projection)(net->apply(tape, tape.leaf(*in))); };
            return c;
        };

        for (FieldMode mode : {FieldMode::k2D, FieldMode::k3D}) {
            const std::string suffix = mode == FieldMode::k2D ? "_2d" : "_3d";
            const int dim = mode == FieldMode::k2D ? 2 : 3;
            t["canonicalizer" + suffix] = [mode, dim, suffix](std::uint64_t seed) {
                Rng rng = make_rng(seed, 0x63616e);
                return network_case("canonicalizer" + suffix, mode, seed,
                                    {random_tensor(rng, 4, dim, -1, 1), random_tensor(rng, 4, 4, -0.5, 0.5)},
                                    [](Tape& tape, const ConerfModel& m, const std::vector<Var>& v) {
                                        return m.canonicalize(tape, v[0], v[1], partial_alphas(m.config()));
                                    });
            };
            t["radiance_field" + suffix] = [mode, dim, suffix](std::uint64_t seed) {
                Rng rng = make_rng(seed, 0x726164);
                const Index n = 4;
                std::vector<Tensor> values{random_tensor(rng, n, dim, -1, 1), random_tensor(rng, n, 2, 0.05, 0.45),
                                           random_tensor(rng, n, 3, -1, 1), random_tensor(rng, n, 6, -1, 1),
                                           random_tensor(rng, n, 3, -1, 1), random_tensor(rng, n, 2, -0.5, 0.5)};
                return network_case("radiance_field" + suffix, mode, seed, std::move(values),
                                    [](Tape& tape, const ConerfModel& m, const std::vector<Var>& v) {
                                        const MaskOutputs masks{v[1], partition_of_unity(v[1])};
                                        const RadianceOutputs out =
                                            m.radiance_field(tape, v[0], masks, v[2], v[3], v[4], v[5],
                                                             partial_alphas(m.config()));
                                        return out.sigma.valid() ? ad::concat_cols({out.rgb, out.sigma}) : out.rgb;
                                    });
            };
        }
        t["attribute_map"] = [](std::uint64_t seed) {
            Rng rng = make_rng(seed, 0x61747472);
            return network_case("attribute_map", FieldMode::k2D, seed, {random_tensor(rng, 5, 4, -1, 1)},
                                [](Tape& tape, const ConerfModel& m, const std::vector<Var>& v) {
                                    return m.attribute_map(tape, v[0]);
                                });
        };
        t["hypermap"] = [](std::uint64_t seed) {
            Rng rng = make_rng(seed, 0x68797065);
            return network_case("hypermap", FieldMode::k3D, seed,
                                {random_tensor(rng, 4, 3, -1, 1), random_tensor(rng, 4, 4, -0.5, 0.5)},
                                [](Tape& tape, const ConerfModel& m, const std::vector<Var>& v) {
                                    return m.lift_global(tape, v[0], v[1], partial_alphas(m.config()));
                                });
        };
        t["attribute_hypermap"] = [](std::uint64_t seed) {
            Rng rng = make_rng(seed, 0x61687970);
            return network_case("attribute_hypermap", FieldMode::k3D, seed,
                                {random_tensor(rng, 4, 3, -1, 1), random_tensor(rng, 4, 1, -1, 1)},
                                [](Tape& tape, const ConerfModel& m, const std::vector<Var>& v) {
                                    return m.lift_attribute(tape, v[0], v[1], 1, partial_alphas(m.config()));
                                });
        };
        t["mask_field"] = [](std::uint64_t seed) {
            Rng rng = make_rng(seed, 0x6d66);
            return network_case("mask_field", FieldMode::k3D, seed,
                                {random_tensor(rng, 4, 3, -1, 1), random_tensor(rng, 4, 3, -1, 1),
                                 random_tensor(rng, 4, 6, -1, 1)},
                                [](Tape& tape, const ConerfModel& m, const std::vector<Var>& v) {
                                    return m.mask_field(tape, v[0], v[1], v[2], partial_alphas(m.config())).raw;
                                });
        };
        t["pixel_2d_end_to_end"] = pixel_2d_case;
        t["ray_3d_end_to_end"] = ray_3d_case;
        return t;
    }();
    return table;
}

}  // namespace

GradReport check_gradients(const GradCase& c, Rng& rng) {
    std::map<const Parameter*, Tensor> analytic;
    {
        Tape tape;
        Var loss = c.loss(tape);
        const ad::GradientMap& grads = tape.backward(loss);
        for (const Parameter* p : c.params) {
            const Tensor* g = grads.find(*p);
            analytic[p] = g ? *g : Tensor(p->value.shape(), 0.0);
        }
    }
    GradReport report;
    for (Parameter* p : c.params) {
        const Index n = p->value.size();
        std::vector<Index> entries;
        if (c.entries_per_param <= 0 || c.entries_per_param >= n) {
            for (Index i = 0; i < n; ++i) entries.push_back(i);
        } else {
            for (int k = 0; k < c.entries_per_param; ++k)
                entries.push_back(static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(n))));
        }
        for (Index i : entries) {
            const double saved = p->value[i];
            auto central = [&](double h) {
                p->value[i] = saved + h;
                const double up = evaluate(c);
                p->value[i] = saved - h;
                const double down = evaluate(c);
                p->value[i] = saved;
                return (up - down) / (2.0 * h);
            };
            // Halve the step until successive estimates agree; a ReLU kink
            // within h of the point shows up as disagreement.
            double h = kFiniteDifferenceStep;
            double numeric = central(h);
            while (h > kMinFiniteDifferenceStep) {
                h *= 0.5;
                const double refined = central(h);
                const double change = std::abs(refined - numeric);
                numeric = refined;
                if (change <= kStepAgreement * std::max({std::abs(refined), kRelativeFloor})) break;
            }
            const double a = analytic[p][i];
            const double err =
                std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), kRelativeFloor});
            ++report.entries;
            if (err > report.max_rel_error || report.worst.empty()) {
                report.max_rel_error = err;
                char detail[96];
                std::snprintf(detail, sizeof(detail), " analytic %.6e numeric %.6e", a, numeric);
                report.worst = p->name + "[" + std::to_string(i) + "]" + detail;
            }
        }
    }
    return report;
}

std::vector<std::string> gradient_case_names() {
    std::vector<std::string> names;
    for (const auto& [name, factory] : factories()) names.push_back(name);
    return names;
}

GradCase make_gradient_case(const std::string& name, std::uint64_t seed) {
    const auto it = factories().find(name);
    if (it == factories().end()) throw std::invalid_argument("unknown gradient case " + name);
    return it->second(seed);
}

}  // namespace conerf::testing
