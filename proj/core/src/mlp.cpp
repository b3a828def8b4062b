// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#include "conerf/mlp.hpp"

#include <algorithm>
#include <cmath>

#include "conerf/error.hpp"
#include "conerf/ops.hpp"

namespace conerf::ad {

void MlpSpec::validate() const {
    require(widths.size() >= 2, "an MLP needs at least an input and an output width");
    for (int w : widths) require(w > 0, "MLP widths must be positive");
    for (int s : skips) require(s > 0 && s < layer_count(), "MLP skip index must lie strictly inside the layer range");
}

int MlpSpec::layer_input_width(int layer) const {
    return widths[static_cast<std::size_t>(layer)] + (is_skip(layer) ? widths.front() : 0);
}

bool MlpSpec::is_skip(int layer) const { return std::find(skips.begin(), skips.end(), layer) != skips.end(); }

MlpSpec make_mlp_spec(int input, const std::vector<int>& hidden, int output, std::vector<int> skips,
                      Activation output_activation) {
    MlpSpec spec;
    spec.widths.push_back(input);
    spec.widths.insert(spec.widths.end(), hidden.begin(), hidden.end());
    spec.widths.push_back(output);
    spec.skips = std::move(skips);
    spec.output = output_activation;
    spec.validate();
    return spec;
}

Mlp::Mlp(std::string name, MlpSpec spec, Rng& rng, OutputInit output_init) : name_(std::move(name)), spec_(std::move(spec)) {
    spec_.validate();
    const int layers = spec_.layer_count();
    for (int l = 0; l < layers; ++l) {
        const int fan_in = spec_.layer_input_width(l);
        const int fan_out = spec_.widths[static_cast<std::size_t>(l + 1)];
        Tensor w = Tensor::matrix(fan_in, fan_out);
        const bool hidden = l + 1 < layers;
        if (hidden || output_init.kind == OutputInit::Kind::kHeNormal) {
            const double std_dev = std::sqrt(2.0 / fan_in);
            for (double& v : w.values()) v = std_dev * standard_normal(rng);
        } else {
            const double bound = output_init.kind == OutputInit::Kind::kUniform
                                     ? output_init.bound
                                     : 1.0 / std::sqrt(static_cast<double>(fan_in));
            for (double& v : w.values()) v = uniform(rng, -bound, bound);
        }
        const std::string prefix = name_ + ".layer" + std::to_string(l);
        weights_.push_back(Parameter{prefix + ".weight", std::move(w)});
        biases_.push_back(Parameter{prefix + ".bias", Tensor::matrix(1, fan_out)});
    }
}

Var Mlp::apply(Tape& tape, Var input) const {
    std::vector<const Parameter*> w;
    std::vector<const Parameter*> b;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        w.push_back(&weights_[i]);
        b.push_back(&biases_[i]);
    }
    return mlp_apply(tape, spec_, w, b, input);
}

void Mlp::collect(std::vector<Parameter*>& out) {
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        out.push_back(&weights_[i]);
        out.push_back(&biases_[i]);
    }
}

void Mlp::collect(std::vector<const Parameter*>& out) const {
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        out.push_back(&weights_[i]);
        out.push_back(&biases_[i]);
    }
}

Var mlp_apply(Tape& tape, const MlpSpec& spec, const std::vector<const Parameter*>& weights,
              const std::vector<const Parameter*>& biases, Var input) {
    const int layers = spec.layer_count();
    require(static_cast<int>(weights.size()) == layers && static_cast<int>(biases.size()) == layers,
            "MLP weight count does not match its spec");
    require(input.cols() == spec.input_width(), "MLP input width " + std::to_string(input.cols()) +
                                                    " does not match first layer width " +
                                                    std::to_string(spec.input_width()));
    Var h = input;
    for (int l = 0; l < layers; ++l) {
        if (spec.is_skip(l)) h = concat_cols({h, input});
        h = linear(h, tape.leaf(*weights[static_cast<std::size_t>(l)]), tape.leaf(*biases[static_cast<std::size_t>(l)]));
        if (l + 1 < layers) h = relu(h);
    }
    switch (spec.output) {
        case Activation::kSigmoid: return sigmoid(h);
        case Activation::kTanh: return tanh(h);
        case Activation::kNone: break;
    }
    return h;
}

}  // namespace conerf::ad
