// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "conerf/random.hpp"
#include "conerf/tape.hpp"

namespace conerf::ad {

enum class Activation { kNone, kSigmoid, kTanh };

/// Fully connected network. widths = {input, hidden..., output}; every hidden
/// layer is followed by a rectifier. Layer i in `skips` receives the network
/// input concatenated to its own input.
struct MlpSpec {
    std::vector<int> widths;
    std::vector<int> skips;
    Activation output = Activation::kNone;

    void validate() const;
    int layer_count() const { return static_cast<int>(widths.size()) - 1; }
    int input_width() const { return widths.front(); }
    int output_width() const { return widths.back(); }
    int layer_input_width(int layer) const;
    bool is_skip(int layer) const;
};

/// Builds the spec for `hidden` layers between `input` and `output`.
MlpSpec make_mlp_spec(int input, const std::vector<int>& hidden, int output, std::vector<int> skips = {},
                      Activation output_activation = Activation::kNone);

/// Initialization of the output layer. Hidden layers always use He fan-in
/// scaling.
struct OutputInit {
    enum class Kind { kLecunUniform, kHeNormal, kUniform };
    Kind kind = Kind::kLecunUniform;
    double bound = 0.0;  // for kUniform

    static OutputInit he() { return {Kind::kHeNormal, 0.0}; }
    static OutputInit uniform(double bound) { return {Kind::kUniform, bound}; }
};

class Mlp {
public:
    Mlp(std::string name, MlpSpec spec, Rng& rng, OutputInit output_init = {});

    Var apply(Tape& tape, Var input) const;

    const MlpSpec& spec() const noexcept { return spec_; }
    const std::string& name() const noexcept { return name_; }
    Parameter& weight(int layer) { return weights_.at(static_cast<std::size_t>(layer)); }
    Parameter& bias(int layer) { return biases_.at(static_cast<std::size_t>(layer)); }
    const Parameter& weight(int layer) const { return weights_.at(static_cast<std::size_t>(layer)); }
    const Parameter& bias(int layer) const { return biases_.at(static_cast<std::size_t>(layer)); }

    void collect(std::vector<Parameter*>& out);
    void collect(std::vector<const Parameter*>& out) const;

private:
    std::string name_;
    MlpSpec spec_;
    std::vector<Parameter> weights_;
    std::vector<Parameter> biases_;
};

/// Free-function form of Mlp::apply over explicit weight/bias tensors.
Var mlp_apply(Tape& tape, const MlpSpec& spec, const std::vector<const Parameter*>& weights,
              const std::vector<const Parameter*>& biases, Var input);

}  // namespace conerf::ad
