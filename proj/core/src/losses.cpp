// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#include "conerf/losses.hpp"

#include <algorithm>
#include <cmath>

#include "conerf/error.hpp"
#include "conerf/ops.hpp"

namespace conerf {

using ad::Index;
using ad::Tensor;
using ad::Var;

void LossWeights::validate() const {
    require(recon >= 0.0 && enc >= 0.0 && attr >= 0.0 && mask >= 0.0, "loss weights must be non-negative");
}

void FocalSpec::validate() const {
    require(gamma >= 0.0, "focal gamma must be non-negative");
    require(alpha > 0.0 && alpha <= 1.0, "focal alpha must lie in (0, 1]");
}

namespace {

double clamp_probability(double p) { return std::clamp(p, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon); }

bool clamped(double p) { return p <= kProbabilityEpsilon || p >= 1.0 - kProbabilityEpsilon; }

}  // namespace

double focal_term(double p, bool positive, const FocalSpec& focal) {
    const double q = clamp_probability(p);
    if (positive) return -focal.alpha * std::pow(1.0 - q, focal.gamma) * std::log(q);
    return -std::pow(q, focal.gamma) * std::log(1.0 - q);
}

double focal_term_derivative(double p, bool positive, const FocalSpec& focal) {
    if (clamped(p)) return 0.0;
    const double g = focal.gamma;
    if (positive) {
        const double focus = g == 0.0 ? 0.0 : g * std::pow(1.0 - p, g - 1.0) * std::log(p);
        return focal.alpha * (focus - std::pow(1.0 - p, g) / p);
    }
    const double focus = g == 0.0 ? 0.0 : -g * std::pow(p, g - 1.0) * std::log(1.0 - p);
    return focus + std::pow(p, g) / (1.0 - p);
}

Var recon_loss(Var rendered, Var target) {
    require(rendered.value().same_shape(target.value()), "recon_loss: shape mismatch");
    return ad::mean(ad::square(ad::sub(rendered, target)));
}

Var latent_prior_loss(Var codes) { return ad::sum(ad::square(codes)); }

Var attr_loss(Var predicted, const Tensor& target, const Tensor& indicator) {
    require(predicted.value().same_shape(target) && target.same_shape(indicator), "attr_loss: shape mismatch");
    ad::Tape& tape = *predicted.tape();
    Var diff = ad::sub(predicted, tape.constant(target));
    return ad::sum(ad::mul(ad::square(diff), tape.constant(indicator)));
}

Var mask_loss(Var rendered, const Tensor& target, const Tensor& weights, const FocalSpec& focal) {
    focal.validate();
    const Tensor& p = rendered.value();
    require(p.same_shape(target) && target.same_shape(weights), "mask_loss: shape mismatch");
    double total = 0.0;
    for (Index i = 0; i < p.size(); ++i) {
        if (weights[i] != 0.0) total += weights[i] * focal_term(p[i], target[i] >= 0.5, focal);
    }
    return rendered.tape()->record(
        Tensor::scalar(total), {rendered}, [rendered, target, weights, focal](ad::Tape& t, const Tensor& g) {
            const Tensor& p = t.value(rendered);
            Tensor& gp = t.grad(rendered);
            const double upstream = g.item();
            for (Index i = 0; i < p.size(); ++i) {
                if (weights[i] != 0.0)
                    gp[i] += upstream * weights[i] * focal_term_derivative(p[i], target[i] >= 0.5, focal);
            }
        });
}

Var total_loss(const LossTerms& terms, const LossWeights& weights) {
    weights.validate();
    Var total;
    auto accumulate = [&](Var term, double w) {
        if (!term.valid()) return;
        Var scaled = ad::scale(term, w);
        total = total.valid() ? ad::add(total, scaled) : scaled;
    };
    accumulate(terms.recon, weights.recon);
    accumulate(terms.enc, weights.enc);
    accumulate(terms.attr, weights.attr);
    accumulate(terms.mask, weights.mask);
    require(total.valid(), "total_loss needs at least one term");
    return total;
}

}  // namespace conerf
