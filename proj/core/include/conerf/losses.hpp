// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "conerf/tape.hpp"

namespace conerf {

struct LossWeights {
    double recon = 1.0;
    double enc = 1e-4;
    double attr = 1e-1;
    double mask = 1e-2;

    void validate() const;
};

/// Focal binary cross-entropy. Positives are weighted by alpha * (1 - p)^gamma,
/// negatives by p^gamma, so gamma = 0 and alpha = 1 give plain cross-entropy.
struct FocalSpec {
    double gamma = 2.0;
    double alpha = 0.25;

    void validate() const;
};

/// Probabilities are clamped to [kProbabilityEpsilon, 1 - kProbabilityEpsilon] before the log.
inline constexpr double kProbabilityEpsilon = 1e-7;

double focal_term(double p, bool positive, const FocalSpec& focal);
/// d focal_term / dp, zero where p was clamped.
double focal_term_derivative(double p, bool positive, const FocalSpec& focal);

/// Mean squared error over every element.
ad::Var recon_loss(ad::Var rendered, ad::Var target);

/// Sum of squared code entries.
ad::Var latent_prior_loss(ad::Var codes);

/// sum(indicator * (predicted - target)^2), all [N,A].
ad::Var attr_loss(ad::Var predicted, const ad::Tensor& target, const ad::Tensor& indicator);

/// sum(weights * focal(rendered, target)). `rendered` holds the attribute
/// channels [R,A]; `target` is binary; `weights` carries the annotation
/// gating and per-(frame, attribute) averaging.
ad::Var mask_loss(ad::Var rendered, const ad::Tensor& target, const ad::Tensor& weights, const FocalSpec& focal);

struct LossTerms {
    ad::Var recon;
    ad::Var enc;
    ad::Var attr;
    ad::Var mask;
};

/// Weighted sum; unbound terms are skipped.
ad::Var total_loss(const LossTerms& terms, const LossWeights& weights);

}  // namespace conerf
