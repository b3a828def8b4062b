// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "conerf/tape.hpp"

namespace conerf {

/// Coarse-to-fine window: the band weight ramps in between `start` and
/// `start + duration` steps.
struct WindowSchedule {
    double start = 0.0;
    double duration = 0.0;
};

/// Sinusoidal encoding with `frequencies` bands at 2^k * pi, k = 0..L-1.
struct EncodingSpec {
    int frequencies = 8;
    bool include_identity = true;
    WindowSchedule window{};

    void validate() const;
    int output_width(int input_width) const {
        return input_width * (2 * frequencies + (include_identity ? 1 : 0));
    }
    /// Copy with the window stretched by `factor` (desk-scale runs).
    EncodingSpec scaled(double factor) const;
};

/// Weight of band k at window position alpha: (1 - cos(pi * clamp(alpha - k, 0, 1))) / 2.
double window_weight(double alpha, int band);

/// alpha = L * clamp((step - start) / duration, 0, 1); L when duration is 0.
double schedule_alpha(std::int64_t step, const EncodingSpec& spec);

/// Encodes one point. Layout: [p if identity] then per band k: sin(2^k pi p), cos(2^k pi p),
/// each scaled by the band weight.
std::vector<double> positional_encode(std::span<const double> point, const EncodingSpec& spec, double alpha);

/// Row-wise encoding of x[N,D] on a tape; differentiable in x.
ad::Var positional_encode(ad::Var x, const EncodingSpec& spec, double alpha);

}  // namespace conerf
