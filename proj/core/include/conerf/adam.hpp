// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>

#include "conerf/tape.hpp"

namespace conerf::ad {

/// Exponential decay from `initial` to `final` over `total_steps`, constant
/// afterwards.
struct LearningRateSchedule {
    double initial = 1e-4;
    double final = 1e-5;
    std::int64_t total_steps = 250000;

    double at(std::int64_t step) const;
};

struct AdamOptions {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Moment accumulators keyed by parameter name.
struct AdamState {
    std::map<std::string, Tensor> first_moment;
    std::map<std::string, Tensor> second_moment;
    std::int64_t step = 0;
};

class Adam {
public:
    explicit Adam(LearningRateSchedule schedule, AdamOptions options = {});

    /// One bias-corrected update. Parameters absent from `grads` are updated
    /// with a zero gradient.
    void step(std::span<Parameter* const> params, const GradientMap& grads);

    double current_learning_rate() const { return schedule_.at(state_.step); }
    const LearningRateSchedule& schedule() const noexcept { return schedule_; }
    const AdamOptions& options() const noexcept { return options_; }
    const AdamState& state() const noexcept { return state_; }
    AdamState& state() noexcept { return state_; }

private:
    LearningRateSchedule schedule_;
    AdamOptions options_;
    AdamState state_;
};

}  // namespace conerf::ad
