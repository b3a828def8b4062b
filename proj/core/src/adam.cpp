// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#include "conerf/adam.hpp"

#include <algorithm>
#include <cmath>

#include "conerf/error.hpp"

namespace conerf::ad {

double LearningRateSchedule::at(std::int64_t step) const {
    if (initial == 0.0) return 0.0;
    if (total_steps <= 0) return final;
    const double progress = std::clamp(static_cast<double>(step) / static_cast<double>(total_steps), 0.0, 1.0);
    return initial * std::pow(final / initial, progress);
}

Adam::Adam(LearningRateSchedule schedule, AdamOptions options) : schedule_(schedule), options_(options) {
    require(schedule_.initial >= 0 && schedule_.final >= 0, "learning rates must be non-negative");
    require(schedule_.initial > 0 || schedule_.final == 0, "decay from a zero learning rate is undefined");
}

void Adam::step(std::span<Parameter* const> params, const GradientMap& grads) {
    const double lr = schedule_.at(state_.step);
    state_.step += 1;
    const double t = static_cast<double>(state_.step);
    const double correction1 = 1.0 - std::pow(options_.beta1, t);
    const double correction2 = 1.0 - std::pow(options_.beta2, t);
    for (Parameter* p : params) {
        const Tensor* g = grads.find(*p);
        if (g != nullptr) require(g->same_shape(p->value), "gradient shape mismatch for '" + p->name + "'");
        auto [m_it, m_new] = state_.first_moment.try_emplace(p->name, p->value.shape(), 0.0);
        auto [v_it, v_new] = state_.second_moment.try_emplace(p->name, p->value.shape(), 0.0);
        Tensor& m = m_it->second;
        Tensor& v = v_it->second;
        require(m.same_shape(p->value) && v.same_shape(p->value), "optimizer state shape mismatch for '" + p->name + "'");
        for (Index i = 0; i < p->value.size(); ++i) {
            const double gi = g != nullptr ? (*g)[i] : 0.0;
            m[i] = options_.beta1 * m[i] + (1.0 - options_.beta1) * gi;
            v[i] = options_.beta2 * v[i] + (1.0 - options_.beta2) * gi * gi;
            const double m_hat = m[i] / correction1;
            const double v_hat = v[i] / correction2;
            p->value[i] -= lr * m_hat / (std::sqrt(v_hat) + options_.epsilon);
        }
    }
}

}  // namespace conerf::ad
