// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include <gtest/gtest.h>

#include "conerf/adam.hpp"
#include "conerf/error.hpp"
#include "conerf/ops.hpp"

namespace conerf::ad {
namespace {

GradientMap gradient_of(Parameter& p, double scale) {
    Tape tape;
    Var loss = ::conerf::ad::scale(sum(square(tape.leaf(p))), scale);
    return tape.backward(loss);
}

TEST(Adam, ZeroLearningRateIsIdentity) {
    Parameter p{"p", Tensor::row({0.3, -1.2, 4.0})};
    const Tensor before = p.value;
    Adam adam({0.0, 0.0, 100});
    std::vector<Parameter*> params{&p};
    for (int i = 0; i < 10; ++i) adam.step(params, gradient_of(p, 1.0 + i));
    for (Index i = 0; i < p.value.size(); ++i) EXPECT_EQ(p.value[i], before[i]);
    EXPECT_EQ(adam.state().step, 10);
}

TEST(Adam, FirstStepMovesByLearningRate) {
    Parameter p{"p", Tensor::row({0.5, -2.0})};
    Adam adam({0.01, 0.01, 10});
    std::vector<Parameter*> params{&p};
    adam.step(params, gradient_of(p, 1.0));
    EXPECT_NEAR(p.value[0], 0.5 - 0.01, 1e-9);
    EXPECT_NEAR(p.value[1], -2.0 + 0.01, 1e-9);
}

TEST(Adam, MatchesReferenceRecurrence) {
    Parameter p{"p", Tensor::scalar(1.0)};
    const LearningRateSchedule schedule{0.1, 0.01, 20};
    Adam adam(schedule);
    std::vector<Parameter*> params{&p};
    double x = 1.0, m = 0.0, v = 0.0;
    for (int t = 1; t <= 20; ++t) {
        const double g = 2.0 * x;
        m = 0.9 * m + 0.1 * g;
        v = 0.999 * v + 0.001 * g * g;
        const double lr = 0.1 * std::pow(0.1, (t - 1) / 20.0);
        x -= lr * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
        adam.step(params, gradient_of(p, 1.0));
        EXPECT_NEAR(p.value.item(), x, 1e-12) << "step " << t;
    }
}

TEST(Adam, ScheduleDecaysExponentially) {
    const LearningRateSchedule s{1e-4, 1e-5, 250000};
    EXPECT_DOUBLE_EQ(s.at(0), 1e-4);
    EXPECT_NEAR(s.at(125000), std::sqrt(1e-9), 1e-18);
    EXPECT_NEAR(s.at(250000), 1e-5, 1e-18);
    EXPECT_NEAR(s.at(900000), 1e-5, 1e-18);
}

TEST(Adam, MissingGradientIsZero) {
    Parameter a{"a", Tensor::scalar(1.0)};
    Parameter b{"b", Tensor::scalar(2.0)};
    Adam adam({0.1, 0.1, 10});
    std::vector<Parameter*> params{&a, &b};
    adam.step(params, gradient_of(a, 1.0));
    EXPECT_EQ(b.value.item(), 2.0);
    EXPECT_LT(a.value.item(), 1.0);
}

TEST(Adam, Deterministic) {
    auto run = [] {
        Parameter p{"p", Tensor::row({0.1, 0.2, 0.3})};
        Adam adam({0.05, 0.001, 30});
        std::vector<Parameter*> params{&p};
        for (int i = 0; i < 30; ++i) adam.step(params, gradient_of(p, 0.5));
        return p.value;
    };
    const Tensor a = run();
    const Tensor b = run();
    for (Index i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(Adam, RejectsBadSchedules) {
    EXPECT_THROW(Adam({-1.0, 0.0, 1}), ContractViolation);
    EXPECT_THROW(Adam({0.0, 1e-3, 1}), ContractViolation);
}

}  // namespace
}  // namespace conerf::ad
