// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "conerf/encoding.hpp"
#include "conerf/error.hpp"
#include "conerf/model.hpp"

namespace conerf {
namespace {

TEST(Encoding, LayoutIsIdentityThenSinCosPerBand) {
    const EncodingSpec spec{3, true, {}};
    const std::vector<double> x{0.25, -0.5};
    const std::vector<double> e = positional_encode(x, spec, 3.0);
    ASSERT_EQ(static_cast<int>(e.size()), spec.output_width(2));
    EXPECT_EQ(e.size(), 14u);
    EXPECT_DOUBLE_EQ(e[0], 0.25);
    EXPECT_DOUBLE_EQ(e[1], -0.5);
    for (int k = 0; k < 3; ++k) {
        const double f = std::pow(2.0, k) * std::numbers::pi;
        EXPECT_NEAR(e[2 + 4 * k + 0], std::sin(f * 0.25), 1e-15);
        EXPECT_NEAR(e[2 + 4 * k + 1], std::sin(f * -0.5), 1e-15);
        EXPECT_NEAR(e[2 + 4 * k + 2], std::cos(f * 0.25), 1e-15);
        EXPECT_NEAR(e[2 + 4 * k + 3], std::cos(f * -0.5), 1e-15);
    }
}

TEST(Encoding, WithoutIdentity) {
    const EncodingSpec spec{1, false, {}};
    const std::vector<double> e = positional_encode(std::vector<double>{0.5}, spec, 1.0);
    ASSERT_EQ(e.size(), 2u);
    EXPECT_NEAR(e[0], 1.0, 1e-15);
    EXPECT_NEAR(e[1], 0.0, 1e-15);
}

TEST(Encoding, WindowWeight) {
    EXPECT_DOUBLE_EQ(window_weight(0.0, 0), 0.0);
    EXPECT_DOUBLE_EQ(window_weight(1.0, 0), 1.0);
    EXPECT_DOUBLE_EQ(window_weight(2.5, 2), 0.5);
    EXPECT_DOUBLE_EQ(window_weight(2.5, 3), 0.0);
    EXPECT_DOUBLE_EQ(window_weight(9.0, 3), 1.0);
}

TEST(Encoding, ClosedWindowKeepsOnlyIdentity) {
    const EncodingSpec spec{4, true, {}};
    const std::vector<double> e = positional_encode(std::vector<double>{0.3, 0.7}, spec, 0.0);
    EXPECT_DOUBLE_EQ(e[0], 0.3);
    EXPECT_DOUBLE_EQ(e[1], 0.7);
    for (std::size_t i = 2; i < e.size(); ++i) EXPECT_EQ(e[i], 0.0);
}

TEST(Encoding, ScheduleRampsLinearly) {
    const EncodingSpec spec{8, true, {1000.0, 4000.0}};
    EXPECT_DOUBLE_EQ(schedule_alpha(0, spec), 0.0);
    EXPECT_DOUBLE_EQ(schedule_alpha(1000, spec), 0.0);
    EXPECT_DOUBLE_EQ(schedule_alpha(3000, spec), 4.0);
    EXPECT_DOUBLE_EQ(schedule_alpha(5000, spec), 8.0);
    EXPECT_DOUBLE_EQ(schedule_alpha(90000, spec), 8.0);
    EXPECT_DOUBLE_EQ(schedule_alpha(0, EncodingSpec{5, true, {}}), 5.0);
    EXPECT_THROW(schedule_alpha(-1, spec), ContractViolation);
}

TEST(Encoding, ScaledStretchesWindow) {
    const EncodingSpec spec = EncodingSpec{8, true, {1000.0, 80000.0}}.scaled(0.01);
    EXPECT_DOUBLE_EQ(spec.window.start, 10.0);
    EXPECT_DOUBLE_EQ(spec.window.duration, 800.0);
}

TEST(Encoding, TapeVersionMatchesScalarVersion) {
    const EncodingSpec spec{3, true, {}};
    ad::Tape tape(ad::Tape::Mode::kInference);
    ad::Var x = tape.constant(ad::Tensor::from_rows({{0.1, 0.2, 0.3}, {-0.4, 0.5, 0.9}}));
    const ad::Tensor& out = positional_encode(x, spec, 1.7).value();
    for (ad::Index r = 0; r < 2; ++r) {
        const std::vector<double> p{x.value()(r, 0), x.value()(r, 1), x.value()(r, 2)};
        const std::vector<double> e = positional_encode(p, spec, 1.7);
        for (ad::Index c = 0; c < out.cols(); ++c) EXPECT_DOUBLE_EQ(out(r, c), e[static_cast<std::size_t>(c)]);
    }
}

TEST(Encoding, RejectsBadSpecs) {
    EXPECT_THROW(positional_encode(std::vector<double>{0.0}, EncodingSpec{0, true, {}}, 1.0), ContractViolation);
    EXPECT_THROW(positional_encode(std::vector<double>{0.0}, EncodingSpec{2, true, {}}, -1.0), ContractViolation);
}

TEST(Encoding, AlphasFollowScaledSchedule) {
    const ModelConfig config = ModelConfig::desk(FieldMode::k2D, 3, 10).with_schedule_scale(0.01);
    const EncodingAlphas start = EncodingAlphas::at_step(config, 0);
    EXPECT_DOUBLE_EQ(start.warp_position, 0.0);
    EXPECT_DOUBLE_EQ(start.code, 0.0);
    const EncodingAlphas late = EncodingAlphas::at_step(config, 100000);
    const EncodingAlphas open = EncodingAlphas::open(config);
    EXPECT_DOUBLE_EQ(late.warp_position, open.warp_position);
    EXPECT_DOUBLE_EQ(late.hyper_position, open.hyper_position);
    EXPECT_DOUBLE_EQ(late.code, open.code);
    EXPECT_DOUBLE_EQ(open.warp_position, config.warp_position.frequencies);
}

}  // namespace
}  // namespace conerf
