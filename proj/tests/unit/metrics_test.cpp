// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include <gtest/gtest.h>

#include "conerf/error.hpp"
#include "conerf/metrics.hpp"
#include "fixtures.hpp"

namespace conerf {
namespace {

Image pattern(int w, int h, bool perturbed) {
    Image img(w, h, 3);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double v = 0.5 + 0.4 * std::sin(0.1 * x + 0.07 * y + c);
                if (perturbed) v = std::clamp(v + 0.1 * std::cos(0.3 * x - 0.2 * y + 2 * c), 0.0, 1.0);
                img.at(x, y, c) = v;
            }
    return img;
}

TEST(Psnr, IdenticalImagesHitCap) {
    const Image a = pattern(8, 8, false);
    EXPECT_EQ(psnr(a, a), kPsnrCap);
}

TEST(Psnr, KnownError) {
    Image a(4, 4, 3, 0.5);
    Image b(4, 4, 3, 0.6);
    EXPECT_NEAR(mse(a, b), 0.01, 1e-15);
    EXPECT_NEAR(psnr(a, b), 20.0, 1e-9);
    EXPECT_THROW(psnr(a, Image(3, 4, 3)), ContractViolation);
}

TEST(MsSsim, IdenticalImagesScoreOne) {
    const Image a = pattern(64, 64, false);
    EXPECT_NEAR(ms_ssim(a, a), 1.0, 1e-12);
}

TEST(MsSsim, ScaleCount) {
    EXPECT_EQ(max_ms_ssim_scales(10, 200), 0);
    EXPECT_EQ(max_ms_ssim_scales(11, 11), 1);
    EXPECT_EQ(max_ms_ssim_scales(64, 64), 3);
    EXPECT_EQ(max_ms_ssim_scales(176, 300), 5);
    EXPECT_THROW(ms_ssim(pattern(64, 64, false), pattern(64, 64, true), 4), ContractViolation);
    EXPECT_THROW(ms_ssim(pattern(8, 8, false), pattern(8, 8, true)), ContractViolation);
}

TEST(MsSsim, ConstantBlackVersusWhite) {
    // Only the coarsest luminance term differs from one: C1 / (1 + C1),
    // raised to the renormalized weight of the last scale.
    const Image black(64, 64, 3, 0.0);
    const Image white(64, 64, 3, 1.0);
    const double c1 = 1e-4;
    const double w_last = kMsSsimWeights[2] / (kMsSsimWeights[0] + kMsSsimWeights[1] + kMsSsimWeights[2]);
    EXPECT_NEAR(ms_ssim(black, white), std::pow(c1 / (1.0 + c1), w_last), 1e-12);
    EXPECT_LT(ms_ssim(black, white), 0.02);
}

TEST(MsSsim, MatchesReferenceImplementation) {
    // pytorch_msssim on the same images in float64, with a float64 window and
    // the five scale weights divided by their sum.
    EXPECT_NEAR(ms_ssim(pattern(192, 192, false), pattern(192, 192, true)), 0.9030611357770733, 1e-12);
}

TEST(MaskIou, HalfOverlappingRectangles) {
    Image a(8, 4, 1);
    Image b(8, 4, 1);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) {
            a.at(x, y, 0) = 1.0;
            b.at(x + 2, y, 0) = 1.0;
        }
    EXPECT_NEAR(mask_iou(a, b), 1.0 / 3.0, 1e-15);
    EXPECT_EQ(mask_iou(a, a), 1.0);
    EXPECT_EQ(mask_iou(Image(8, 4, 1), Image(8, 4, 1)), 1.0);
    EXPECT_EQ(mask_iou(a, Image(8, 4, 1)), 0.0);
}

TEST(Protocols, NearestTrainingFrame) {
    EXPECT_EQ(nearest_training_frame(0, 100, 200), 0);
    EXPECT_EQ(nearest_training_frame(99, 100, 200), 199);
    EXPECT_EQ(nearest_training_frame(50, 100, 200), 101);
    EXPECT_EQ(nearest_training_frame(0, 1, 5), 0);
    EXPECT_THROW(nearest_training_frame(3, 3, 5), ContractViolation);
}

TEST(Protocols, CsvLayout) {
    const std::vector<ProtocolResult> rows{{"attribute", 10, 30.5, 0.95, 0.8},
                                           {"reconstruction", 4, 40.0, 0.99, std::nan("")}};
    const std::string csv = metrics_csv(rows);
    EXPECT_EQ(csv.rfind("protocol,frames,psnr,ms_ssim,mask_iou\n", 0), 0u);
    EXPECT_NE(csv.find("attribute,10,30.5"), std::string::npos);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST(Protocols, RunOnUntrainedModel) {
    const SyntheticDataset data = generate_synthetic(testing::tiny_spec(FieldMode::k2D, 12, 6, 3));
    const ConerfModel model(testing::tiny_model(data.train), 3);
    EvaluationOptions options;
    const ProtocolResult a = evaluate_attributes(model, data.train, data.test, options);
    EXPECT_EQ(a.protocol, "attribute");
    EXPECT_EQ(a.frames, 3);
    EXPECT_TRUE(std::isfinite(a.psnr));
    EXPECT_GE(a.mask_iou, 0.0);
    EXPECT_EQ(evaluate_reconstruction(model, data.train, options).frames, 6);
    EXPECT_EQ(evaluate_interpolation(model, data.train, options).frames, 2);
    options.max_frames = 2;
    EXPECT_EQ(evaluate_reconstruction(model, data.train, options).frames, 2);
}

TEST(Protocols, RegressorRecoversAffineCodes) {
    SyntheticSceneSpec spec = testing::tiny_spec(FieldMode::k2D, 8, 12, 2);
    spec.annotation_fraction = 1.0;
    const SyntheticDataset data = generate_synthetic(spec);
    ConerfModel model(testing::tiny_model(data.train), 4);
    // Latent codes that are an exact affine function of the annotated attribute values.
    ad::Tensor& codes = model.latent_codes().value;
    for (int f = 0; f < data.train.num_frames(); ++f) {
        const std::vector<double>& a = data.train.frames[static_cast<std::size_t>(f)].attributes;
        for (ad::Index k = 0; k < codes.cols(); ++k) codes(f, k) = 0.1 * k + (k % 3 == 0 ? a[0] : -0.5 * a[0]);
    }
    const AttributeRegressor reg = fit_attribute_regressor(model, data.train);
    EXPECT_EQ(reg.weights.rows(), 4);
    const std::vector<double> predicted = reg.latent(std::vector<double>{0.3, 0.3, 0.3});
    for (std::size_t k = 0; k < predicted.size(); ++k) {
        const double expected = 0.1 * static_cast<double>(k) + (k % 3 == 0 ? 0.3 : -0.15);
        EXPECT_NEAR(predicted[k], expected, 1e-9);
    }
}

}  // namespace
}  // namespace conerf
