// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#include "conerf/metrics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "conerf/error.hpp"

namespace conerf {

namespace {

void require_same_shape(const Image& a, const Image& b) {
    require(a.width == b.width && a.height == b.height && a.channels == b.channels, "image shape mismatch");
    require(!a.empty(), "metric of an empty image");
}

}  // namespace

double mse(const Image& a, const Image& b) {
    require_same_shape(a, b);
    double sum = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        const double d = a.pixels[i] - b.pixels[i];
        sum += d * d;
    }
    return sum / static_cast<double>(a.pixels.size());
}

double psnr(const Image& a, const Image& b) {
    const double e = mse(a, b);
    if (e < 1e-10) return kPsnrCap;
    return std::min(kPsnrCap, -10.0 * std::log10(e));
}

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

using Plane = Eigen::MatrixXd;  // rows = y

std::array<double, kWindow> gaussian_window() {
    std::array<double, kWindow> g{};
    double sum = 0.0;
    for (int i = 0; i < kWindow; ++i) {
        const double d = i - kWindow / 2;
        g[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * kSigma * kSigma));
        sum += g[static_cast<std::size_t>(i)];
    }
    for (double& v : g) v /= sum;
    return g;
}

// Separable 'valid' Gaussian filter.
Plane filter(const Plane& p) {
    static const std::array<double, kWindow> g = gaussian_window();
    const Eigen::Index rows = p.rows() - kWindow + 1;
    const Eigen::Index cols = p.cols() - kWindow + 1;
    Plane horizontal = Plane::Zero(p.rows(), cols);
    for (int k = 0; k < kWindow; ++k) horizontal += g[static_cast<std::size_t>(k)] * p.middleCols(k, cols);
    Plane out = Plane::Zero(rows, cols);
    for (int k = 0; k < kWindow; ++k) out += g[static_cast<std::size_t>(k)] * horizontal.middleRows(k, rows);
    return out;
}

// 2x2 average pooling; odd extents get one zero pad on each side, counted in the mean.
Plane downsample(const Plane& p) {
    const Eigen::Index pr = p.rows() % 2;
    const Eigen::Index pc = p.cols() % 2;
    Plane padded = Plane::Zero(p.rows() + 2 * pr, p.cols() + 2 * pc);
    padded.block(pr, pc, p.rows(), p.cols()) = p;
    const Eigen::Index rows = padded.rows() / 2;
    const Eigen::Index cols = padded.cols() / 2;
    Plane out(rows, cols);
    for (Eigen::Index y = 0; y < rows; ++y) {
        for (Eigen::Index x = 0; x < cols; ++x) {
            out(y, x) = 0.25 * (padded(2 * y, 2 * x) + padded(2 * y + 1, 2 * x) + padded(2 * y, 2 * x + 1) +
                                padded(2 * y + 1, 2 * x + 1));
        }
    }
    return out;
}

struct SsimTerms {
    double ssim;
    double cs;
};

SsimTerms ssim_terms(const Plane& x, const Plane& y) {
    const Plane mu_x = filter(x);
    const Plane mu_y = filter(y);
    const Plane sxx = filter(x.cwiseProduct(x)) - mu_x.cwiseProduct(mu_x);
    const Plane syy = filter(y.cwiseProduct(y)) - mu_y.cwiseProduct(mu_y);
    const Plane sxy = filter(x.cwiseProduct(y)) - mu_x.cwiseProduct(mu_y);
    const Plane cs = (2.0 * sxy.array() + kC2) / (sxx.array() + syy.array() + kC2);
    const Plane luminance =
        (2.0 * mu_x.cwiseProduct(mu_y).array() + kC1) / (mu_x.array().square() + mu_y.array().square() + kC1);
    return {luminance.cwiseProduct(cs).mean(), cs.mean()};
}

Plane channel_plane(const Image& image, int c) {
    Plane p(image.height, image.width);
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x) p(y, x) = image.at(x, y, c);
    return p;
}

}  // namespace

int max_ms_ssim_scales(int width, int height) {
    const int side = std::min(width, height);
    int scales = 0;
    while (scales < 5 && side >= kWindow * (1 << scales)) ++scales;
    return scales;
}

double ms_ssim(const Image& a, const Image& b, std::optional<int> scales) {
    require_same_shape(a, b);
    const int fit = max_ms_ssim_scales(a.width, a.height);
    const int count = scales.value_or(fit);
    require(count >= 1 && count <= 5, "MS-SSIM supports 1 to 5 scales");
    require(count <= fit, "image too small for " + std::to_string(count) + " MS-SSIM scales (needs a side of " +
                              std::to_string(kWindow * (1 << (count - 1))) + " px)");
    double weight_sum = 0.0;
    for (int s = 0; s < count; ++s) weight_sum += kMsSsimWeights[static_cast<std::size_t>(s)];
    double total = 0.0;
    for (int c = 0; c < a.channels; ++c) {
        Plane x = channel_plane(a, c);
        Plane y = channel_plane(b, c);
        double score = 1.0;
        for (int s = 0; s < count; ++s) {
            const SsimTerms t = ssim_terms(x, y);
            const double w = kMsSsimWeights[static_cast<std::size_t>(s)] / weight_sum;
            const double factor = s + 1 == count ? t.ssim : t.cs;
            score *= std::pow(std::max(factor, 0.0), w);
            if (s + 1 < count) {
                x = downsample(x);
                y = downsample(y);
            }
        }
        total += score;
    }
    return total / a.channels;
}

double mask_iou(const Image& predicted, const Image& truth, double threshold) {
    require(predicted.width == truth.width && predicted.height == truth.height, "mask shape mismatch");
    std::size_t intersection = 0;
    std::size_t uni = 0;
    for (std::size_t i = 0; i < predicted.pixel_count(); ++i) {
        const bool p = predicted.pixels[i * predicted.channels] >= threshold;
        const bool t = truth.pixels[i * truth.channels] >= threshold;
        intersection += (p && t) ? 1 : 0;
        uni += (p || t) ? 1 : 0;
    }
    return uni == 0 ? 1.0 : static_cast<double>(intersection) / static_cast<double>(uni);
}

std::vector<double> AttributeRegressor::latent(std::span<const double> attributes) const {
    require(static_cast<Eigen::Index>(attributes.size()) + 1 == weights.rows(), "regressor attribute count mismatch");
    Eigen::RowVectorXd x(weights.rows());
    for (std::size_t a = 0; a < attributes.size(); ++a) x(static_cast<Eigen::Index>(a)) = attributes[a];
    x(x.size() - 1) = 1.0;
    const Eigen::RowVectorXd beta = x * weights;
    return std::vector<double>(beta.data(), beta.data() + beta.size());
}

AttributeRegressor fit_attribute_regressor(const ConerfModel& model, const Dataset& train) {
    const int attributes = train.num_attributes();
    const int latent = model.config().latent_dim;
    const std::vector<int> rows = train.annotated_frames();
    if (rows.empty()) throw DataError("the attribute regressor needs annotated training frames");
    std::vector<double> mean(static_cast<std::size_t>(attributes), 0.0);
    std::vector<int> seen(static_cast<std::size_t>(attributes), 0);
    for (int f : rows) {
        for (int a = 0; a < attributes; ++a) {
            const auto& ann = train.frames[static_cast<std::size_t>(f)].annotations[static_cast<std::size_t>(a)];
            if (ann) {
                mean[static_cast<std::size_t>(a)] += ann->value;
                ++seen[static_cast<std::size_t>(a)];
            }
        }
    }
    for (int a = 0; a < attributes; ++a) {
        if (seen[static_cast<std::size_t>(a)] > 0) mean[static_cast<std::size_t>(a)] /= seen[static_cast<std::size_t>(a)];
    }
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), attributes + 1);
    Eigen::MatrixXd y(static_cast<Eigen::Index>(rows.size()), latent);
    const ad::Tensor& codes = model.latent_codes().value;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const Frame& f = train.frames[static_cast<std::size_t>(rows[r])];
        const auto ri = static_cast<Eigen::Index>(r);
        for (int a = 0; a < attributes; ++a) {
            const auto& ann = f.annotations[static_cast<std::size_t>(a)];
            x(ri, a) = ann ? ann->value : mean[static_cast<std::size_t>(a)];
        }
        x(ri, attributes) = 1.0;
        for (int k = 0; k < latent; ++k) y(ri, k) = codes(rows[r], k);
    }
    AttributeRegressor reg;
    reg.weights = x.completeOrthogonalDecomposition().solve(y);
    return reg;
}

int nearest_training_frame(int test_index, int test_count, int train_count) {
    require(test_index >= 0 && test_index < test_count && train_count > 0, "frame index out of range");
    if (test_count == 1) return 0;
    const double t = static_cast<double>(test_index) * (train_count - 1) / (test_count - 1);
    return static_cast<int>(std::lround(t));
}

Image to_image(const RenderedImage& r) {
    Image image(r.width, r.height, 3);
    image.pixels = r.rgb;
    return image;
}

Image mask_image(const RenderedImage& r, int channel) {
    require(channel >= 0 && channel < static_cast<int>(r.masks.size()), "mask channel out of range");
    Image image(r.width, r.height, 1);
    image.pixels = r.masks[static_cast<std::size_t>(channel)];
    return image;
}

RenderedImage render_frame(const ConerfModel& model, const Dataset& dataset, int frame, const FrameCodes& codes,
                           const RenderSettings& settings) {
    require(frame >= 0 && frame < dataset.num_frames(), "frame out of range");
    if (dataset.mode() == FieldMode::k2D) {
        return render_image_2d(model, dataset.width(), dataset.height(), codes, settings);
    }
    const auto& camera = dataset.frames[static_cast<std::size_t>(frame)].camera;
    require(camera.has_value(), "3D frame without a camera");
    return render_image(model, *camera, codes, settings);
}

namespace {

struct Accumulator {
    std::string protocol;
    int frames = 0;
    double psnr = 0.0;
    double ms_ssim = 0.0;
    double iou = 0.0;
    int iou_count = 0;

    void add(const RenderedImage& rendered, const Frame& truth, double threshold) {
        const Image image = to_image(rendered);
        psnr += conerf::psnr(image, truth.image);
        ms_ssim += conerf::ms_ssim(image, truth.image);
        for (std::size_t a = 0; a < truth.masks.size(); ++a) {
            iou += mask_iou(mask_image(rendered, static_cast<int>(a) + 1), truth.masks[a], threshold);
            ++iou_count;
        }
        ++frames;
    }

    ProtocolResult result() const {
        require(frames > 0, "protocol evaluated no frames");
        return ProtocolResult{protocol, frames, psnr / frames, ms_ssim / frames,
                              iou_count > 0 ? iou / iou_count : std::numeric_limits<double>::quiet_NaN()};
    }
};

int frame_limit(const Dataset& d, const EvaluationOptions& options) {
    return options.max_frames > 0 ? std::min(options.max_frames, d.num_frames()) : d.num_frames();
}

void require_compatible(const ConerfModel& model, const Dataset& d) {
    require(model.config().mode == d.mode(), "model and dataset modes differ");
    require(model.config().num_attributes == d.num_attributes(), "model and dataset attribute counts differ");
}

}  // namespace

ProtocolResult evaluate_attributes(const ConerfModel& model, const Dataset& train, const Dataset& test,
                                   const EvaluationOptions& options) {
    require_compatible(model, test);
    require(test.has_ground_truth_attributes(), "the attribute protocol needs ground-truth attribute values");
    Accumulator acc{"attribute"};
    const int count = frame_limit(test, options);
    for (int i = 0; i < count; ++i) {
        const Frame& f = test.frames[static_cast<std::size_t>(i)];
        const int source = nearest_training_frame(i, test.num_frames(), train.num_frames());
        const FrameCodes codes = frame_codes(model, source, f.attributes);
        acc.add(render_frame(model, test, i, codes, options.settings), f, options.mask_threshold);
    }
    return acc.result();
}

ProtocolResult evaluate_reconstruction(const ConerfModel& model, const Dataset& train,
                                       const EvaluationOptions& options) {
    require_compatible(model, train);
    Accumulator acc{"reconstruction"};
    const int count = frame_limit(train, options);
    for (int i = 0; i < count; ++i) {
        acc.add(render_frame(model, train, i, frame_codes(model, i), options.settings),
                train.frames[static_cast<std::size_t>(i)], options.mask_threshold);
    }
    return acc.result();
}

ProtocolResult evaluate_interpolation(const ConerfModel& model, const Dataset& train,
                                      const EvaluationOptions& options) {
    require_compatible(model, train);
    require(train.num_frames() >= 3, "interpolation needs at least three frames");
    Accumulator acc{"interpolation"};
    const int count = frame_limit(train, options);
    for (int i = 1; i + 1 < train.num_frames() && i < count; i += 2) {
        const FrameCodes before = frame_codes(model, i - 1);
        const FrameCodes after = frame_codes(model, i + 1);
        FrameCodes codes = before;
        for (std::size_t k = 0; k < codes.latent.size(); ++k) codes.latent[k] = 0.5 * (before.latent[k] + after.latent[k]);
        for (std::size_t k = 0; k < codes.appearance.size(); ++k)
            codes.appearance[k] = 0.5 * (before.appearance[k] + after.appearance[k]);
        acc.add(render_frame(model, train, i, codes, options.settings), train.frames[static_cast<std::size_t>(i)],
                options.mask_threshold);
    }
    return acc.result();
}

ProtocolResult evaluate_regressor(const ConerfModel& model, const AttributeRegressor& regressor,
                                  const Dataset& test, const EvaluationOptions& options) {
    require_compatible(model, test);
    require(test.has_ground_truth_attributes(), "the regressor protocol needs ground-truth attribute values");
    Accumulator acc{"regressor"};
    const int count = frame_limit(test, options);
    for (int i = 0; i < count; ++i) {
        const Frame& f = test.frames[static_cast<std::size_t>(i)];
        FrameCodes codes;
        codes.latent = regressor.latent(f.attributes);
        acc.add(render_frame(model, test, i, codes, options.settings), f, options.mask_threshold);
    }
    return acc.result();
}

std::string metrics_csv(const std::vector<ProtocolResult>& rows) {
    std::ostringstream out;
    out.precision(10);
    out << "protocol,frames,psnr,ms_ssim,mask_iou\n";
    for (const ProtocolResult& r : rows) {
        out << r.protocol << ',' << r.frames << ',' << r.psnr << ',' << r.ms_ssim << ',';
        if (!std::isnan(r.mask_iou)) out << r.mask_iou;
        out << '\n';
    }
    return out.str();
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<ProtocolResult>& rows) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << metrics_csv(rows);
}

}  // namespace conerf
