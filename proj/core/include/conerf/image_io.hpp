// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace conerf {

/// Row-major, interleaved image with values in [0, 1].
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<double> pixels;

    Image() = default;
    Image(int w, int h, int c, double fill = 0.0);

    double& at(int x, int y, int c) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    double at(int x, int y, int c) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
    bool empty() const { return pixels.empty(); }
};

/// Decodes to 8-bit RGB (channels == 3) or gray (channels == 1), scaled to [0, 1].
Image read_png(const std::filesystem::path& path, int channels);
void write_png(const std::filesystem::path& path, const Image& image);
std::vector<std::uint8_t> encode_png(const Image& image);

/// Rounds to the nearest 8-bit level, as a PNG round trip would.
Image quantize(const Image& image);

/// Single channel image that holds 1 where `image` >= threshold.
Image binarize(const Image& image, double threshold = 0.5);

}  // namespace conerf
