// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#include "conerf/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>

#include "conerf/error.hpp"

namespace conerf {

Image::Image(int w, int h, int c, double fill)
    : width(w), height(h), channels(c), pixels(static_cast<std::size_t>(w) * h * c, fill) {
    require(w >= 0 && h >= 0 && c >= 0, "image extents must be non-negative");
}

namespace {

std::uint8_t to_byte(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

png_image describe(const Image& image) {
    require(image.channels == 1 || image.channels == 3, "PNG output supports gray or RGB images");
    require(image.width > 0 && image.height > 0, "cannot encode an empty image");
    require(image.pixels.size() == image.pixel_count() * image.channels, "image buffer does not match its extents");
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(image.width);
    png.height = static_cast<png_uint_32>(image.height);
    png.format = image.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    return png;
}

std::vector<std::uint8_t> to_bytes(const Image& image) {
    std::vector<std::uint8_t> bytes(image.pixels.size());
    std::transform(image.pixels.begin(), image.pixels.end(), bytes.begin(), to_byte);
    return bytes;
}

}  // namespace

Image read_png(const std::filesystem::path& path, int channels) {
    require(channels == 1 || channels == 3, "read_png supports 1 or 3 channels");
    if (!std::filesystem::exists(path)) throw DataError("missing file: " + path.string());
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&png, path.c_str())) {
        throw DataError("cannot decode PNG " + path.string() + ": " + png.message);
    }
    png.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    std::vector<std::uint8_t> bytes(PNG_IMAGE_SIZE(png));
    if (!png_image_finish_read(&png, nullptr, bytes.data(), 0, nullptr)) {
        png_image_free(&png);
        throw DataError("cannot decode PNG " + path.string() + ": " + png.message);
    }
    Image image(static_cast<int>(png.width), static_cast<int>(png.height), channels);
    std::transform(bytes.begin(), bytes.end(), image.pixels.begin(), [](std::uint8_t b) { return b / 255.0; });
    return image;
}

void write_png(const std::filesystem::path& path, const Image& image) {
    png_image png = describe(image);
    const std::vector<std::uint8_t> bytes = to_bytes(image);
    if (!png_image_write_to_file(&png, path.c_str(), 0, bytes.data(), 0, nullptr)) {
        throw DataError("cannot write PNG " + path.string() + ": " + png.message);
    }
}

std::vector<std::uint8_t> encode_png(const Image& image) {
    png_image png = describe(image);
    const std::vector<std::uint8_t> bytes = to_bytes(image);
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&png, nullptr, &size, 0, bytes.data(), 0, nullptr)) {
        throw DataError(std::string("cannot encode PNG: ") + png.message);
    }
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&png, out.data(), &size, 0, bytes.data(), 0, nullptr)) {
        throw DataError(std::string("cannot encode PNG: ") + png.message);
    }
    out.resize(size);
    return out;
}

Image quantize(const Image& image) {
    Image out = image;
    for (double& v : out.pixels) v = to_byte(v) / 255.0;
    return out;
}

Image binarize(const Image& image, double threshold) {
    Image out(image.width, image.height, 1);
    for (std::size_t i = 0; i < image.pixel_count(); ++i) {
        out.pixels[i] = image.pixels[i * image.channels] >= threshold ? 1.0 : 0.0;
    }
    return out;
}

}  // namespace conerf
