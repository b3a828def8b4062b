// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "conerf/camera.hpp"
#include "conerf/image_io.hpp"
#include "conerf/model.hpp"

namespace conerf {

inline constexpr int kManifestVersion = 1;
inline constexpr const char* kManifestFile = "manifest.json";

struct FrameRecord {
    int index = 0;
    std::string image;                  // relative to the split directory
    std::optional<Camera> camera;       // 3D only
    std::vector<double> attributes;     // ground truth, may be empty
    std::vector<std::string> masks;     // ground-truth mask per attribute, may be empty
};

struct AnnotationRecord {
    int frame = 0;
    std::string attribute;
    double value = 0.0;
    std::string mask;
};

/// One split on disk: `manifest.json` next to `frames/` and `masks/`.
struct DatasetManifest {
    int version = kManifestVersion;
    FieldMode mode = FieldMode::k2D;
    std::string split = "train";
    int width = 0;
    int height = 0;
    std::vector<std::string> attributes;
    std::vector<FrameRecord> frames;
    std::vector<AnnotationRecord> annotations;

    int attribute_index(const std::string& name) const;  // -1 when unknown
};

std::string manifest_to_json(const DatasetManifest& manifest);
/// Structural parse and validation, no file access.
DatasetManifest manifest_from_json(const std::string& text);

struct Annotation {
    double value = 0.0;
    Image mask;  // binary, one channel
};

struct Frame {
    Image image;  // RGB
    std::optional<Camera> camera;
    std::vector<double> attributes;
    std::vector<Image> masks;
    std::vector<std::optional<Annotation>> annotations;  // one slot per attribute

    bool annotated() const;
};

struct Dataset {
    DatasetManifest manifest;
    std::vector<Frame> frames;

    int width() const { return manifest.width; }
    int height() const { return manifest.height; }
    int num_frames() const { return static_cast<int>(frames.size()); }
    int num_attributes() const { return static_cast<int>(manifest.attributes.size()); }
    FieldMode mode() const { return manifest.mode; }
    std::vector<int> annotated_frames() const;
    bool has_ground_truth_attributes() const;
    bool has_ground_truth_masks() const;
};

/// `path` is a split directory or its manifest file. Images are decoded to
/// [0, 1], masks binarized at 0.5.
Dataset load_dataset(const std::filesystem::path& path);

/// Writes images, masks and the manifest under `dir` at the manifest's
/// relative paths.
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);

}  // namespace conerf
