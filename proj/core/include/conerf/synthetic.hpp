// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "conerf/dataset.hpp"

namespace conerf {

/// A disk (2D, centre in image-plane coordinates) or sphere (3D, world
/// units) whose colour is driven by one attribute: alpha = -1 gives
/// `color_low`, +1 gives `color_high`.
struct SyntheticObject {
    std::string attribute;
    std::array<double, 3> center{};
    double radius = 0.25;
    std::array<double, 3> color_low{};
    std::array<double, 3> color_high{};
};

struct SyntheticSceneSpec {
    FieldMode mode = FieldMode::k2D;
    int width = 64;
    int height = 64;
    int train_frames = 200;
    int test_frames = 100;
    double annotation_fraction = 0.05;
    std::uint64_t seed = 0;
    std::vector<SyntheticObject> objects;
    std::array<double, 3> background{1.0, 1.0, 1.0};

    // Train split: every attribute follows sin(2 pi cycles t + phase). Test
    // split: attribute a follows its own cycle count and phase.
    double train_cycles = 2.0;
    double train_phase = 0.0;
    std::vector<double> test_cycles{1.0, 3.0, 5.0};
    std::vector<double> test_phases{1.3, 0.4, 2.6};

    int supersample = 4;  // 2D anti-aliasing, per axis

    // 3D only: circular orbit for train, a raised orbit with offset azimuth for test.
    double orbit_radius = 4.0;
    double train_elevation = 20.0;
    double test_elevation = 35.0;
    double test_azimuth_offset = 17.0;
    double fov = 40.0;
    double near = 2.0;
    double far = 6.0;
    double density = 60.0;   // peak density inside a sphere
    double softness = 0.02;  // falloff width of the sphere boundary
    int samples_per_ray = 512;

    /// Three objects laid out for `mode`.
    static SyntheticSceneSpec defaults(FieldMode mode);
    void validate() const;
    /// Attribute values of every object at frame `i` of a split with `count` frames.
    std::vector<double> train_attributes(int i) const;
    std::vector<double> test_attributes(int i) const;
};

std::string synthetic_spec_to_json(const SyntheticSceneSpec& spec);
/// Fields missing from `text` keep their defaults for the given mode.
SyntheticSceneSpec synthetic_spec_from_json(const std::string& text);

struct SyntheticDataset {
    Dataset train;
    Dataset test;
};

/// Renders both splits in memory with paths laid out as frames/NNNNN.png and
/// masks/NNNNN_<attribute>.png.
SyntheticDataset generate_synthetic(const SyntheticSceneSpec& spec);

/// Ground-truth render of the analytic scene for one frame.
Frame render_synthetic_frame(const SyntheticSceneSpec& spec, const std::vector<double>& attributes,
                             const std::optional<Camera>& camera);

}  // namespace conerf
