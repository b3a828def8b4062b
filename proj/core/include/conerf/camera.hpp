// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <array>
#include <span>
#include <string>
#include <vector>

namespace conerf {

/// Pinhole camera. Camera axes follow the x-right, y-down, z-forward
/// convention; `rotation` maps camera axes to world axes and `position` is the
/// optical centre in world units.
struct Camera {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.5;
    double cy = 0.5;
    int width = 1;
    int height = 1;
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    double near = 0.0;
    double far = 1.0;

    void validate() const;

    /// Camera on a sphere of `radius` around the origin looking at it, world
    /// up = +z. Angles in degrees.
    static Camera orbit(double azimuth_deg, double elevation_deg, double radius, int width, int height,
                        double fov_deg, double near, double far);

    /// Same pose, intrinsics rescaled to a new image size.
    Camera resized(int new_width, int new_height) const;
};

struct Ray {
    Eigen::Vector3d origin = Eigen::Vector3d::Zero();
    Eigen::Vector3d direction = Eigen::Vector3d::UnitZ();
    double near = 0.0;
    double far = 1.0;
};

struct PixelCoord {
    int x = 0;
    int y = 0;
};

/// One ray through each pixel centre, in world space.
std::vector<Ray> generate_rays(const Camera& camera, std::span<const PixelCoord> pixels);
Ray generate_ray(const Camera& camera, PixelCoord pixel);

/// Normalized image-plane coordinate of a pixel centre in [-1, 1]^2 (2D mode).
std::array<double, 2> pixel_to_plane(PixelCoord pixel, int width, int height);

std::string camera_to_json(const Camera& camera);
Camera camera_from_json(const std::string& text);

}  // namespace conerf
