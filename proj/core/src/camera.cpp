// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#include "conerf/camera.hpp"

#include <cmath>
#include <json.hpp>
#include <numbers>

#include "conerf/error.hpp"

namespace conerf {

using nlohmann::json;

void Camera::validate() const {
    require(fx > 0 && fy > 0, "camera focal lengths must be positive");
    require(width > 0 && height > 0, "camera image extents must be positive");
    require(near < far, "camera near plane must lie before the far plane");
}

Camera Camera::orbit(double azimuth_deg, double elevation_deg, double radius, int width, int height, double fov_deg,
                     double near, double far) {
    const double az = azimuth_deg * std::numbers::pi / 180.0;
    const double el = elevation_deg * std::numbers::pi / 180.0;
    Camera cam;
    cam.width = width;
    cam.height = height;
    cam.fx = cam.fy = 0.5 * width / std::tan(0.5 * fov_deg * std::numbers::pi / 180.0);
    cam.cx = 0.5 * width;
    cam.cy = 0.5 * height;
    cam.position = radius * Eigen::Vector3d(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
    const Eigen::Vector3d forward = (-cam.position).normalized();
    Eigen::Vector3d right = forward.cross(Eigen::Vector3d::UnitZ());
    if (right.norm() < 1e-9) right = Eigen::Vector3d::UnitX();
    right.normalize();
    const Eigen::Vector3d down = forward.cross(right);
    cam.rotation.col(0) = right;
    cam.rotation.col(1) = down;
    cam.rotation.col(2) = forward;
    cam.near = near;
    cam.far = far;
    cam.validate();
    return cam;
}

Camera Camera::resized(int new_width, int new_height) const {
    Camera cam = *this;
    const double sx = static_cast<double>(new_width) / width;
    const double sy = static_cast<double>(new_height) / height;
    cam.width = new_width;
    cam.height = new_height;
    cam.fx *= sx;
    cam.cx *= sx;
    cam.fy *= sy;
    cam.cy *= sy;
    return cam;
}

Ray generate_ray(const Camera& camera, PixelCoord pixel) {
    const Eigen::Vector3d local((pixel.x + 0.5 - camera.cx) / camera.fx, (pixel.y + 0.5 - camera.cy) / camera.fy, 1.0);
    Ray ray;
    ray.origin = camera.position;
    ray.direction = (camera.rotation * local).normalized();
    ray.near = camera.near;
    ray.far = camera.far;
    return ray;
}

std::vector<Ray> generate_rays(const Camera& camera, std::span<const PixelCoord> pixels) {
    camera.validate();
    std::vector<Ray> rays;
    rays.reserve(pixels.size());
    for (PixelCoord p : pixels) {
        require(p.x >= 0 && p.x < camera.width && p.y >= 0 && p.y < camera.height, "pixel outside the image");
        rays.push_back(generate_ray(camera, p));
    }
    return rays;
}

std::array<double, 2> pixel_to_plane(PixelCoord pixel, int width, int height) {
    return {2.0 * (pixel.x + 0.5) / width - 1.0, 2.0 * (pixel.y + 0.5) / height - 1.0};
}

std::string camera_to_json(const Camera& c) {
    const Eigen::Quaterniond q(c.rotation);
    json j{{"fx", c.fx},
           {"fy", c.fy},
           {"cx", c.cx},
           {"cy", c.cy},
           {"width", c.width},
           {"height", c.height},
           {"rotation", {q.w(), q.x(), q.y(), q.z()}},
           {"position", {c.position.x(), c.position.y(), c.position.z()}},
           {"near", c.near},
           {"far", c.far}};
    return j.dump();
}

Camera camera_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        Camera c;
        if (j.contains("orbit")) {
            const json& o = j.at("orbit");
            return Camera::orbit(o.at("azimuth").get<double>(), o.at("elevation").get<double>(),
                                 o.at("radius").get<double>(), j.at("width").get<int>(), j.at("height").get<int>(),
                                 o.value("fov", 40.0), j.value("near", 0.5), j.value("far", 6.0));
        }
        c.fx = j.at("fx").get<double>();
        c.fy = j.at("fy").get<double>();
        c.cx = j.at("cx").get<double>();
        c.cy = j.at("cy").get<double>();
        c.width = j.at("width").get<int>();
        c.height = j.at("height").get<int>();
        const auto q = j.at("rotation").get<std::vector<double>>();
        const auto p = j.at("position").get<std::vector<double>>();
        if (q.size() != 4 || p.size() != 3) throw DataError("camera rotation must be wxyz and position xyz");
        c.rotation = Eigen::Quaterniond(q[0], q[1], q[2], q[3]).normalized().toRotationMatrix();
        c.position = Eigen::Vector3d(p[0], p[1], p[2]);
        c.near = j.at("near").get<double>();
        c.far = j.at("far").get<double>();
        if (!(c.fx > 0 && c.fy > 0 && c.width > 0 && c.height > 0 && c.near < c.far))
            throw DataError("camera record violates pinhole invariants");
        return c;
    } catch (const json::exception& e) {
        throw DataError(std::string("invalid camera record: ") + e.what());
    }
}

}  // namespace conerf
