// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#include "conerf/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <json.hpp>

#include "conerf/error.hpp"
#include "conerf/random.hpp"
#include "conerf/rendering.hpp"

namespace conerf {

using nlohmann::json;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::array<double, 3> lerp_color(const SyntheticObject& o, double alpha) {
    const double t = 0.5 * (alpha + 1.0);
    std::array<double, 3> c{};
    for (int k = 0; k < 3; ++k) c[k] = (1.0 - t) * o.color_low[k] + t * o.color_high[k];
    return c;
}

std::string frame_name(int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%05d", i);
    return buf;
}

double phase_position(int i, int count) { return count > 1 ? static_cast<double>(i) / count : 0.0; }

}  // namespace

SyntheticSceneSpec SyntheticSceneSpec::defaults(FieldMode mode) {
    SyntheticSceneSpec s;
    s.mode = mode;
    if (mode == FieldMode::k2D) {
        s.objects = {
            {"left", {-0.45, 0.3, 0.0}, 0.3, {0.85, 0.15, 0.1}, {0.1, 0.2, 0.85}},
            {"right", {0.45, 0.3, 0.0}, 0.3, {0.1, 0.65, 0.2}, {0.9, 0.55, 0.05}},
            {"top", {0.0, -0.45, 0.0}, 0.3, {0.15, 0.15, 0.15}, {0.95, 0.85, 0.2}},
        };
    } else {
        s.objects = {
            {"left", {0.0, -0.9, 0.0}, 0.5, {0.85, 0.15, 0.1}, {0.1, 0.2, 0.85}},
            {"right", {0.0, 0.9, 0.0}, 0.5, {0.1, 0.65, 0.2}, {0.9, 0.55, 0.05}},
            {"top", {0.0, 0.0, 0.85}, 0.45, {0.15, 0.15, 0.15}, {0.95, 0.85, 0.2}},
        };
    }
    return s;
}

void SyntheticSceneSpec::validate() const {
    require(width > 0 && height > 0, "synthetic image extents must be positive");
    require(train_frames > 0 && test_frames > 0, "synthetic splits need at least one frame");
    require(annotation_fraction > 0.0 && annotation_fraction <= 1.0, "annotation fraction must lie in (0, 1]");
    require(!objects.empty(), "synthetic scene needs objects");
    require(test_cycles.size() >= objects.size() && test_phases.size() >= objects.size(),
            "test trajectories must cover every object");
    require(supersample >= 1, "supersample factor must be positive");
    for (const SyntheticObject& o : objects) {
        require(!o.attribute.empty(), "synthetic objects need attribute names");
        require(o.radius > 0.0, "synthetic object radius must be positive");
    }
    if (mode == FieldMode::k3D) {
        require(near < far && orbit_radius > 0.0, "invalid synthetic camera ranges");
        require(samples_per_ray >= 1 && density > 0.0 && softness > 0.0, "invalid synthetic density settings");
    }
}

std::vector<double> SyntheticSceneSpec::train_attributes(int i) const {
    const double v = std::sin(kTwoPi * train_cycles * phase_position(i, train_frames) + train_phase);
    return std::vector<double>(objects.size(), v);
}

std::vector<double> SyntheticSceneSpec::test_attributes(int i) const {
    std::vector<double> out(objects.size());
    for (std::size_t a = 0; a < objects.size(); ++a) {
        out[a] = std::sin(kTwoPi * test_cycles[a] * phase_position(i, test_frames) + test_phases[a]);
    }
    return out;
}

namespace {

json color_json(const std::array<double, 3>& c) { return json::array({c[0], c[1], c[2]}); }

std::array<double, 3> color_from(const json& j) {
    const auto v = j.get<std::vector<double>>();
    if (v.size() != 3) throw DataError("colors and centres need three components");
    return {v[0], v[1], v[2]};
}

}  // namespace

std::string synthetic_spec_to_json(const SyntheticSceneSpec& s) {
    json objects = json::array();
    for (const SyntheticObject& o : s.objects) {
        objects.push_back({{"attribute", o.attribute},
                           {"center", color_json(o.center)},
                           {"radius", o.radius},
                           {"color_low", color_json(o.color_low)},
                           {"color_high", color_json(o.color_high)}});
    }
    json j{{"mode", to_string(s.mode)},
           {"width", s.width},
           {"height", s.height},
           {"train_frames", s.train_frames},
           {"test_frames", s.test_frames},
           {"annotation_fraction", s.annotation_fraction},
           {"seed", s.seed},
           {"objects", objects},
           {"background", color_json(s.background)},
           {"train_cycles", s.train_cycles},
           {"train_phase", s.train_phase},
           {"test_cycles", s.test_cycles},
           {"test_phases", s.test_phases},
           {"supersample", s.supersample},
           {"orbit_radius", s.orbit_radius},
           {"train_elevation", s.train_elevation},
           {"test_elevation", s.test_elevation},
           {"test_azimuth_offset", s.test_azimuth_offset},
           {"fov", s.fov},
           {"near", s.near},
           {"far", s.far},
           {"density", s.density},
           {"softness", s.softness},
           {"samples_per_ray", s.samples_per_ray}};
    return j.dump(2);
}

SyntheticSceneSpec synthetic_spec_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        const FieldMode mode = parse_field_mode(j.value("mode", std::string("2d")));
        SyntheticSceneSpec s = SyntheticSceneSpec::defaults(mode);
        s.width = j.value("width", s.width);
        s.height = j.value("height", s.height);
        s.train_frames = j.value("train_frames", s.train_frames);
        s.test_frames = j.value("test_frames", s.test_frames);
        s.annotation_fraction = j.value("annotation_fraction", s.annotation_fraction);
        s.seed = j.value("seed", s.seed);
        if (j.contains("objects")) {
            s.objects.clear();
            for (const json& o : j.at("objects")) {
                s.objects.push_back({o.at("attribute").get<std::string>(), color_from(o.at("center")),
                                     o.at("radius").get<double>(), color_from(o.at("color_low")),
                                     color_from(o.at("color_high"))});
            }
        }
        if (j.contains("background")) s.background = color_from(j.at("background"));
        s.train_cycles = j.value("train_cycles", s.train_cycles);
        s.train_phase = j.value("train_phase", s.train_phase);
        s.test_cycles = j.value("test_cycles", s.test_cycles);
        s.test_phases = j.value("test_phases", s.test_phases);
        s.supersample = j.value("supersample", s.supersample);
        s.orbit_radius = j.value("orbit_radius", s.orbit_radius);
        s.train_elevation = j.value("train_elevation", s.train_elevation);
        s.test_elevation = j.value("test_elevation", s.test_elevation);
        s.test_azimuth_offset = j.value("test_azimuth_offset", s.test_azimuth_offset);
        s.fov = j.value("fov", s.fov);
        s.near = j.value("near", s.near);
        s.far = j.value("far", s.far);
        s.density = j.value("density", s.density);
        s.softness = j.value("softness", s.softness);
        s.samples_per_ray = j.value("samples_per_ray", s.samples_per_ray);
        s.validate();
        return s;
    } catch (const json::exception& e) {
        throw DataError(std::string("invalid synthetic spec: ") + e.what());
    } catch (const ContractViolation& e) {
        throw DataError(std::string("invalid synthetic spec: ") + e.what());
    }
}

namespace {

Frame render_disks(const SyntheticSceneSpec& s, const std::vector<double>& attributes) {
    const int n = s.supersample;
    const std::size_t count = s.objects.size();
    std::vector<std::array<double, 3>> colors;
    for (std::size_t a = 0; a < count; ++a) colors.push_back(lerp_color(s.objects[a], attributes[a]));
    Frame f;
    f.image = Image(s.width, s.height, 3);
    f.masks.assign(count, Image(s.width, s.height, 1));
    f.attributes = attributes;
    auto covering = [&](double u, double v) -> int {
        for (std::size_t a = 0; a < count; ++a) {
            const SyntheticObject& o = s.objects[a];
            const double du = u - o.center[0];
            const double dv = v - o.center[1];
            if (du * du + dv * dv <= o.radius * o.radius) return static_cast<int>(a);
        }
        return -1;
    };
    for (int y = 0; y < s.height; ++y) {
        for (int x = 0; x < s.width; ++x) {
            std::array<double, 3> acc{};
            for (int sy = 0; sy < n; ++sy) {
                for (int sx = 0; sx < n; ++sx) {
                    const double u = 2.0 * (x + (sx + 0.5) / n) / s.width - 1.0;
                    const double v = 2.0 * (y + (sy + 0.5) / n) / s.height - 1.0;
                    const int hit = covering(u, v);
                    const auto& c = hit < 0 ? s.background : colors[static_cast<std::size_t>(hit)];
                    for (int k = 0; k < 3; ++k) acc[k] += c[k];
                }
            }
            for (int k = 0; k < 3; ++k) f.image.at(x, y, k) = acc[k] / (n * n);
            const auto centre = pixel_to_plane(PixelCoord{x, y}, s.width, s.height);
            const int hit = covering(centre[0], centre[1]);
            if (hit >= 0) f.masks[static_cast<std::size_t>(hit)].at(x, y, 0) = 1.0;
        }
    }
    return f;
}

Frame render_spheres(const SyntheticSceneSpec& s, const std::vector<double>& attributes, const Camera& camera) {
    const std::size_t count = s.objects.size();
    const int channels = 3 + static_cast<int>(count);
    std::vector<std::array<double, 3>> colors;
    for (std::size_t a = 0; a < count; ++a) colors.push_back(lerp_color(s.objects[a], attributes[a]));
    Frame f;
    f.image = Image(s.width, s.height, 3);
    f.masks.assign(count, Image(s.width, s.height, 1));
    f.attributes = attributes;
    f.camera = camera;
    std::vector<double> sigma(static_cast<std::size_t>(s.samples_per_ray));
    std::vector<double> payload(sigma.size() * static_cast<std::size_t>(channels));
    std::vector<double> occupancy(count);
    for (int y = 0; y < s.height; ++y) {
        for (int x = 0; x < s.width; ++x) {
            const Ray ray = generate_ray(camera, PixelCoord{x, y});
            const std::vector<double> depths = sample_ray(ray, s.samples_per_ray, false, nullptr);
            for (std::size_t i = 0; i < depths.size(); ++i) {
                const Eigen::Vector3d p = ray.origin + depths[i] * ray.direction;
                double total = 0.0;
                for (std::size_t a = 0; a < count; ++a) {
                    const SyntheticObject& o = s.objects[a];
                    const double d = (p - Eigen::Vector3d(o.center[0], o.center[1], o.center[2])).norm();
                    occupancy[a] = s.density / (1.0 + std::exp((d - o.radius) / s.softness));
                    total += occupancy[a];
                }
                sigma[i] = total;
                double* row = payload.data() + i * channels;
                std::fill(row, row + channels, 0.0);
                if (total <= 0.0) continue;
                for (std::size_t a = 0; a < count; ++a) {
                    const double share = occupancy[a] / total;
                    for (int k = 0; k < 3; ++k) row[k] += share * colors[a][k];
                    row[3 + a] = share;
                }
            }
            const CompositeResult r =
                composite(depths, sigma, payload, channels, ray.far, LastInterval::to_far());
            for (int k = 0; k < 3; ++k) {
                f.image.at(x, y, k) = r.payload[static_cast<std::size_t>(k)] + (1.0 - r.opacity) * s.background[k];
            }
            for (std::size_t a = 0; a < count; ++a) {
                f.masks[a].at(x, y, 0) = r.payload[3 + a] >= 0.5 ? 1.0 : 0.0;
            }
        }
    }
    return f;
}

Camera split_camera(const SyntheticSceneSpec& s, int i, int count, bool test) {
    const double azimuth = 360.0 * phase_position(i, count) + (test ? s.test_azimuth_offset : 0.0);
    const double elevation = test ? s.test_elevation : s.train_elevation;
    return Camera::orbit(azimuth, elevation, s.orbit_radius, s.width, s.height, s.fov, s.near, s.far);
}

Dataset build_split(const SyntheticSceneSpec& s, bool test) {
    const int count = test ? s.test_frames : s.train_frames;
    Dataset d;
    DatasetManifest& m = d.manifest;
    m.mode = s.mode;
    m.split = test ? "test" : "train";
    m.width = s.width;
    m.height = s.height;
    for (const SyntheticObject& o : s.objects) m.attributes.push_back(o.attribute);
    for (int i = 0; i < count; ++i) {
        const std::vector<double> attributes = test ? s.test_attributes(i) : s.train_attributes(i);
        std::optional<Camera> camera;
        if (s.mode == FieldMode::k3D) camera = split_camera(s, i, count, test);
        Frame f = render_synthetic_frame(s, attributes, camera);
        f.annotations.resize(s.objects.size());
        FrameRecord r;
        r.index = i;
        r.image = "frames/" + frame_name(i) + ".png";
        r.camera = camera;
        r.attributes = attributes;
        for (const SyntheticObject& o : s.objects) r.masks.push_back("masks/" + frame_name(i) + "_" + o.attribute + ".png");
        m.frames.push_back(std::move(r));
        d.frames.push_back(std::move(f));
    }
    if (test) return d;

    // Each attribute gets its own random subset: one frame drawn uniformly
    // from each of `per_attribute` equal runs of the split.
    const int per_attribute = std::clamp(static_cast<int>(std::lround(s.annotation_fraction * count)), 1, count);
    Rng rng = make_rng(s.seed, 0x616e6e6f74ULL);
    for (std::size_t a = 0; a < s.objects.size(); ++a) {
        std::vector<int> chosen;
        for (int k = 0; k < per_attribute; ++k) {
            const int begin = static_cast<int>(static_cast<std::int64_t>(k) * count / per_attribute);
            const int end = static_cast<int>(static_cast<std::int64_t>(k + 1) * count / per_attribute);
            chosen.push_back(begin + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(end - begin))));
        }
        for (int i : chosen) {
            Frame& f = d.frames[static_cast<std::size_t>(i)];
            f.annotations[a] = Annotation{f.attributes[a], f.masks[a]};
            m.annotations.push_back(AnnotationRecord{i, s.objects[a].attribute, f.attributes[a],
                                                     m.frames[static_cast<std::size_t>(i)].masks[a]});
        }
    }
    std::sort(m.annotations.begin(), m.annotations.end(), [](const AnnotationRecord& x, const AnnotationRecord& y) {
        return std::tie(x.frame, x.attribute) < std::tie(y.frame, y.attribute);
    });
    return d;
}

}  // namespace

Frame render_synthetic_frame(const SyntheticSceneSpec& spec, const std::vector<double>& attributes,
                             const std::optional<Camera>& camera) {
    require(attributes.size() == spec.objects.size(), "one attribute value per synthetic object");
    Frame f = spec.mode == FieldMode::k2D ? render_disks(spec, attributes)
                                          : render_spheres(spec, attributes, camera.value());
    f.image = quantize(f.image);
    return f;
}

SyntheticDataset generate_synthetic(const SyntheticSceneSpec& spec) {
    spec.validate();
    return SyntheticDataset{build_split(spec, false), build_split(spec, true)};
}

}  // namespace conerf
