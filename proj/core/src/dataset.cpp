// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#include "conerf/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "conerf/error.hpp"

namespace conerf {

using nlohmann::json;

int DatasetManifest::attribute_index(const std::string& name) const {
    const auto it = std::find(attributes.begin(), attributes.end(), name);
    return it == attributes.end() ? -1 : static_cast<int>(it - attributes.begin());
}

std::string manifest_to_json(const DatasetManifest& m) {
    json frames = json::array();
    for (const FrameRecord& f : m.frames) {
        json j{{"index", f.index}, {"image", f.image}};
        if (f.camera) j["camera"] = json::parse(camera_to_json(*f.camera));
        if (!f.attributes.empty()) j["attributes"] = f.attributes;
        if (!f.masks.empty()) j["masks"] = f.masks;
        frames.push_back(std::move(j));
    }
    json annotations = json::array();
    for (const AnnotationRecord& a : m.annotations) {
        annotations.push_back({{"frame", a.frame}, {"attribute", a.attribute}, {"value", a.value}, {"mask", a.mask}});
    }
    json j{{"version", m.version},     {"mode", to_string(m.mode)}, {"split", m.split},
           {"width", m.width},         {"height", m.height},        {"attributes", m.attributes},
           {"frames", std::move(frames)}, {"annotations", std::move(annotations)}};
    return j.dump(2);
}

namespace {

void validate_manifest(const DatasetManifest& m) {
    if (m.version != kManifestVersion) {
        throw DataError("unsupported manifest version " + std::to_string(m.version));
    }
    if (m.width <= 0 || m.height <= 0) throw DataError("manifest image extents must be positive");
    std::set<std::string> names;
    for (const std::string& a : m.attributes) {
        if (a.empty() || !names.insert(a).second) throw DataError("attribute names must be unique and non-empty");
    }
    const int count = static_cast<int>(m.frames.size());
    for (int i = 0; i < count; ++i) {
        const FrameRecord& f = m.frames[static_cast<std::size_t>(i)];
        if (f.index != i) throw DataError("frame indices must run 0..N-1 in order; found " + std::to_string(f.index));
        if (m.mode == FieldMode::k3D && !f.camera) {
            throw DataError("frame " + std::to_string(i) + " has no camera in a 3D manifest");
        }
        if (!f.attributes.empty() && f.attributes.size() != m.attributes.size()) {
            throw DataError("frame " + std::to_string(i) + " lists the wrong number of attribute values");
        }
        for (double v : f.attributes) {
            if (!(v >= -1.0 && v <= 1.0)) {
                throw DataError("attribute value out of range [-1, 1] in frame " + std::to_string(i));
            }
        }
        if (!f.masks.empty() && f.masks.size() != m.attributes.size()) {
            throw DataError("frame " + std::to_string(i) + " lists the wrong number of masks");
        }
        if (f.camera && (f.camera->width != m.width || f.camera->height != m.height)) {
            throw DataError("camera extents of frame " + std::to_string(i) + " do not match the manifest");
        }
    }
    std::set<std::pair<int, std::string>> seen;
    for (const AnnotationRecord& a : m.annotations) {
        if (a.frame < 0 || a.frame >= count) {
            throw DataError("annotation references unknown frame " + std::to_string(a.frame));
        }
        if (m.attribute_index(a.attribute) < 0) {
            throw DataError("annotation references unknown attribute '" + a.attribute + "'");
        }
        if (!(a.value >= -1.0 && a.value <= 1.0)) {
            throw DataError("annotation value out of range [-1, 1] for frame " + std::to_string(a.frame));
        }
        if (!seen.emplace(a.frame, a.attribute).second) {
            throw DataError("duplicate annotation for frame " + std::to_string(a.frame) + ", attribute '" +
                            a.attribute + "'");
        }
        if (a.mask.empty()) throw DataError("annotation for frame " + std::to_string(a.frame) + " has no mask");
    }
}

}  // namespace

DatasetManifest manifest_from_json(const std::string& text) {
    DatasetManifest m;
    try {
        const json j = json::parse(text);
        m.version = j.at("version").get<int>();
        m.mode = parse_field_mode(j.at("mode").get<std::string>());
        m.split = j.value("split", std::string("train"));
        m.width = j.at("width").get<int>();
        m.height = j.at("height").get<int>();
        m.attributes = j.at("attributes").get<std::vector<std::string>>();
        for (const json& f : j.at("frames")) {
            FrameRecord r;
            r.index = f.at("index").get<int>();
            r.image = f.at("image").get<std::string>();
            if (f.contains("camera")) r.camera = camera_from_json(f.at("camera").dump());
            r.attributes = f.value("attributes", std::vector<double>{});
            r.masks = f.value("masks", std::vector<std::string>{});
            m.frames.push_back(std::move(r));
        }
        for (const json& a : j.value("annotations", json::array())) {
            m.annotations.push_back(AnnotationRecord{a.at("frame").get<int>(), a.at("attribute").get<std::string>(),
                                                     a.at("value").get<double>(), a.at("mask").get<std::string>()});
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed manifest: ") + e.what());
    } catch (const ContractViolation& e) {
        throw DataError(std::string("malformed manifest: ") + e.what());
    }
    validate_manifest(m);
    return m;
}

bool Frame::annotated() const {
    return std::any_of(annotations.begin(), annotations.end(), [](const auto& a) { return a.has_value(); });
}

std::vector<int> Dataset::annotated_frames() const {
    std::vector<int> out;
    for (int i = 0; i < num_frames(); ++i) {
        if (frames[static_cast<std::size_t>(i)].annotated()) out.push_back(i);
    }
    return out;
}

bool Dataset::has_ground_truth_attributes() const {
    return !frames.empty() &&
           std::all_of(frames.begin(), frames.end(), [](const Frame& f) { return !f.attributes.empty(); });
}

bool Dataset::has_ground_truth_masks() const {
    return !frames.empty() &&
           std::all_of(frames.begin(), frames.end(), [](const Frame& f) { return !f.masks.empty(); });
}

namespace {

Image load_checked(const std::filesystem::path& path, int channels, const DatasetManifest& m) {
    Image image = read_png(path, channels);
    if (image.width != m.width || image.height != m.height) {
        throw DataError("shape mismatch: " + path.string() + " is " + std::to_string(image.width) + "x" +
                        std::to_string(image.height) + ", manifest expects " + std::to_string(m.width) + "x" +
                        std::to_string(m.height));
    }
    return image;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& path) {
    const std::filesystem::path file = std::filesystem::is_directory(path) ? path / kManifestFile : path;
    std::ifstream in(file);
    if (!in) throw DataError("missing file: " + file.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    Dataset d;
    d.manifest = manifest_from_json(buffer.str());
    const std::filesystem::path root = file.parent_path();
    const DatasetManifest& m = d.manifest;
    const std::size_t attrs = m.attributes.size();
    for (const FrameRecord& r : m.frames) {
        Frame f;
        f.image = load_checked(root / r.image, 3, m);
        f.camera = r.camera;
        f.attributes = r.attributes;
        for (const std::string& mask : r.masks) f.masks.push_back(binarize(load_checked(root / mask, 1, m)));
        f.annotations.resize(attrs);
        d.frames.push_back(std::move(f));
    }
    for (const AnnotationRecord& a : m.annotations) {
        Annotation ann{a.value, binarize(load_checked(root / a.mask, 1, m))};
        d.frames[static_cast<std::size_t>(a.frame)].annotations[static_cast<std::size_t>(m.attribute_index(a.attribute))] =
            std::move(ann);
    }
    return d;
}

void save_dataset(const Dataset& d, const std::filesystem::path& dir) {
    const DatasetManifest& m = d.manifest;
    require(d.frames.size() == m.frames.size(), "dataset frames do not match the manifest");
    auto write = [&](const std::string& rel, const Image& image) {
        const std::filesystem::path p = dir / rel;
        std::filesystem::create_directories(p.parent_path());
        write_png(p, image);
    };
    std::set<std::string> written;
    for (std::size_t i = 0; i < m.frames.size(); ++i) {
        const FrameRecord& r = m.frames[i];
        const Frame& f = d.frames[i];
        write(r.image, f.image);
        require(r.masks.size() == f.masks.size(), "frame masks do not match the manifest");
        for (std::size_t a = 0; a < r.masks.size(); ++a) {
            write(r.masks[a], f.masks[a]);
            written.insert(r.masks[a]);
        }
    }
    for (const AnnotationRecord& a : m.annotations) {
        if (written.count(a.mask)) continue;
        const auto& slot = d.frames[static_cast<std::size_t>(a.frame)]
                               .annotations[static_cast<std::size_t>(m.attribute_index(a.attribute))];
        require(slot.has_value(), "annotation record without annotation data");
        write(a.mask, slot->mask);
        written.insert(a.mask);
    }
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / kManifestFile);
    if (!out) throw DataError("cannot write " + (dir / kManifestFile).string());
    out << manifest_to_json(m) << '\n';
}

}  // namespace conerf
