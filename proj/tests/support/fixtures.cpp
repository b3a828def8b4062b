// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#include "fixtures.hpp"

#include <atomic>
#include <fstream>
#include <sstream>

#include <unistd.h>

namespace conerf::testing {

SyntheticSceneSpec tiny_spec(FieldMode mode, int size, int train_frames, int test_frames) {
    SyntheticSceneSpec spec = SyntheticSceneSpec::defaults(mode);
    spec.width = size;
    spec.height = size;
    spec.train_frames = train_frames;
    spec.test_frames = test_frames;
    spec.annotation_fraction = 0.25;
    spec.supersample = 2;
    spec.samples_per_ray = 64;
    return spec;
}

ModelConfig tiny_model(const Dataset& dataset) {
    ModelConfig c = ModelConfig::desk(dataset.mode(), dataset.num_attributes(), dataset.num_frames());
    c.canonicalizer = {{16, 16}, {}};
    c.attribute_map = {{16, 16}, {}};
    c.hypermap = {{16, 16}, {}};
    c.attribute_hypermap = c.hypermap;
    c.mask = {{16, 16}, {}};
    c.trunk = {{32, 32}, {}};
    c.color_width = 16;
    return c;
}

TempDir::TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("conerf_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

}  // namespace conerf::testing
